import logging

from flask import Blueprint, jsonify

import applications
from payloads import bases_from, layout_from, require_json, solver_from, state_from
from sampling import mub_qubit_pair, rotated_basis_pair

applications_api = Blueprint("applications_api", __name__)

logger = logging.getLogger(__name__)

SETS = {
    "conditional_reference": applications.conditional_reference_set,
    "product": applications.product_state_set,
}


def _bad_request(message: str, status_code: int = 400):
    return jsonify({"ok": False, "error": message}), status_code


@applications_api.post("/uncertainty")
@require_json("rho", "layout")
def uncertainty(data):
    rho = state_from(data, "rho")
    layout = layout_from(data, dim=rho.dim)
    if len(layout.labels) != 2:
        return _bad_request("layout must have exactly two subsystems (system, memory)")
    system, memory = layout.labels

    bases = bases_from(data)
    if bases is None:
        d_a = layout.dim_of(system)
        bases = mub_qubit_pair() if d_a == 2 else rotated_basis_pair(d_a, int(data.get("seed", 0)))

    report = applications.check_uncertainty(rho, layout, bases, system, memory)
    return jsonify({"ok": True, "report": report.to_dict()})


@applications_api.post("/markov")
@require_json("rho", "layout")
def markov(data):
    rho = state_from(data, "rho")
    layout = layout_from(data, dim=rho.dim)
    if len(layout.labels) != 3:
        return _bad_request("layout must have exactly three subsystems")

    lower, cmi, upper = applications.markov_sandwich(rho, layout, layout.labels)
    return jsonify({"ok": True, "lower": lower, "cmi": cmi, "upper": upper})


@applications_api.post("/optimize")
@require_json("rho", "layout")
def optimize(data):
    set_name = str(data.get("set", "conditional_reference"))
    if set_name not in SETS:
        return _bad_request(f"set must be one of: {', '.join(SETS)}")
    kind = str(data.get("kind", "umegaki"))

    rho = state_from(data, "rho")
    layout = layout_from(data, dim=rho.dim)
    if len(layout.labels) != 2:
        return _bad_request("layout must have exactly two subsystems")

    C = SETS[set_name](layout, *layout.labels)
    solver = solver_from(data)
    result = applications.optimized_divergence(rho, C, kind, solver)
    logger.info("Optimized %s divergence over %s: %.6g (converged=%s)", kind, C.name, result.value, result.converged)

    return jsonify({
        "ok": True,
        "set": C.name,
        "kind": kind,
        "closed_form": C.closed_form(rho, kind),
        "solver": solver.to_dict(),
        **result.to_dict(),
    })
