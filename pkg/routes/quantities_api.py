import logging

from flask import Blueprint, jsonify

from almost_concavity import KINDS, default_p_grid, resolve_remainder
from entropies import QUANTITIES, evaluate_quantity, to_base
from payloads import floats_from, layout_from, operator_from, require_json, state_from

quantities_api = Blueprint("quantities_api", __name__)

logger = logging.getLogger(__name__)


def _bad_request(message: str, status_code: int = 400):
    return jsonify({"ok": False, "error": message}), status_code


@quantities_api.get("/quantities")
def list_quantities():
    return jsonify({
        "ok": True,
        "quantities": [{"name": name, "arguments": args.split(",")} for name, args in QUANTITIES.items()]
    })


@quantities_api.post("/entropy")
@require_json("quantity", "rho")
def compute_entropy(data):
    name = str(data["quantity"]).strip()
    if name not in QUANTITIES:
        return _bad_request(f"Unknown quantity '{name}'", 404)

    base = str(data.get("log_base", "e"))
    if base not in ("e", "2"):
        return _bad_request("log_base must be 'e' or '2'")

    rho = state_from(data, "rho")
    sigma = state_from(data, "sigma", required=False)
    layout = layout_from(data, dim=rho.dim)

    value = evaluate_quantity(name, rho, sigma, layout)
    payload = value.to_dict()
    if value.finite:
        payload["value"] = to_base(value.value, base)
    return jsonify({"ok": True, "quantity": name, "log_base": base, **payload})


@quantities_api.post("/remainder")
@require_json("kind", "rho1", "sigma1", "rho2", "sigma2")
def compute_remainder(data):
    kind = str(data["kind"]).strip()
    if kind not in KINDS:
        return _bad_request(f"kind must be one of: {', '.join(KINDS)}")

    rho1, rho2 = state_from(data, "rho1"), state_from(data, "rho2")
    marginal = layout_from(data, "marginal_reference", dim=rho1.dim)
    if marginal is None:
        sigma1, sigma2 = state_from(data, "sigma1"), state_from(data, "sigma2")
    else:
        # rho_A (x) 1 has trace d_B
        sigma1, sigma2 = operator_from(data, "sigma1"), operator_from(data, "sigma2")
    p_grid = floats_from(data, "p_grid", default=default_p_grid())
    if any(p < 0.0 or p > 1.0 for p in p_grid):
        return _bad_request("p_grid values must lie in [0, 1]")

    remainder = resolve_remainder(
        kind,
        rho1, sigma1, rho2, sigma2,
        marginal_reference=marginal,
        general=bool(data.get("general", False)),
    )
    logger.info("Remainder %s via %s", kind, remainder.provenance)
    return jsonify({"ok": True, **remainder.to_dict(p_grid)})
