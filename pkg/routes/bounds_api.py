from flask import Blueprint, jsonify, request

from bound_catalog import BOUNDS, OPERATOR_ARGS, evaluate_bound
from payloads import state_from

bounds_api = Blueprint("bounds_api", __name__)


def _bad_request(message: str, status_code: int = 400):
    return jsonify({"ok": False, "error": message}), status_code


@bounds_api.get("/bounds")
def list_bounds():
    return jsonify({
        "ok": True,
        "bounds": [{"name": name, "arguments": list(args)} for name, args in BOUNDS.items()]
    })


@bounds_api.post("/bounds/<name>")
def compute_bound(name: str):
    if name not in BOUNDS:
        return _bad_request(f"Unknown bound '{name}'", 404)

    data = request.get_json(silent=True) or {}
    args = {}
    for key in BOUNDS[name]:
        if key in OPERATOR_ARGS:
            args[key] = state_from(data, key, required=False)
        elif data.get(key) is not None:
            try:
                args[key] = float(data[key])
            except (TypeError, ValueError):
                return _bad_request(f"Invalid {key}")

    return jsonify({"ok": True, **evaluate_bound(name, **args)})
