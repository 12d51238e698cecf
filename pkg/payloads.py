import json
from functools import wraps

import numpy as np
from flask import jsonify, request

from errors import DimensionMismatchError, LayoutError, PreconditionError, RelEntError
from models import BasisPair, DensityMatrix, HermitianOperator, SolverConfig, SubsystemLayout


def require_json(*fields):
    """Reject requests whose JSON body is missing or lacks any of ``fields``.

    The parsed body is passed to the view as the ``data`` keyword.
    """

    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            data = request.get_json(silent=True)
            if not isinstance(data, dict):
                return jsonify({"ok": False, "error": "Request body must be a JSON object"}), 400

            missing = [k for k in fields if data.get(k) is None]
            if missing:
                return jsonify({"ok": False, "error": f"Missing fields: {', '.join(missing)}"}), 400

            return f(*args, data=data, **kwargs)
        return decorated_function
    return decorator


def operator_from(data, key, required=True):
    """Hermitian operator in the {dim, re, im} exchange format, as an array."""
    raw = data.get(key)
    if raw is None:
        if required:
            raise PreconditionError(f"Missing operator '{key}'")
        return None
    if isinstance(raw, list):
        raw = {"re": raw}
    try:
        return HermitianOperator.from_dict(raw).matrix
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, RelEntError):
            raise
        raise DimensionMismatchError(f"Operator '{key}' is malformed: {err}")


def state_from(data, key, required=True):
    arr = operator_from(data, key, required)
    return None if arr is None else DensityMatrix.from_matrix(arr)


def layout_from(data, key="layout", dim=None):
    raw = data.get(key)
    if raw is None:
        return None
    try:
        layout = SubsystemLayout.from_dict(raw)
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, RelEntError):
            raise
        raise LayoutError(f"Layout '{key}' is malformed: {err}")
    if dim is not None:
        layout.check(dim)
    return layout


def bases_from(data, key="bases"):
    raw = data.get(key)
    if raw is None:
        return None
    return BasisPair.from_dict(raw)


def solver_from(data, key="solver"):
    return SolverConfig.from_dict(data.get(key) or {})


def floats_from(data, key, default=None):
    raw = data.get(key)
    if raw is None:
        return default
    try:
        values = np.asarray(raw, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise PreconditionError(f"'{key}' must be a list of numbers")
    return values


def load_json_file(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as err:
        raise PreconditionError(f"{path} is not valid JSON: {err}")


def load_operator_file(path, state=True):
    """Read one operator from a JSON file in the exchange format."""
    data = load_json_file(path)
    arr = operator_from({"op": data}, "op")
    return DensityMatrix.from_matrix(arr) if state else HermitianOperator.from_matrix(arr)
