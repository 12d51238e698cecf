class RelEntError(ValueError):
    """Base class for every error raised by the library."""

    status_code = 400

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        payload = {"ok": False, "error": self.message, "kind": type(self).__name__}
        if self.details:
            payload["details"] = {k: _plain(v) for k, v in self.details.items()}
        return payload


class NotHermitianError(RelEntError):
    pass


class InvalidStateError(RelEntError):
    pass


class DimensionMismatchError(RelEntError):
    pass


class LayoutError(RelEntError):
    pass


class DomainError(RelEntError):
    pass


class KernelInclusionError(RelEntError):
    pass


class PreconditionError(RelEntError):
    pass


class QuadratureError(RelEntError):
    status_code = 422

    def __init__(self, message, residual=None, **details):
        super().__init__(message, residual=residual, **details)
        self.residual = residual


class SolverError(RelEntError):
    status_code = 422

    def __init__(self, message, best_value=None, best_state=None, **details):
        super().__init__(message, best_value=best_value, **details)
        self.best_value = best_value
        self.best_state = best_state


class UnknownCheckError(RelEntError):
    status_code = 404


def _plain(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)
