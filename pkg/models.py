from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from config import Config
from errors import (
    DimensionMismatchError,
    InvalidStateError,
    LayoutError,
    NotHermitianError,
    PreconditionError,
)


def _frozen(matrix):
    arr = np.array(matrix, dtype=complex)
    arr.setflags(write=False)
    return arr


def fingerprint(*operators):
    """Short stable hash of operator entries, rounded to 12 digits"""
    digest = hashlib.sha256()
    for op in operators:
        arr = op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)
        digest.update(np.round(arr, 12).tobytes())
    return digest.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray

    @classmethod
    def from_matrix(cls, matrix, tol=None):
        arr = np.asarray(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"Operator must be square, got shape {arr.shape}")
        tol = Config.HERMITIAN_TOL if tol is None else tol
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        asymmetry = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
        if asymmetry > tol * scale:
            raise NotHermitianError(
                f"Operator is not Hermitian: max |H - H^dagger| = {asymmetry:.3e}",
                asymmetry=asymmetry,
            )
        return cls(_frozen((arr + arr.conj().T) / 2))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def max_abs(self):
        return float(np.max(np.abs(self.matrix)))

    def to_dict(self):
        return {
            "dim": self.dim,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise DimensionMismatchError("'re' and 'im' must have the same shape")
        op = cls.from_matrix(re + 1j * im)
        if "dim" in data and int(data["dim"]) != op.dim:
            raise DimensionMismatchError(f"Declared dim {data['dim']} does not match entries ({op.dim})")
        return op


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    op: HermitianOperator

    @classmethod
    def from_matrix(cls, matrix, tol=None):
        """Validate a PSD unit-trace operator, absorbing roundoff below tol"""
        tol = Config.STATE_TOL if tol is None else tol
        op = HermitianOperator.from_matrix(matrix)
        arr = op.matrix
        evals, evecs = np.linalg.eigh(arr)
        if evals[0] < -tol:
            raise InvalidStateError(
                f"State has negative eigenvalue {evals[0]:.3e}", min_eigenvalue=evals[0]
            )
        if evals[0] < 0:
            evals = np.clip(evals, 0.0, None)
            arr = (evecs * evals) @ evecs.conj().T
        trace = float(np.real(np.trace(arr)))
        if abs(trace - 1.0) > tol:
            raise InvalidStateError(f"State trace is {trace:.12f}, expected 1", trace=trace)
        arr = arr / trace
        return cls(HermitianOperator(_frozen((arr + arr.conj().T) / 2)))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls.from_matrix(np.eye(dim) / dim)

    @classmethod
    def pure(cls, vector):
        psi = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidStateError("Cannot build a state from the zero vector")
        psi = psi / norm
        return cls.from_matrix(np.outer(psi, psi.conj()))

    @classmethod
    def diagonal(cls, probabilities):
        return cls.from_matrix(np.diag(np.asarray(probabilities, dtype=float)))

    @property
    def matrix(self):
        return self.op.matrix

    @property
    def dim(self):
        return self.op.dim

    def mix(self, other, p):
        """p * self + (1 - p) * other"""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Cannot mix dims {self.dim} and {other.dim}")
        return DensityMatrix.from_matrix(p * self.matrix + (1 - p) * other.matrix)

    def to_dict(self):
        return self.op.to_dict()

    @classmethod
    def from_dict(cls, data):
        return cls.from_matrix(HermitianOperator.from_dict(data).matrix)


@dataclass(frozen=True)
class SubsystemLayout:
    labels: tuple
    factor_dims: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.factor_dims):
            raise LayoutError("Layout needs one dimension per label")
        if len(set(self.labels)) != len(self.labels):
            raise LayoutError(f"Duplicate subsystem labels: {self.labels}")
        if any(int(d) < 1 for d in self.factor_dims):
            raise LayoutError(f"Factor dimensions must be positive: {self.factor_dims}")

    @classmethod
    def of(cls, **dims):
        return cls(tuple(dims), tuple(int(d) for d in dims.values()))

    @property
    def total_dim(self):
        return int(np.prod(self.factor_dims))

    def dim_of(self, *labels):
        return int(np.prod([self.factor_dims[self.index(label)] for label in labels]))

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"Unknown subsystem '{label}', layout has {list(self.labels)}")

    def check(self, dim):
        if self.total_dim != dim:
            raise LayoutError(f"Layout dims {self.factor_dims} multiply to {self.total_dim}, operator has dim {dim}")

    def restrict(self, keep):
        keep = [label for label in self.labels if label in keep]
        return SubsystemLayout(tuple(keep), tuple(self.factor_dims[self.index(k)] for k in keep))

    def to_dict(self):
        return {"labels": list(self.labels), "dims": list(self.factor_dims)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["labels"]), tuple(int(d) for d in data["dims"]))


@dataclass(frozen=True)
class EntropyValue:
    value: float
    near_singular: bool = False

    @property
    def finite(self):
        return bool(np.isfinite(self.value))

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        return {
            "value": _jsonable(float(self.value)),
            "finite": self.finite,
            "near_singular": self.near_singular,
        }


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = Config.QUAD_ABS_TOL
    max_subdivisions: int = Config.QUAD_MAX_SUBDIVISIONS
    truncation: Optional[float] = None  # None: chosen from the tail bound

    def __post_init__(self):
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.truncation is not None and self.truncation <= 0:
            raise ValueError("truncation must be positive")

    @staticmethod
    def tail_mass(T):
        """Mass of the beta0 density outside [-T, T]"""
        return 2.0 / (1.0 + np.exp(np.pi * T))

    def truncation_for(self, scale=1.0):
        needed = np.log(max(20.0 * scale / self.abs_tol, 2.0)) / np.pi
        if self.truncation is None:
            return float(max(needed, 1.0))
        return float(max(self.truncation, needed))

    def halved(self):
        return QuadratureConfig(self.abs_tol / 2, self.max_subdivisions, self.truncation)


@dataclass(frozen=True)
class RemainderFunction:
    kind: str
    constants: dict
    provenance: str
    evaluator: Callable = field(repr=False)

    def __call__(self, p):
        return self.evaluator(p)

    def to_dict(self, p_grid=None):
        payload = {
            "kind": self.kind,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "provenance": self.provenance,
        }
        if p_grid is not None:
            payload["values"] = [{"p": float(p), "f": float(self(p))} for p in p_grid]
        return payload


@dataclass(frozen=True)
class DomainDescriptor:
    """A state set S0: membership predicate, sampler and perturbing state"""

    name: str
    contains: Callable = field(repr=False)
    sample: Callable = field(repr=False)  # rng -> DensityMatrix
    tau: Optional[DensityMatrix] = field(default=None, repr=False)


@dataclass(frozen=True)
class AlaffFunction:
    name: str
    evaluate: Callable = field(repr=False)
    a_f: Callable = field(repr=False)
    b_f: Callable = field(repr=False)
    domain: DomainDescriptor = field(repr=False)
    t: float = 0.0
    C_f_t: Optional[float] = None  # None means "estimate"

    def __post_init__(self):
        if not 0.0 <= self.t < 1.0:
            raise ValueError(f"Perturbance t must lie in [0, 1), got {self.t}")


@dataclass
class BoundReport:
    bound_name: str
    measured: float
    bound: float
    epsilon: Optional[float] = None
    inputs_fingerprint: str = ""
    dims: tuple = ()
    trial: Optional[int] = None
    details: dict = field(default_factory=dict)
    tol: float = Config.REPORT_TOL
    floor: Optional[float] = None  # two-sided checks: measured must also stay above floor

    @property
    def margin(self):
        return float(self.bound - self.measured)

    @property
    def passed(self):
        if not np.isfinite(self.measured) or np.isnan(self.bound):
            return False
        above_floor = self.floor is None or self.measured - self.floor >= -self.tol
        return bool(self.margin >= -self.tol and above_floor)

    def to_dict(self):
        return {
            "bound_name": self.bound_name,
            "trial": self.trial,
            "inputs_fingerprint": self.inputs_fingerprint,
            "dims": list(self.dims),
            "epsilon": self.epsilon,
            "measured": float(self.measured),
            "bound": float(self.bound),
            "margin": self.margin,
            "floor": None if self.floor is None else float(self.floor),
            "pass": self.passed,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }

    def csv_row(self):
        return [self.bound_name, self.epsilon, float(self.measured), float(self.bound), self.margin, self.passed]


CSV_COLUMNS = ["bound_name", "epsilon", "measured", "bound", "margin", "pass"]


@dataclass(frozen=True, eq=False)
class BasisPair:
    basis_x: np.ndarray  # columns are the vectors e_x
    basis_y: np.ndarray

    @classmethod
    def from_vectors(cls, basis_x, basis_y, tol=None):
        tol = Config.STATE_TOL if tol is None else tol
        bx = np.column_stack([np.asarray(v, dtype=complex) for v in basis_x])
        by = np.column_stack([np.asarray(v, dtype=complex) for v in basis_y])
        for name, basis in (("basis_x", bx), ("basis_y", by)):
            if basis.shape[0] != basis.shape[1]:
                raise DimensionMismatchError(f"{name} must contain exactly dim vectors")
            gram_error = float(np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[0]))))
            if gram_error > tol:
                raise InvalidStateError(f"{name} is not orthonormal (error {gram_error:.2e})")
        if bx.shape != by.shape:
            raise DimensionMismatchError("Both bases must live on the same space")
        return cls(_frozen(bx), _frozen(by))

    @property
    def dim(self):
        return self.basis_x.shape[0]

    @property
    def overlap_matrix(self):
        """|<e_x|e_y>|^2, rows indexed by x"""
        return np.abs(self.basis_x.conj().T @ self.basis_y) ** 2

    def to_dict(self):
        def vectors(basis):
            return [{"re": basis[:, k].real.tolist(), "im": basis[:, k].imag.tolist()} for k in range(basis.shape[1])]

        return {"basis_x": vectors(self.basis_x), "basis_y": vectors(self.basis_y)}

    @classmethod
    def from_dict(cls, data):
        def vectors(items):
            return [np.asarray(v["re"], dtype=float) + 1j * np.asarray(v.get("im", [0.0] * len(v["re"])), dtype=float) for v in items]

        return cls.from_vectors(vectors(data["basis_x"]), vectors(data["basis_y"]))


@dataclass(frozen=True)
class ConvexSetDescriptor:
    name: str
    parametrization: Callable = field(repr=False)  # theta -> DensityMatrix
    n_params: int
    anchor: DensityMatrix = field(repr=False)  # a full-rank member
    contains_full_rank: bool = True
    convex: bool = True
    closed_form: Optional[Callable] = field(default=None, repr=False)  # (rho, kind) -> value or None
    warm_start: Optional[Callable] = field(default=None, repr=False)  # rho -> theta or None


@dataclass
class OptimizationResult:
    value: float
    minimizer: DensityMatrix
    converged: bool
    history: list = field(default_factory=list)  # objective after each iteration of the best start
    starts: list = field(default_factory=list)  # final objective per start

    def __iter__(self):
        return iter((self.value, self.minimizer))

    def to_dict(self):
        return {
            "value": float(self.value),
            "converged": self.converged,
            "minimizer": self.minimizer.to_dict(),
            "starts": [float(v) for v in self.starts],
            "iterations": len(self.history),
        }


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = Config.SOLVER_MAX_ITERS
    tol: float = Config.SOLVER_TOL
    starts: int = Config.SOLVER_STARTS
    seed: int = Config.CAMPAIGN_SEED

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in ("max_iters", "tol", "starts", "seed") if k in data}
        return cls(**known)

    def to_dict(self):
        return {"max_iters": self.max_iters, "tol": self.tol, "starts": self.starts, "seed": self.seed}


SAMPLERS = ("ginibre", "ginibre_rank_k", "pure", "min_eig_floor")


@dataclass(frozen=True)
class CampaignConfig:
    check_name: str
    dims: Optional[tuple] = None  # None: the check's default layout
    trials: int = Config.CAMPAIGN_TRIALS
    seed: int = Config.CAMPAIGN_SEED
    tol: float = Config.REPORT_TOL
    sampler: str = "ginibre"
    rank: Optional[int] = None
    floor: Optional[float] = None
    workers: int = Config.CAMPAIGN_WORKERS
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if self.trials < 1:
            raise PreconditionError("trials must be at least 1")
        if self.sampler not in SAMPLERS:
            raise PreconditionError(f"Unknown sampler '{self.sampler}', expected one of {SAMPLERS}")
        if self.fmt not in ("json", "csv"):
            raise PreconditionError("fmt must be 'json' or 'csv'")

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "dims": list(self.dims) if self.dims else None,
            "trials": self.trials,
            "seed": self.seed,
            "tol": self.tol,
            "sampler": self.sampler,
            "rank": self.rank,
            "floor": None if self.floor is None else float(self.floor),
        }


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value
