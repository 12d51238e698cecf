"""Dense Hermitian linear algebra on the supports of operators.

Every function is pure. Inputs may be ``HermitianOperator``, ``DensityMatrix``
or plain square arrays (checked for Hermiticity on entry).
"""
from __future__ import annotations

import logging
import string

import numpy as np

from config import Config
from errors import DimensionMismatchError, DomainError, InvalidStateError, LayoutError
from models import DensityMatrix, HermitianOperator, SubsystemLayout

logger = logging.getLogger(__name__)


def as_array(H):
    if isinstance(H, (HermitianOperator, DensityMatrix)):
        return H.matrix
    return HermitianOperator.from_matrix(H).matrix


def kernel_threshold(H):
    """Eigenvalues with |lambda| at or below this are treated as zero"""
    arr = as_array(H)
    if arr.size == 0:
        return 0.0
    return arr.shape[0] * float(np.max(np.abs(arr))) * Config.KERNEL_RTOL


def _check_same_dim(*ops):
    dims = {as_array(op).shape[0] for op in ops}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Operators have different dimensions: {sorted(dims)}")


def eig_hermitian(H):
    """Ascending eigenvalues and orthonormal eigenvector columns."""
    evals, evecs = np.linalg.eigh(as_array(H))
    return evals, evecs


def _rebuild(evals, evecs):
    return (evecs * evals) @ evecs.conj().T


def matrix_function(H, fn, on_support=False):
    """Apply a scalar function to the spectrum of H.

    With ``on_support`` the eigenvalues at or below the kernel threshold are
    mapped to zero and ``fn`` is only evaluated on the rest, which realizes
    log, square roots and the Moore-Penrose pseudoinverse on the support.
    """
    evals, evecs = eig_hermitian(H)
    keep = np.ones_like(evals, dtype=bool)
    if on_support:
        keep = np.abs(evals) > kernel_threshold(H)
    values = np.zeros_like(evals)
    with np.errstate(divide="ignore", invalid="ignore"):
        mapped = np.asarray(fn(evals[keep]), dtype=float)
    bad = ~np.isfinite(mapped)
    if np.any(bad):
        offending = float(evals[keep][bad][0])
        raise DomainError(f"Function undefined at eigenvalue {offending:.3e}", eigenvalue=offending)
    values[keep] = mapped
    return HermitianOperator.from_matrix(_rebuild(values, evecs))


def log_support(H):
    return matrix_function(H, np.log, on_support=True)


def sqrt_psd(H):
    return matrix_function(H, lambda x: np.sqrt(np.clip(x, 0.0, None)), on_support=True)


def pinv(H):
    return matrix_function(H, lambda x: 1.0 / x, on_support=True)


def inv_sqrt(H):
    return matrix_function(H, lambda x: 1.0 / np.sqrt(x), on_support=True)


def complex_power(P, z):
    """P**z on the support of a PSD operator; kernel eigenvalues map to zero."""
    evals, evecs = eig_hermitian(P)
    threshold = kernel_threshold(P)
    if evals[0] < -threshold:
        raise DomainError(f"Operator is not PSD: eigenvalue {evals[0]:.3e}", eigenvalue=float(evals[0]))
    support = evals > threshold
    powers = np.zeros(evals.shape, dtype=complex)
    powers[support] = np.exp(complex(z) * np.log(evals[support]))
    return (evecs * powers) @ evecs.conj().T


def trace_norm(H):
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_array(H)))))


def operator_norm(H):
    return float(np.max(np.abs(np.linalg.eigvalsh(as_array(H)))))


def trace_distance(rho, sigma):
    _check_same_dim(rho, sigma)
    value = 0.5 * trace_norm(as_array(rho) - as_array(sigma))
    return float(min(max(value, 0.0), 1.0))


def jordan_decomposition(H):
    """Positive and negative parts [H]+ and [H]- with H = [H]+ - [H]-."""
    evals, evecs = eig_hermitian(H)
    positive = HermitianOperator.from_matrix(_rebuild(np.clip(evals, 0.0, None), evecs))
    negative = HermitianOperator.from_matrix(_rebuild(np.clip(-evals, 0.0, None), evecs))
    return positive, negative


def support_projector(H, tol=None):
    evals, evecs = eig_hermitian(H)
    tol = kernel_threshold(H) if tol is None else tol
    cols = evecs[:, np.abs(evals) > tol]
    return HermitianOperator.from_matrix(cols @ cols.conj().T)


def min_nonzero_eigenvalue(H):
    """Smallest eigenvalue above the kernel threshold (m-tilde)."""
    evals = np.linalg.eigvalsh(as_array(H))
    support = evals[evals > kernel_threshold(H)]
    if support.size == 0:
        raise DomainError("Operator has no support above the kernel threshold")
    return float(support[0])


def is_full_rank(H):
    evals = np.linalg.eigvalsh(as_array(H))
    return bool(evals[0] > kernel_threshold(H))


def kernel_included(sigma, rho, tol=None):
    """ker sigma is contained in ker rho, i.e. rho lives on the support of sigma."""
    _check_same_dim(sigma, rho)
    tol = Config.STATE_TOL if tol is None else tol
    complement = np.eye(as_array(sigma).shape[0]) - support_projector(sigma).matrix
    leak = complement @ as_array(rho) @ complement
    return bool(np.max(np.abs(leak)) <= tol)


def psd_dominates(A, B, tol=None):
    """A - B is PSD up to tol."""
    _check_same_dim(A, B)
    tol = Config.STATE_TOL if tol is None else tol
    return bool(np.linalg.eigvalsh(as_array(A) - as_array(B))[0] >= -tol)


def tensor(a, b):
    return DensityMatrix.from_matrix(np.kron(as_array(a), as_array(b)))


def tensor_all(*states):
    result = np.ones((1, 1), dtype=complex)
    for state in states:
        result = np.kron(result, as_array(state))
    return DensityMatrix.from_matrix(result)


def partial_trace_array(matrix, dims, keep_idx):
    """Trace out every factor whose index is not in keep_idx."""
    n = len(dims)
    if n > len(string.ascii_letters) // 2:
        raise LayoutError("Too many subsystems for partial_trace")
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep_idx:
            col[k] = row[k]
    out_row = "".join(row[k] for k in range(n) if k in keep_idx)
    out_col = "".join(col[k] for k in range(n) if k in keep_idx)
    reshaped = np.asarray(matrix).reshape(tuple(dims) * 2)
    reduced = np.einsum(f"{''.join(row)}{''.join(col)}->{out_row}{out_col}", reshaped)
    kept = int(np.prod([dims[k] for k in keep_idx])) if keep_idx else 1
    return reduced.reshape(kept, kept)


def partial_trace(rho, layout: SubsystemLayout, keep):
    keep = [keep] if isinstance(keep, str) else list(keep)
    if not keep:
        raise LayoutError("partial_trace needs at least one subsystem to keep")
    unknown = [label for label in keep if label not in layout.labels]
    if unknown:
        raise LayoutError(f"Subsystems {unknown} are not in layout {list(layout.labels)}")
    arr = as_array(rho)
    layout.check(arr.shape[0])
    keep_idx = sorted(layout.index(label) for label in keep)
    return DensityMatrix.from_matrix(partial_trace_array(arr, layout.factor_dims, keep_idx))


def embed(matrix, layout: SubsystemLayout, labels):
    """Extend an operator on `labels` by identities on the rest.

    The operator's own factors are taken in layout order, whatever the order
    of `labels`.
    """
    labels = [labels] if isinstance(labels, str) else list(labels)
    idx = sorted(layout.index(label) for label in labels)
    rest = [k for k in range(len(layout.labels)) if k not in idx]
    arr = np.asarray(as_array(matrix) if not isinstance(matrix, np.ndarray) else matrix)
    sub_dim = int(np.prod([layout.factor_dims[k] for k in idx]))
    if arr.shape != (sub_dim, sub_dim):
        raise DimensionMismatchError(f"Operator of shape {arr.shape} does not fit subsystems {labels}")
    rest_dim = int(np.prod([layout.factor_dims[k] for k in rest])) if rest else 1
    full = np.kron(arr, np.eye(rest_dim))
    order = idx + rest
    dims = [layout.factor_dims[k] for k in order]
    n = len(order)
    perm = [order.index(k) for k in range(n)]
    reshaped = full.reshape(dims * 2)
    reshaped = reshaped.transpose(perm + [p + n for p in perm])
    total = layout.total_dim
    return reshaped.reshape(total, total)


def _check_basis(basis, dim):
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (dim, dim):
        raise DimensionMismatchError(f"Basis must be {dim}x{dim} (vectors as columns), got {basis.shape}")
    error = float(np.max(np.abs(basis.conj().T @ basis - np.eye(dim))))
    if error > Config.STATE_TOL:
        raise InvalidStateError(f"Basis is not orthonormal (error {error:.2e})")
    return basis


def pinch(rho, basis):
    """Dephase rho in the orthonormal basis whose vectors are the columns."""
    arr = as_array(rho)
    basis = _check_basis(basis, arr.shape[0])
    diag = np.real(np.einsum("iz,ij,jz->z", basis.conj(), arr, basis))
    return DensityMatrix.from_matrix((basis * diag) @ basis.conj().T)


def pinch_subsystem(rho, layout: SubsystemLayout, label, basis):
    """(E_basis on `label`) tensor identity on the other factors."""
    arr = as_array(rho)
    layout.check(arr.shape[0])
    basis = _check_basis(basis, layout.dim_of(label))
    result = np.zeros_like(arr)
    for z in range(basis.shape[1]):
        projector = embed(np.outer(basis[:, z], basis[:, z].conj()), layout, label)
        result = result + projector @ arr @ projector
    return DensityMatrix.from_matrix(result)
