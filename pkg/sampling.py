"""Seeded random states, projectors and bases.

Every sampler takes ``seed``: an int or an existing ``numpy.random.Generator``
(the generator is used as is, so a campaign can thread one stream through
several draws).
"""
from __future__ import annotations

import numpy as np

from errors import DomainError
from models import BasisPair, DensityMatrix, HermitianOperator
from operator_core import as_array, eig_hermitian, kernel_threshold

_MASK64 = (1 << 64) - 1
MAX_RESAMPLES = 10


def trial_seed(master_seed, trial_index):
    """splitmix64 mix of (master seed, trial index)."""
    z = (int(master_seed) * 0x9E3779B97F4A7C15 + int(trial_index) + 1) & _MASK64
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def rng_for(seed):
    return np.random.default_rng(seed)


def complex_normal(shape, rng):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(dim, seed=None):
    """Haar unitary from the QR decomposition of a Ginibre matrix, phases fixed."""
    rng = rng_for(seed)
    q, r = np.linalg.qr(complex_normal((dim, dim), rng))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def sample_ginibre_state(dim, rank=None, seed=None):
    """Induced-measure state G G^dagger / tr with G of shape (dim, rank)."""
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must lie in [1, {dim}], got {rank}")
    rng = rng_for(seed)
    for _ in range(MAX_RESAMPLES):
        g = complex_normal((dim, rank), rng)
        rho = g @ g.conj().T
        rho = rho / np.trace(rho).real
        evals = np.linalg.eigvalsh(rho)
        if np.count_nonzero(evals > kernel_threshold(rho)) == rank:
            return DensityMatrix.from_matrix(rho)
    raise DomainError(f"Could not draw a rank-{rank} state in {MAX_RESAMPLES} attempts")


def sample_pure_state(dim, seed=None):
    return sample_ginibre_state(dim, 1, seed)


def sample_min_eig_floor(dim, m, seed=None):
    """(1 - dim m) ginibre + m 1, so the smallest eigenvalue is at least m."""
    if not 0 < m < 1.0 / dim:
        raise DomainError(f"Eigenvalue floor must lie in (0, 1/{dim}), got {m}")
    base = sample_ginibre_state(dim, dim, seed).matrix
    return DensityMatrix.from_matrix((1 - dim * m) * base + m * np.eye(dim))


def sample_state(sampler, dim, seed=None, rank=None, floor=None):
    if sampler == "ginibre":
        return sample_ginibre_state(dim, dim, seed)
    if sampler == "ginibre_rank_k":
        return sample_ginibre_state(dim, rank or max(1, dim - 1), seed)
    if sampler == "pure":
        return sample_pure_state(dim, seed)
    if sampler == "min_eig_floor":
        return sample_min_eig_floor(dim, floor if floor is not None else 0.5 / dim ** 2, seed)
    raise DomainError(f"Unknown sampler '{sampler}'")


def sample_supported_state(sigma, rank=None, seed=None):
    """Random state living on the support of sigma (so ker sigma is inside ker rho)."""
    evals, evecs = eig_hermitian(sigma)
    basis = evecs[:, evals > kernel_threshold(sigma)]
    k = basis.shape[1]
    inner = sample_ginibre_state(k, rank or k, seed).matrix
    return DensityMatrix.from_matrix(basis @ inner @ basis.conj().T)


def sample_psd(dim, trace, seed=None):
    """Random PSD operator with prescribed trace (rank is random)."""
    rng = rng_for(seed)
    rank = int(rng.integers(1, dim + 1))
    rho = sample_ginibre_state(dim, rank, rng).matrix
    return HermitianOperator.from_matrix(trace * rho)


def random_projector(dim, rank, seed=None):
    u = random_unitary(dim, seed)[:, :rank]
    return HermitianOperator.from_matrix(u @ u.conj().T)


def mix_with_identity(rho, weight):
    """(1 - weight) rho + weight 1/d"""
    arr = as_array(rho)
    dim = arr.shape[0]
    return DensityMatrix.from_matrix((1 - weight) * arr + weight * np.eye(dim) / dim)


def computational_basis(dim):
    return [np.eye(dim)[:, k] for k in range(dim)]


def mub_qubit_pair():
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    return BasisPair.from_vectors(computational_basis(2), [hadamard[:, 0], hadamard[:, 1]])


def rotated_basis_pair(dim, seed=None, min_overlap=1e-3):
    """Computational basis against a Haar-rotated one; redrawn until every overlap exceeds min_overlap."""
    rng = rng_for(seed)
    for _ in range(MAX_RESAMPLES):
        u = random_unitary(dim, rng)
        pair = BasisPair.from_vectors(computational_basis(dim), [u[:, k] for k in range(dim)])
        if pair.overlap_matrix.min() > min_overlap:
            return pair
    raise DomainError("Could not draw a basis pair with non-degenerate overlaps")
