import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DomainError
from operator_core import kernel_included
from sampling import (
    mix_with_identity,
    mub_qubit_pair,
    random_projector,
    random_unitary,
    rotated_basis_pair,
    sample_ginibre_state,
    sample_min_eig_floor,
    sample_psd,
    sample_state,
    sample_supported_state,
    trial_seed,
)


def test_trial_seeds_are_deterministic_and_distinct():
    assert trial_seed(42, 0) == trial_seed(42, 0)
    seeds = {trial_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert trial_seed(42, 0) != trial_seed(43, 0)
    assert all(0 <= s < 2 ** 64 for s in seeds)


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_ginibre_rank(dim, seed):
    rank = 1 + seed % dim
    rho = sample_ginibre_state(dim, rank, seed)
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-9) == rank


def test_same_seed_same_state():
    assert np.array_equal(sample_ginibre_state(3, None, 9).matrix, sample_ginibre_state(3, None, 9).matrix)
    assert not np.array_equal(sample_ginibre_state(3, None, 9).matrix, sample_ginibre_state(3, None, 10).matrix)


def test_ginibre_rejects_bad_rank():
    with pytest.raises(DomainError):
        sample_ginibre_state(3, 4, 0)


def test_min_eig_floor():
    rho = sample_min_eig_floor(4, 0.05, 3)
    assert np.linalg.eigvalsh(rho.matrix)[0] >= 0.05 - 1e-12
    with pytest.raises(DomainError):
        sample_min_eig_floor(4, 0.25, 3)


@pytest.mark.parametrize("sampler", ["ginibre", "ginibre_rank_k", "pure", "min_eig_floor"])
def test_sample_state_dispatch(sampler):
    rho = sample_state(sampler, 3, 5)
    expected_rank = {"ginibre": 3, "ginibre_rank_k": 2, "pure": 1, "min_eig_floor": 3}[sampler]
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-9) == expected_rank
    with pytest.raises(DomainError):
        sample_state("wishart", 3, 5)


def test_random_unitary_is_unitary():
    u = random_unitary(4, 1)
    assert np.abs(u.conj().T @ u - np.eye(4)).max() < 1e-12


def test_random_projector():
    P = random_projector(4, 2, 1).matrix
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.trace(P).real == pytest.approx(2.0)


def test_supported_state_stays_on_support():
    sigma = sample_ginibre_state(4, 2, 1)
    rho = sample_supported_state(sigma, None, 2)
    assert kernel_included(sigma, rho)
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-9) == 2


def test_sample_psd_has_requested_trace():
    A = sample_psd(3, 1.7, 4)
    assert np.trace(A.matrix).real == pytest.approx(1.7)
    assert np.linalg.eigvalsh(A.matrix)[0] > -1e-12


def test_mix_with_identity():
    rho = mix_with_identity(np.diag([1.0, 0.0]), 0.5)
    assert np.abs(rho.matrix - np.diag([0.75, 0.25])).max() < 1e-15


def test_basis_pairs():
    assert np.allclose(mub_qubit_pair().overlap_matrix, 0.5)
    pair = rotated_basis_pair(3, 7, min_overlap=0.01)
    assert pair.overlap_matrix.min() > 0.01
    assert np.allclose(pair.overlap_matrix.sum(axis=1), 1.0)
