import numpy as np
import pytest

from bound_catalog import (
    BOUNDS,
    admissible_m_tilde,
    bs_quantity_bound,
    bs_shape,
    bs_shape_study,
    ce_bound,
    check_bs_shape,
    check_ce_bound,
    check_cmi_bound,
    check_divergence_bound,
    check_mi_bound,
    check_second_input_bound,
    check_two_input_bound,
    cmi_bound,
    divergence_bound,
    evaluate_bound,
    mi_bound,
    second_input_bound,
)
from entropies import r_epsilon
from errors import DomainError, KernelInclusionError, PreconditionError
from models import DensityMatrix, SubsystemLayout
from operator_core import psd_dominates
from sampling import mix_with_identity, sample_supported_state

LOG2 = np.log(2.0)


def _near(rho, other, weight):
    mixed = DensityMatrix.from_matrix((1 - weight) * rho.matrix + weight * other.matrix)
    return mix_with_identity(mixed, 0.05)


def test_entropy_bound_formulas():
    assert ce_bound(0.0, 2) == 0.0
    assert ce_bound(1.0, 2) == pytest.approx(4 * LOG2)
    assert mi_bound(0.5, 2, 3) == pytest.approx(LOG2 + 2 * r_epsilon(0.5))
    assert cmi_bound(0.5, 3, 2) == mi_bound(0.5, 2, 3)
    with pytest.raises(DomainError):
        ce_bound(1.5, 2)
    with pytest.raises(DomainError):
        mi_bound(-0.1, 2, 2)


def test_divergence_bound(random_state):
    rho = random_state(3)
    assert divergence_bound(rho, rho) == (0.0, 0.0)
    with pytest.raises(KernelInclusionError):
        divergence_bound(np.eye(2) / 2, np.diag([1.0, 0.0]))


def test_divergence_bound_chain(random_state, rng):
    for rank in (1, 2, 3):
        sigma = random_state(3, rank=rank)
        rho = sample_supported_state(sigma, None, rng)
        reports = check_divergence_bound(rho, sigma)
        assert [r.bound_name for r in reports] == ["divergence_linear", "divergence_linear_vs_sqrt"]
        assert all(r.passed for r in reports)


def test_entropy_bounds_hold(random_state, qubit_pair):
    tripartite = SubsystemLayout(("A", "B", "C"), (2, 2, 2))
    for _ in range(3):
        rho = random_state(4)
        sigma = _near(rho, random_state(4), 0.2)
        assert check_ce_bound(rho, sigma, qubit_pair).passed
        assert check_mi_bound(rho, sigma, qubit_pair).passed
        big_rho, big_sigma = random_state(8), random_state(8)
        assert check_cmi_bound(big_rho, big_sigma, tripartite).passed
        assert check_cmi_bound(big_rho, big_sigma, tripartite, pair=("A", "C")).details["pair"] == "AC"


def test_admissible_m_tilde_dominates(random_state):
    rho = random_state(3)
    sigmas = (_near(rho, random_state(3), 0.3), _near(rho, random_state(3), 0.6))
    m = admissible_m_tilde(rho, sigmas)
    assert 0.0 < m < 1.0
    assert all(psd_dominates(sigma, m * rho.matrix) for sigma in sigmas)
    with pytest.raises(PreconditionError):
        admissible_m_tilde(rho, (np.diag([1.0, 0.0, 0.0]),))


def test_second_and_two_input_bounds_hold(random_state):
    for _ in range(3):
        rho = random_state(3)
        sigma1, sigma2 = _near(rho, random_state(3), 0.2), _near(rho, random_state(3), 0.5)
        report = check_second_input_bound(rho, sigma1, sigma2)
        assert report.passed
        assert report.details["m_tilde"] == pytest.approx(admissible_m_tilde(rho, (sigma1, sigma2)))
        rho2 = DensityMatrix.from_matrix(0.5 * rho.matrix + 0.5 * random_state(3).matrix)
        assert check_two_input_bound(rho, rho2, sigma1, sigma2).passed


def test_second_input_bound_preconditions(random_state):
    rho = random_state(3)
    sigma1, sigma2 = _near(rho, random_state(3), 0.2), _near(rho, random_state(3), 0.5)
    with pytest.raises(DomainError):
        second_input_bound(rho, sigma1, sigma2, 0.0)
    with pytest.raises(DomainError):
        second_input_bound(rho, sigma1, sigma2, 1.0)
    with pytest.raises(PreconditionError):
        second_input_bound(rho, sigma1, np.diag([0.98, 0.01, 0.01]), 0.9)
    assert second_input_bound(rho, sigma1, sigma1, 0.01) == 0.0


def test_bs_quantity_bound():
    assert bs_quantity_bound(0.04, 0.1, 4, 2.0) == pytest.approx(2.0 * 0.2 / (0.1 * 0.15))
    assert bs_shape(0.04, 0.1, 4) == pytest.approx(0.2 / (0.1 * 0.15))
    with pytest.raises(PreconditionError):
        bs_quantity_bound(0.04, 0.1, 4, None)
    with pytest.raises(DomainError):
        bs_quantity_bound(0.04, 0.25, 4, 1.0)


def test_bs_shape_study(qubit_pair):
    study = bs_shape_study(qubit_pair, 0.05, eps_grid=[1e-3, 1e-2, 1e-1], samples=5, seed=3)
    assert len(study["sup_difference"]) == 3
    assert study["exponent"] > 0.35
    assert study["empirical_C"] > 0.0
    assert check_bs_shape(study).passed


def _study(exponent):
    return {"eps": [1e-3, 1e-2, 1e-1], "sup_difference": [1e-4, 1e-3, 1e-2], "exponent": exponent, "empirical_C": 0.5}


@pytest.mark.parametrize("exponent, passes", [(0.2, False), (0.35, True), (0.5, True), (1.0, True), (1.5, True), (2.0, False)])
def test_bs_shape_gate(exponent, passes):
    report = check_bs_shape(_study(exponent))
    assert report.measured == exponent
    assert report.floor == 0.35
    assert report.bound == 1.5
    assert report.passed is passes


def test_evaluate_bound_dispatch(random_state):
    assert set(BOUNDS) >= {"divergence", "conditional_entropy", "second_input"}
    assert evaluate_bound("conditional_entropy", eps=0.1, d_A=2)["value"] == pytest.approx(ce_bound(0.1, 2))
    rho, sigma = random_state(2), random_state(2)
    divergence = evaluate_bound("divergence", rho=rho, sigma=sigma)
    assert divergence["value"] <= divergence["sqrt_form"] + 1e-12
    assert 0.0 < divergence["epsilon"] <= 1.0
    sigma1, sigma2 = _near(rho, random_state(2), 0.2), _near(rho, random_state(2), 0.4)
    second = evaluate_bound("second_input", rho=rho, sigma1=sigma1, sigma2=sigma2)
    assert second["m_tilde"] == pytest.approx(admissible_m_tilde(rho, (sigma1, sigma2)))


def test_evaluate_bound_errors():
    with pytest.raises(DomainError):
        evaluate_bound("pinsker", eps=0.1)
    with pytest.raises(PreconditionError):
        evaluate_bound("mutual_information", eps=0.1, d_A=2)
