import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alaff_engine import (
    E_f,
    E_f_max,
    all_states_domain,
    check_continuity,
    check_envelopes,
    conditional_entropy_alaff,
    conditional_mutual_information_alaff,
    continuity_bound,
    delta_states,
    divergence_alaff,
    estimate_C_f_t,
    mutual_information_alaff,
    omega_interpolation,
    omega_representations,
    supported_states_domain,
)
from bound_catalog import ce_bound, mi_bound
from entropies import binary_entropy
from errors import DomainError, PreconditionError
from models import AlaffFunction, DensityMatrix, DomainDescriptor, SubsystemLayout
from operator_core import trace_distance
from sampling import sample_supported_state


@given(st.floats(1e-6, 0.95))
@settings(max_examples=25, deadline=None)
def test_E_f_max_of_binary_entropy(p):
    assert E_f_max(binary_entropy, p) == pytest.approx(binary_entropy(p), abs=1e-12)


def test_E_f_max_rejects_p_outside_range():
    with pytest.raises(DomainError):
        E_f_max(binary_entropy, 1.0)
    with pytest.raises(DomainError):
        E_f_max(binary_entropy, -0.1)
    assert E_f_max(binary_entropy, 0.0) == 0.0


@pytest.mark.parametrize("eps", [0.0, 1e-3, 0.1, 0.5, 1.0])
def test_continuity_bound_reproduces_closed_forms(eps, qubit_pair):
    ce = conditional_entropy_alaff(qubit_pair)
    mi = mutual_information_alaff(qubit_pair)
    assert continuity_bound(eps, ce.C_f_t, ce.t, ce) == pytest.approx(ce_bound(eps, 2), abs=1e-10)
    assert continuity_bound(eps, mi.C_f_t, mi.t, mi) == pytest.approx(mi_bound(eps, 2, 2), abs=1e-10)


def test_continuity_bound_preconditions():
    with pytest.raises(PreconditionError):
        continuity_bound(0.1, float("inf"), 0.0, binary_entropy)
    with pytest.raises(PreconditionError):
        continuity_bound(0.1, None, 0.0, binary_entropy)
    with pytest.raises(DomainError):
        continuity_bound(0.1, 1.0, 1.0, binary_entropy)
    with pytest.raises(DomainError):
        continuity_bound(1.5, 1.0, 0.0, binary_entropy)


def test_perturbance_widens_the_bound():
    narrow = continuity_bound(0.1, 1.0, 0.0, binary_entropy)
    wide = continuity_bound(0.1, 1.0, 0.5, binary_entropy)
    assert wide > narrow


@pytest.mark.parametrize("t", [0.0, 0.3, 0.7])
def test_delta_states_are_at_distance_one_minus_t(t, random_state):
    rho, sigma = random_state(3), random_state(3)
    plus, minus = delta_states(rho, sigma, DensityMatrix.maximally_mixed(3), t)
    assert trace_distance(plus, minus) == pytest.approx(1.0 - t, abs=1e-10)


def test_omega_representations_agree(random_state):
    rho, sigma, tau = random_state(3), random_state(3), random_state(3)
    left, right = omega_representations(rho, sigma, tau, 0.3)
    assert np.abs(left - right).max() < 1e-12
    omega = omega_interpolation(rho, sigma, tau, 0.3)
    assert np.abs(omega.matrix - left).max() < 1e-12


def test_delta_states_undefined_for_equal_states(random_state):
    rho = random_state(2)
    with pytest.raises(DomainError):
        delta_states(rho, rho, rho, 0.0)
    with pytest.raises(DomainError):
        delta_states(rho, random_state(2), rho, 1.0)


def test_alaff_function_checks_perturbance(qubit_pair):
    with pytest.raises(ValueError):
        conditional_entropy_alaff(qubit_pair, t=1.0)


def test_E_f_sums_envelopes(qubit_pair):
    mi = mutual_information_alaff(qubit_pair)
    assert E_f(mi, 0.3) == pytest.approx(2 * binary_entropy(0.3))


def test_estimate_C_f_t_stays_below_closed_form(qubit_pair):
    alaff = conditional_entropy_alaff(qubit_pair)
    estimate = estimate_C_f_t(alaff, trials=20, seed=5)
    assert 0.0 < estimate <= alaff.C_f_t + 1e-10


def test_estimate_C_f_t_needs_usable_pairs():
    domain = all_states_domain(2)
    empty = AlaffFunction(
        name="never",
        evaluate=lambda state: 0.0,
        a_f=binary_entropy,
        b_f=binary_entropy,
        domain=DomainDescriptor(name="empty", contains=lambda state: False, sample=domain.sample, tau=domain.tau),
    )
    with pytest.raises(PreconditionError):
        estimate_C_f_t(empty, trials=3, seed=1)


@pytest.mark.parametrize("build", [conditional_entropy_alaff, mutual_information_alaff])
def test_catalog_envelopes_are_well_formed(build, qubit_pair):
    assert check_envelopes(build(qubit_pair)) == []


def test_check_envelopes_flags_bad_envelope(qubit_pair):
    alaff = conditional_entropy_alaff(qubit_pair)
    broken = AlaffFunction(alaff.name, alaff.evaluate, lambda p: 1.0 - p, alaff.b_f, alaff.domain)
    problems = check_envelopes(broken)
    assert any("a_f(0)" in problem for problem in problems)
    assert any("decreases" in problem for problem in problems)


def test_continuity_of_conditional_entropy(random_state, qubit_pair):
    alaff = conditional_entropy_alaff(qubit_pair)
    for _ in range(5):
        rho = random_state(4)
        sigma = DensityMatrix.from_matrix(0.9 * rho.matrix + 0.1 * random_state(4).matrix)
        report = check_continuity(alaff, rho, sigma)
        assert report.passed
        assert report.epsilon == pytest.approx(trace_distance(rho, sigma))


def test_continuity_of_conditional_mutual_information(random_state):
    layout = SubsystemLayout(("A", "B", "C"), (2, 2, 2))
    alaff = conditional_mutual_information_alaff(layout)
    rho, sigma = random_state(8), random_state(8)
    assert check_continuity(alaff, rho, sigma).passed


def test_divergence_continuity_on_supported_states(random_state, rng):
    sigma = random_state(3, rank=2)
    alaff = divergence_alaff(sigma)
    for _ in range(5):
        rho1 = sample_supported_state(sigma, None, rng)
        rho2 = sample_supported_state(sigma, None, rng)
        assert alaff.domain.contains(rho1)
        assert check_continuity(alaff, rho1, rho2).passed


def test_supported_states_domain_membership():
    sigma = np.diag([0.5, 0.5, 0.0])
    domain = supported_states_domain(sigma)
    assert domain.contains(np.diag([0.2, 0.8, 0.0]))
    assert not domain.contains(np.eye(3) / 3)
    assert np.abs(domain.tau.matrix - np.diag([0.5, 0.5, 0.0])).max() < 1e-14
