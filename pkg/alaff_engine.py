"""Continuity bounds for almost locally affine (ALAFF) functionals.

An ALAFF functional f on a state set S0 satisfies

    -a_f(p) <= f(p rho + (1-p) sigma) - p f(rho) - (1-p) f(sigma) <= b_f(p)

with envelopes vanishing at p = 0. If S0 is closed under the perturbed
positive/negative-part construction (``delta_states``), then

    |f(rho) - f(sigma)| <= C eps / (1-t) + (1-t+eps)/(1-t) E_f^max(eps / (1-t+eps))

where eps is the trace distance and E_f = a_f + b_f.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy import optimize

from config import Config
from entropies import (
    binary_entropy,
    conditional_entropy,
    conditional_mutual_information,
    mutual_information,
    umegaki,
)
from errors import DomainError, PreconditionError
from models import AlaffFunction, BoundReport, DensityMatrix, DomainDescriptor, SubsystemLayout, fingerprint
from operator_core import (
    as_array,
    jordan_decomposition,
    kernel_included,
    min_nonzero_eigenvalue,
    support_projector,
    trace_distance,
)
from sampling import sample_ginibre_state, sample_supported_state

logger = logging.getLogger(__name__)

GRID_POINTS = 1024


def E_f(alaff: AlaffFunction, p):
    return float(alaff.a_f(p) + alaff.b_f(p))


def _as_envelope_sum(f):
    if isinstance(f, AlaffFunction):
        return lambda p: E_f(f, p)
    return f


def E_f_max(f, p):
    """(1 - p) max_{0 <= s <= p} E_f(s) / (1 - s).

    ``f`` is an AlaffFunction or any callable p -> E_f(p). The max is taken on
    a uniform grid and refined twice by bounded golden-section search around
    the grid argmax; the refined value is only accepted when it is larger.
    """
    if p >= 1.0:
        raise DomainError(f"E_f_max needs p < 1, got {p}")
    if p < 0.0:
        raise DomainError(f"E_f_max needs p >= 0, got {p}")
    if p == 0.0:
        return 0.0
    envelope = _as_envelope_sum(f)
    ratio = lambda s: float(envelope(s)) / (1.0 - s)
    grid = np.linspace(0.0, p, GRID_POINTS)
    values = np.fromiter((ratio(s) for s in grid), dtype=float, count=grid.size)
    k = int(np.argmax(values))
    best_s, best = float(grid[k]), float(values[k])
    width = grid[1] - grid[0]
    for _ in range(2):
        lo, hi = max(0.0, best_s - width), min(p, best_s + width)
        if hi <= lo:
            break
        result = optimize.minimize_scalar(lambda s: -ratio(s), bounds=(lo, hi), method="bounded",
                                          options={"xatol": width * 1e-3})
        if result.success and -result.fun > best:
            best_s, best = float(result.x), float(-result.fun)
        width /= 8.0
    return (1.0 - p) * best


def continuity_bound(eps, C_f_t, t, E_f):
    """C eps/(1-t) + ((1-t+eps)/(1-t)) E_f^max(eps/(1-t+eps))"""
    if C_f_t is None or not np.isfinite(C_f_t):
        raise PreconditionError("Continuity bound unavailable: C_f^t is not finite")
    if not 0.0 <= t < 1.0:
        raise DomainError(f"Perturbance t must lie in [0, 1), got {t}")
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {eps}")
    if eps == 0.0:
        return 0.0
    span = 1.0 - t
    return C_f_t * eps / span + (span + eps) / span * E_f_max(E_f, eps / (span + eps))


def delta_states(rho, sigma, tau, t):
    """Perturbed normalized parts t tau + (1-t) [rho - sigma]_{+/-} / eps."""
    if not 0.0 <= t < 1.0:
        raise DomainError(f"Perturbance t must lie in [0, 1), got {t}")
    rho_arr, sigma_arr = as_array(rho), as_array(sigma)
    eps = trace_distance(rho, sigma)
    if eps <= rho_arr.shape[0] * Config.KERNEL_RTOL:
        raise DomainError("delta_states is undefined for rho = sigma")
    positive, negative = jordan_decomposition(rho_arr - sigma_arr)
    tau_arr = as_array(tau)
    gamma_plus = DensityMatrix.from_matrix(t * tau_arr + (1 - t) * positive.matrix / eps)
    gamma_minus = DensityMatrix.from_matrix(t * tau_arr + (1 - t) * negative.matrix / eps)
    return gamma_plus, gamma_minus


def omega_representations(rho, sigma, tau, t):
    """Both convex-combination forms of the interpolating state, as arrays."""
    gamma_plus, gamma_minus = delta_states(rho, sigma, tau, t)
    eps = trace_distance(rho, sigma)
    span = 1.0 - t + eps
    left = (1 - t) / span * as_array(rho) + eps / span * gamma_minus.matrix
    right = (1 - t) / span * as_array(sigma) + eps / span * gamma_plus.matrix
    return left, right


def omega_interpolation(rho, sigma, tau, t):
    left, right = omega_representations(rho, sigma, tau, t)
    logger.debug("omega representations differ by %.2e", float(np.max(np.abs(left - right))))
    return DensityMatrix.from_matrix(left)


def estimate_C_f_t(alaff: AlaffFunction, trials, seed=Config.CAMPAIGN_SEED):
    """Empirical lower estimate of C_f^t.

    Pairs are drawn from the domain sampler and pushed to trace distance 1 - t
    through ``delta_states``; the running max of |f(gamma+) - f(gamma-)| is
    returned. This is a lower bound on the supremum, never the supremum.
    """
    rng = np.random.default_rng(seed)
    domain = alaff.domain
    best = 0.0
    usable = 0
    for _ in range(int(trials)):
        rho, sigma = domain.sample(rng), domain.sample(rng)
        tau = domain.tau if domain.tau is not None else DensityMatrix.maximally_mixed(rho.dim)
        try:
            gamma_plus, gamma_minus = delta_states(rho, sigma, tau, alaff.t)
        except DomainError:
            continue
        if not (domain.contains(gamma_plus) and domain.contains(gamma_minus)):
            continue
        usable += 1
        best = max(best, abs(float(alaff.evaluate(gamma_plus)) - float(alaff.evaluate(gamma_minus))))
    if usable == 0:
        raise PreconditionError(
            f"Domain '{domain.name}' produced no pair at trace distance {1 - alaff.t:.3g} in {trials} draws"
        )
    logger.info("C_f^t estimate for %s: %.6g from %d/%d usable pairs", alaff.name, best, usable, trials)
    return best


def check_envelopes(alaff: AlaffFunction, points=101, tol=1e-12):
    """Grid spot-check of the envelope conditions; returns the list of problems found."""
    problems = []
    grid = np.linspace(0.0, 0.5, points)
    for name, fn in (("a_f", alaff.a_f), ("b_f", alaff.b_f)):
        values = np.array([float(fn(p)) for p in grid])
        if abs(values[0]) > tol:
            problems.append(f"{name}(0) = {values[0]:.3e}, expected 0")
        if np.any(np.diff(values) < -tol):
            problems.append(f"{name} decreases on [0, 1/2]")
        if not np.all(np.isfinite(values)):
            problems.append(f"{name} is not finite on [0, 1/2]")
    return problems


def check_continuity(alaff: AlaffFunction, rho, sigma, C_f_t=None, tol=None):
    """|f(rho) - f(sigma)| against the continuity bound at their trace distance."""
    C = alaff.C_f_t if C_f_t is None else C_f_t
    eps = trace_distance(rho, sigma)
    measured = abs(float(alaff.evaluate(rho)) - float(alaff.evaluate(sigma)))
    return BoundReport(
        bound_name=f"{alaff.name}_continuity",
        measured=measured,
        bound=continuity_bound(eps, C, alaff.t, alaff),
        epsilon=eps,
        inputs_fingerprint=fingerprint(rho, sigma),
        dims=(as_array(rho).shape[0],),
        tol=Config.REPORT_TOL if tol is None else tol,
    )


def _zero(p):
    return 0.0


def all_states_domain(dim, tau=None):
    return DomainDescriptor(
        name=f"all_states_{dim}",
        contains=lambda state: as_array(state).shape == (dim, dim),
        sample=lambda rng: sample_ginibre_state(dim, int(rng.integers(1, dim + 1)), rng),
        tau=tau if tau is not None else DensityMatrix.maximally_mixed(dim),
    )


def supported_states_domain(sigma, tau=None):
    """States whose kernel contains ker sigma; tau defaults to the normalized support projector."""
    arr = as_array(sigma)
    if tau is None:
        projector = support_projector(arr).matrix
        tau = DensityMatrix.from_matrix(projector / np.trace(projector).real)
    return DomainDescriptor(
        name="supported_on_sigma",
        contains=lambda state: kernel_included(arr, state),
        sample=lambda rng: sample_supported_state(arr, None, rng),
        tau=tau,
    )


def conditional_entropy_alaff(layout: SubsystemLayout, target="A", cond_on="B", t=0.0):
    """H(A|B) is concave with defect at most h(p): a = 0, b = h, C = 2 log d_A."""
    return AlaffFunction(
        name="conditional_entropy",
        evaluate=lambda state: conditional_entropy(state, layout, cond_on, target),
        a_f=_zero,
        b_f=binary_entropy,
        domain=all_states_domain(layout.total_dim),
        t=t,
        C_f_t=2.0 * np.log(layout.dim_of(target)),
    )


def mutual_information_alaff(layout: SubsystemLayout, a="A", b="B"):
    return AlaffFunction(
        name="mutual_information",
        evaluate=lambda state: mutual_information(state, layout, a, b),
        a_f=binary_entropy,
        b_f=binary_entropy,
        domain=all_states_domain(layout.total_dim),
        C_f_t=2.0 * np.log(min(layout.dim_of(a), layout.dim_of(b))),
    )


def conditional_mutual_information_alaff(layout: SubsystemLayout, a="A", b="B", c="C", pair=None):
    """I(a:b|c); ``pair`` names the two subsystems whose smaller dimension enters C (default a, b)."""
    pair = (a, b) if pair is None else tuple(pair)
    return AlaffFunction(
        name="conditional_mutual_information",
        evaluate=lambda state: conditional_mutual_information(state, layout, a, b, c),
        a_f=binary_entropy,
        b_f=binary_entropy,
        domain=all_states_domain(layout.total_dim),
        C_f_t=2.0 * np.log(min(layout.dim_of(pair[0]), layout.dim_of(pair[1]))),
    )


def divergence_alaff(sigma):
    """rho -> D(rho || sigma) is convex with defect at most h(p): a = h, b = 0, C = log 1/m~."""
    arr = as_array(sigma)
    return AlaffFunction(
        name="divergence",
        evaluate=lambda state: umegaki(state, arr).value,
        a_f=binary_entropy,
        b_f=_zero,
        domain=supported_states_domain(arr),
        C_f_t=float(np.log(1.0 / min_nonzero_eigenvalue(arr))),
    )

