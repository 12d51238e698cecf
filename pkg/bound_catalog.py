"""Closed-form continuity and divergence bounds.

Each bound is a pure formula with its preconditions checked; ``check_*``
helpers compare a bound with the quantity it controls and return
``BoundReport`` records for the harness.
"""
from __future__ import annotations

import logging

import numpy as np

from config import Config
from entropies import (
    bs_conditional_entropy,
    conditional_entropy,
    conditional_mutual_information,
    mutual_information,
    r_epsilon,
    umegaki,
)
from errors import DomainError, KernelInclusionError, PreconditionError
from models import BoundReport, SubsystemLayout, fingerprint
from operator_core import (
    as_array,
    inv_sqrt,
    is_full_rank,
    kernel_included,
    min_nonzero_eigenvalue,
    psd_dominates,
    trace_distance,
    trace_norm,
)
from sampling import rng_for, sample_min_eig_floor

logger = logging.getLogger(__name__)

M_TILDE_CEILING = 1.0 - 1e-6
M_TILDE_SAFETY = 0.9
BS_SHAPE_MIN_EXPONENT = 0.35
BS_SHAPE_MAX_EXPONENT = 1.5


def _check_epsilon(eps):
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {eps}")


def divergence_bound(rho, sigma):
    """(eps log 1/m~ + r(eps), (1 + log(1/m~)/sqrt 2) sqrt(2 eps)) for D(rho || sigma)."""
    if not kernel_included(sigma, rho):
        raise KernelInclusionError("divergence_bound needs ker sigma inside ker rho")
    eps = trace_distance(rho, sigma)
    log_inv_m = float(np.log(1.0 / min_nonzero_eigenvalue(sigma)))
    linear = eps * log_inv_m + r_epsilon(eps)
    sqrt_form = (1.0 + log_inv_m / np.sqrt(2.0)) * np.sqrt(2.0 * eps)
    return float(linear), float(sqrt_form)


def ce_bound(eps, d_A):
    _check_epsilon(eps)
    return float(2.0 * eps * np.log(d_A) + r_epsilon(eps))


def mi_bound(eps, d_A, d_B):
    _check_epsilon(eps)
    return float(2.0 * eps * np.log(min(d_A, d_B)) + 2.0 * r_epsilon(eps))


def cmi_bound(eps, d_first, d_second):
    """Same shape as mi_bound; the caller picks which pair of dimensions enters the min.

    The default reading takes (d_A, d_B) for I(A:B|C); the Markov-chain reading
    takes (d_A, d_C).
    """
    return mi_bound(eps, d_first, d_second)


def _check_m_tilde(m):
    if not 0.0 < m <= M_TILDE_CEILING:
        raise DomainError(f"m~ must lie in (0, {M_TILDE_CEILING}], got {m}")


def _check_domination(rho, sigmas, m, rho_name="rho"):
    for j, sigma in enumerate(sigmas, start=1):
        if not kernel_included(sigma, rho):
            raise KernelInclusionError(f"ker sigma_{j} is not contained in ker {rho_name}", sigma=j)
        if not psd_dominates(sigma, m * as_array(rho)):
            raise PreconditionError(f"m~ {rho_name} <= sigma_{j} fails for m~ = {m:.6g}", sigma=j)


def second_input_bound(rho, sigma1, sigma2, m):
    """|D(rho||sigma1) - D(rho||sigma2)| <= 3 log^2(1/m~)/(1 - m~) ||sigma1 - sigma2||_1^{1/2}"""
    _check_m_tilde(m)
    _check_domination(rho, (sigma1, sigma2), m)
    distance = trace_norm(as_array(sigma1) - as_array(sigma2))
    return float(3.0 * np.log(1.0 / m) ** 2 / (1.0 - m) * np.sqrt(distance))


def two_input_bound(rho1, rho2, sigma1, sigma2, m):
    _check_m_tilde(m)
    _check_domination(rho1, (sigma1, sigma2), m, "rho_1")
    _check_domination(rho2, (sigma1, sigma2), m, "rho_2")
    log_inv_m = np.log(1.0 / m)
    rho_term = (1.0 + log_inv_m / np.sqrt(2.0)) * np.sqrt(trace_norm(as_array(rho1) - as_array(rho2)))
    sigma_term = 5.0 * log_inv_m ** 2 / (np.sqrt(2.0) * (1.0 - m)) * np.sqrt(trace_norm(as_array(sigma1) - as_array(sigma2)))
    return float(rho_term + sigma_term)


def bs_quantity_bound(eps, m, d_H, C):
    """C sqrt(eps) / (m (1/d_H - m)); C is an explicit input with no default."""
    _check_epsilon(eps)
    if C is None:
        raise PreconditionError("bs_quantity_bound needs an explicit constant C")
    if not 0.0 < m < 1.0 / d_H:
        raise DomainError(f"m must lie in (0, 1/{d_H}), got {m}")
    return float(C * np.sqrt(eps) / (m * (1.0 / d_H - m)))


def admissible_m_tilde(rho, sigmas, safety=M_TILDE_SAFETY):
    """safety x the largest m~ with m~ rho <= sigma_j for every j.

    For full-rank sigma that largest value is 1 / lambda_max(sigma^{-1/2} rho sigma^{-1/2}).
    """
    best = M_TILDE_CEILING
    for sigma in sigmas:
        if not is_full_rank(sigma):
            raise PreconditionError("admissible_m_tilde needs full-rank second arguments")
        root = inv_sqrt(sigma).matrix
        top = float(np.linalg.eigvalsh(root @ as_array(rho) @ root)[-1])
        best = min(best, 1.0 / top)
    return float(min(safety * best, M_TILDE_CEILING))


def _report(name, measured, bound, eps, inputs, tol, **details):
    return BoundReport(
        bound_name=name,
        measured=float(measured),
        bound=float(bound),
        epsilon=None if eps is None else float(eps),
        inputs_fingerprint=fingerprint(*inputs),
        dims=(as_array(inputs[0]).shape[0],),
        tol=Config.REPORT_TOL if tol is None else tol,
        details=details,
    )


def check_divergence_bound(rho, sigma, tol=None):
    """Two reports: D <= linear form, and linear form <= sqrt form."""
    linear, sqrt_form = divergence_bound(rho, sigma)
    eps = trace_distance(rho, sigma)
    divergence = umegaki(rho, sigma).value
    return [
        _report("divergence_linear", divergence, linear, eps, (rho, sigma), tol),
        _report("divergence_linear_vs_sqrt", linear, sqrt_form, eps, (rho, sigma), tol),
    ]


def check_ce_bound(rho, sigma, layout: SubsystemLayout, target="A", cond_on="B", tol=None):
    eps = trace_distance(rho, sigma)
    measured = abs(conditional_entropy(rho, layout, cond_on, target) - conditional_entropy(sigma, layout, cond_on, target))
    return _report("conditional_entropy_bound", measured, ce_bound(eps, layout.dim_of(target)), eps, (rho, sigma), tol)


def check_mi_bound(rho, sigma, layout: SubsystemLayout, a="A", b="B", tol=None):
    eps = trace_distance(rho, sigma)
    measured = abs(mutual_information(rho, layout, a, b) - mutual_information(sigma, layout, a, b))
    bound = mi_bound(eps, layout.dim_of(a), layout.dim_of(b))
    return _report("mutual_information_bound", measured, bound, eps, (rho, sigma), tol)


def check_cmi_bound(rho, sigma, layout: SubsystemLayout, a="A", b="B", c="C", pair=None, tol=None):
    pair = (a, b) if pair is None else tuple(pair)
    eps = trace_distance(rho, sigma)
    measured = abs(
        conditional_mutual_information(rho, layout, a, b, c) - conditional_mutual_information(sigma, layout, a, b, c)
    )
    bound = cmi_bound(eps, layout.dim_of(pair[0]), layout.dim_of(pair[1]))
    return _report("conditional_mutual_information_bound", measured, bound, eps, (rho, sigma), tol, pair="".join(pair))


def check_second_input_bound(rho, sigma1, sigma2, m=None, tol=None):
    m = admissible_m_tilde(rho, (sigma1, sigma2)) if m is None else m
    measured = abs(umegaki(rho, sigma1).value - umegaki(rho, sigma2).value)
    return _report("second_input_bound", measured, second_input_bound(rho, sigma1, sigma2, m), None,
                   (rho, sigma1, sigma2), tol, m_tilde=m)


def check_two_input_bound(rho1, rho2, sigma1, sigma2, m=None, tol=None):
    if m is None:
        m = min(admissible_m_tilde(rho1, (sigma1, sigma2)), admissible_m_tilde(rho2, (sigma1, sigma2)))
    measured = abs(umegaki(rho1, sigma1).value - umegaki(rho2, sigma2).value)
    return _report("two_input_bound", measured, two_input_bound(rho1, rho2, sigma1, sigma2, m), None,
                   (rho1, rho2, sigma1, sigma2), tol, m_tilde=m)


def bs_shape(eps, m, d_H):
    """sqrt(eps) / (m (1/d_H - m)), the BS bound with C = 1"""
    return bs_quantity_bound(eps, m, d_H, 1.0)


def bs_shape_study(layout: SubsystemLayout, m, eps_grid=None, samples=20, seed=Config.CAMPAIGN_SEED):
    """Scaling study of |H^(A|B)_rho - H^(A|B)_sigma| on states with eigenvalues >= m.

    For each target eps, sigma = (1 - s) rho + s tau with tau another floored
    state, s picked so the trace distance equals eps. Returns the fitted
    exponent of sup-difference against eps, the smallest constant C making
    every sample satisfy the bound, and the per-eps sups.
    """
    d_H = layout.total_dim
    eps_grid = np.logspace(-3, -1, 7) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    rng = rng_for(seed)
    sups, c_needed = [], 0.0
    for eps in eps_grid:
        worst = 0.0
        for _ in range(samples):
            rho = sample_min_eig_floor(d_H, m, rng)
            tau = sample_min_eig_floor(d_H, m, rng)
            gap = trace_distance(rho, tau)
            if gap <= eps:
                continue
            s = eps / gap
            sigma = (1 - s) * rho.matrix + s * tau.matrix
            measured = abs(bs_conditional_entropy(rho, layout).value - bs_conditional_entropy(sigma, layout).value)
            worst = max(worst, measured)
            c_needed = max(c_needed, measured / bs_shape(eps, m, d_H))
        sups.append(worst)
    sups = np.asarray(sups)
    usable = sups > 0
    if usable.sum() < 2:
        raise PreconditionError("BS shape study needs at least two epsilon values with samples")
    exponent = float(np.polyfit(np.log(eps_grid[usable]), np.log(sups[usable]), 1)[0])
    logger.info("BS shape study: exponent %.3f, empirical C %.4g", exponent, c_needed)
    return {
        "eps": eps_grid.tolist(),
        "sup_difference": sups.tolist(),
        "exponent": exponent,
        "empirical_C": float(c_needed),
        "m": float(m),
        "d_H": d_H,
    }


def check_bs_shape(study, min_exponent=BS_SHAPE_MIN_EXPONENT, max_exponent=BS_SHAPE_MAX_EXPONENT):
    """Fitted exponent of the sup-difference against eps must lie in [min_exponent, max_exponent].

    The lower end keeps the decay at least as fast as the sqrt(eps) shape allows
    (with slack for the fit); on floored states the entropy is smooth, so the
    observed rate is close to linear and the upper end only rejects broken fits.
    """
    return BoundReport(
        bound_name="bs_bound_shape",
        measured=study["exponent"],
        bound=max_exponent,
        floor=min_exponent,
        details={"empirical_C": study["empirical_C"], "eps": study["eps"], "sup_difference": study["sup_difference"]},
    )


BOUNDS = {
    "divergence": ("rho", "sigma"),
    "conditional_entropy": ("eps", "d_A"),
    "mutual_information": ("eps", "d_A", "d_B"),
    "conditional_mutual_information": ("eps", "d_first", "d_second"),
    "second_input": ("rho", "sigma1", "sigma2", "m"),
    "two_input": ("rho1", "rho2", "sigma1", "sigma2", "m"),
    "bs_quantity": ("eps", "m", "d_H", "C"),
}
OPERATOR_ARGS = ("rho", "sigma", "rho1", "rho2", "sigma1", "sigma2")
OPTIONAL_ARGS = {"second_input": ("m",), "two_input": ("m",)}


def evaluate_bound(name, **args):
    """Evaluate a catalog bound by name; operators are arrays, the rest numbers."""
    if name not in BOUNDS:
        raise DomainError(f"Unknown bound '{name}'. Must be one of: {', '.join(BOUNDS)}")
    optional = OPTIONAL_ARGS.get(name, ())
    missing = [k for k in BOUNDS[name] if args.get(k) is None and k not in optional]
    if missing:
        raise PreconditionError(f"Bound '{name}' needs: {', '.join(missing)}")
    if name == "divergence":
        linear, sqrt_form = divergence_bound(args["rho"], args["sigma"])
        return {"bound": name, "value": linear, "sqrt_form": sqrt_form,
                "epsilon": trace_distance(args["rho"], args["sigma"])}
    if name == "conditional_entropy":
        return {"bound": name, "value": ce_bound(float(args["eps"]), int(args["d_A"]))}
    if name == "mutual_information":
        return {"bound": name, "value": mi_bound(float(args["eps"]), int(args["d_A"]), int(args["d_B"]))}
    if name == "conditional_mutual_information":
        return {"bound": name, "value": cmi_bound(float(args["eps"]), int(args["d_first"]), int(args["d_second"]))}
    if name == "second_input":
        rho, s1, s2 = args["rho"], args["sigma1"], args["sigma2"]
        m = admissible_m_tilde(rho, (s1, s2)) if args.get("m") is None else float(args["m"])
        return {"bound": name, "value": second_input_bound(rho, s1, s2, m), "m_tilde": m}
    if name == "two_input":
        r1, r2, s1, s2 = args["rho1"], args["rho2"], args["sigma1"], args["sigma2"]
        m = args.get("m")
        if m is None:
            m = min(admissible_m_tilde(r1, (s1, s2)), admissible_m_tilde(r2, (s1, s2)))
        return {"bound": name, "value": two_input_bound(r1, r2, s1, s2, float(m)), "m_tilde": float(m)}
    value = bs_quantity_bound(float(args["eps"]), float(args["m"]), int(args["d_H"]), float(args["C"]))
    return {"bound": name, "value": value}
