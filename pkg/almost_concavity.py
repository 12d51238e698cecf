"""Remainder functions for the almost concavity of the Umegaki and BS relative entropies.

The constants c1, c2 (and their BS counterparts) are values of

    alpha(O, P, Q) = int dt beta0(t) tr[O P^{(1+it)/2} Q P^{(1-it)/2}],

computed by adaptive Gauss-Kronrod quadrature (QUADPACK through scipy). The
integrand is assembled from a single eigendecomposition of P: in the
eigenbasis of P only the phases lambda^{it/2} depend on t.

Domain note: the Umegaki remainder requires ker sigma_j to be contained in
ker rho_j, the condition under which D(rho_j || sigma_j) is finite.
"""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy import integrate
from scipy.special import xlogy

from config import Config
from entropies import (
    binary_entropy,
    bs_entropy,
    distorted_binary_entropy,
    umegaki,
    von_neumann_entropy,
)
from errors import DomainError, KernelInclusionError, PreconditionError, QuadratureError
from models import BoundReport, QuadratureConfig, RemainderFunction, SubsystemLayout, fingerprint
from operator_core import (
    as_array,
    eig_hermitian,
    embed,
    inv_sqrt,
    is_full_rank,
    kernel_included,
    kernel_threshold,
    log_support,
    matrix_function,
    min_nonzero_eigenvalue,
    partial_trace,
    pinv,
    sqrt_psd,
    trace_distance,
)

logger = logging.getLogger(__name__)

KINDS = ("umegaki", "bs")


def beta0(t):
    """(pi/2) / (cosh(pi t) + 1), a probability density on the real line."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        value = (np.pi / 2) / (np.cosh(np.pi * t) + 1.0)
    return float(value) if value.ndim == 0 else value


def beta0_characteristic(omega):
    """int beta0(t) exp(i omega t) dt = omega / sinh(omega)."""
    omega = np.asarray(omega, dtype=float)
    safe = np.where(np.abs(omega) < 1e-8, 1.0, omega)
    with np.errstate(over="ignore"):
        value = np.where(np.abs(omega) < 1e-8, 1.0 - omega ** 2 / 6.0, safe / np.sinh(safe))
    return value


def beta0_integral(cfg: QuadratureConfig = None):
    """Integral of beta0 over the line: truncated quadrature plus analytic tail."""
    cfg = cfg or QuadratureConfig()
    T = cfg.truncation_for(1.0)
    value, error = integrate.quad(beta0, -T, T, epsabs=cfg.abs_tol, epsrel=0.0, limit=cfg.max_subdivisions)
    tail = QuadratureConfig.tail_mass(T)
    return value + tail, error


def _spectral_terms(O, P, Q):
    """Weights W_jk and frequencies omega_jk of the alpha integrand in P's eigenbasis."""
    O, P, Q = as_array(O), as_array(P), as_array(Q)
    if not (O.shape == P.shape == Q.shape):
        raise DomainError("alpha needs operators of equal dimension")
    evals, evecs = eig_hermitian(P)
    threshold = kernel_threshold(P)
    if evals[0] < -threshold:
        raise DomainError(f"alpha needs a PSD middle operator, eigenvalue {evals[0]:.3e}")
    support = evals > threshold
    lam = evals[support]
    V = evecs[:, support]
    o = V.conj().T @ O @ V
    q = V.conj().T @ Q @ V
    root = np.sqrt(lam)
    weights = o.T * q * np.outer(root, root)
    logs = np.log(lam)
    omega = (logs[:, None] - logs[None, :]) / 2.0
    return weights.ravel(), omega.ravel()


def alpha_with_error(O, P, Q, cfg: QuadratureConfig = None):
    """alpha(O, P, Q) and a residual estimate (quadrature error plus truncated tail)."""
    cfg = cfg or QuadratureConfig()
    weights, omega = _spectral_terms(O, P, Q)
    if weights.size == 0:
        return 0.0, 0.0
    scale = float(np.sum(np.abs(weights)))
    T = cfg.truncation_for(max(scale, 1e-300))

    def real_part(t):
        return beta0(t) * float(np.sum((weights * np.exp(1j * omega * t)).real))

    def imag_part(t):
        return beta0(t) * float(np.sum((weights * np.exp(1j * omega * t)).imag))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, error, info = integrate.quad(
            real_part, -T, T, epsabs=cfg.abs_tol, epsrel=0.0, limit=cfg.max_subdivisions, full_output=1
        )[:3]
        imag, _ = integrate.quad(imag_part, -T, T, epsabs=cfg.abs_tol, epsrel=0.0, limit=cfg.max_subdivisions)
    residual = float(error + scale * QuadratureConfig.tail_mass(T))
    if info["last"] >= cfg.max_subdivisions and error > cfg.abs_tol:
        raise QuadratureError(
            f"alpha quadrature did not converge within {cfg.max_subdivisions} subdivisions",
            residual=residual,
        )
    if abs(imag) > 1e-9 * max(1.0, abs(value)):
        raise QuadratureError(f"alpha has a non-negligible imaginary part {imag:.3e}", residual=residual)
    logger.debug("alpha=%.12g residual=%.2e T=%.2f subintervals=%d", value, residual, T, info["last"])
    return max(float(value), 0.0), residual


def alpha(O, P, Q, cfg: QuadratureConfig = None):
    return alpha_with_error(O, P, Q, cfg)[0]


def alpha_spectral(O, P, Q):
    """Closed form of alpha through the characteristic function of beta0."""
    weights, omega = _spectral_terms(O, P, Q)
    return max(float(np.sum(weights * beta0_characteristic(omega)).real), 0.0)


def f_interp(p, alpha1, alpha2):
    """p log(p + (1-p) alpha1) + (1-p) log((1-p) + p alpha2)"""
    if alpha1 < 0 or alpha2 < 0:
        raise DomainError("f_interp needs non-negative constants")
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError(f"p must lie in [0, 1], got {p}")
    value = xlogy(p, p + (1 - p) * alpha1) + xlogy(1 - p, (1 - p) + p * alpha2)
    return float(value) if value.ndim == 0 else value


def _zero_at_ends(fn):
    def evaluator(p):
        p_arr = np.asarray(p, dtype=float)
        value = np.where((p_arr <= 0.0) | (p_arr >= 1.0), 0.0, fn(np.clip(p_arr, 0.0, 1.0)))
        return float(value) if value.ndim == 0 else value

    return evaluator


def umegaki_remainder(rho1, sigma1, rho2, sigma2, cfg: QuadratureConfig = None):
    """f(p) = h(p) * 1/2 ||rho1 - rho2||_1 + f_{c1,c2}(p)."""
    for j, (rho, sigma) in enumerate(((rho1, sigma1), (rho2, sigma2)), start=1):
        if not kernel_included(sigma, rho):
            raise KernelInclusionError(f"Pair {j}: rho_{j} is not supported on the support of sigma_{j}", pair=j)
    c1 = alpha(rho1, pinv(sigma1), sigma2, cfg)
    c2 = alpha(rho2, pinv(sigma2), sigma1, cfg)
    distance = trace_distance(rho1, rho2)
    return RemainderFunction(
        kind="umegaki",
        constants={"c1": c1, "c2": c2, "trace_distance_term": distance},
        provenance="umegaki-almost-concavity",
        evaluator=_zero_at_ends(lambda p: binary_entropy(p) * distance + f_interp(p, c1, c2)),
    )


def bs_constants(rho1, sigma1, rho2, sigma2, cfg: QuadratureConfig = None):
    for j, sigma in enumerate((sigma1, sigma2), start=1):
        if not is_full_rank(sigma):
            raise PreconditionError(f"sigma_{j} must be full rank for the BS remainder", pair=j)
    c0 = max(1.0 / min_nonzero_eigenvalue(sigma1), 1.0 / min_nonzero_eigenvalue(sigma2))

    def hat_c(rho, sigma_own, sigma_other):
        root = sqrt_psd(rho).matrix
        inv_root = inv_sqrt(rho).matrix
        middle = root @ pinv(sigma_own).matrix @ root
        outer = inv_root @ as_array(sigma_other) @ inv_root
        return alpha(rho, (middle + middle.conj().T) / 2, (outer + outer.conj().T) / 2, cfg)

    c1 = hat_c(rho1, sigma1, sigma2)
    c2 = hat_c(rho2, sigma2, sigma1)
    equal = trace_distance(rho1, rho2) <= as_array(rho1).shape[0] * Config.KERNEL_RTOL
    return {"c0": c0, "c1": c1, "c2": c2, "delta": 1.0 if equal else 0.0}


def bs_remainder(rho1, sigma1, rho2, sigma2, cfg: QuadratureConfig = None):
    """f^(p) = h(p) (1 - delta) c0 + f_{c1,c2}(p)."""
    k = bs_constants(rho1, sigma1, rho2, sigma2, cfg)
    weight = (1.0 - k["delta"]) * k["c0"]
    return RemainderFunction(
        kind="bs",
        constants=k,
        provenance="bs-almost-concavity",
        evaluator=_zero_at_ends(lambda p: binary_entropy(p) * weight + f_interp(p, k["c1"], k["c2"])),
    )


def _close(a, b, tol):
    a, b = as_array(a), as_array(b)
    return a.shape == b.shape and float(np.max(np.abs(a - b))) <= tol


def marginal_reference_operator(rho, layout: SubsystemLayout):
    """(rho)_A (x) 1 on the remaining factors, A being the first label of the layout."""
    kept = layout.labels[0]
    return embed(partial_trace(rho, layout, kept), layout, kept)


def _check_marginal_reference(pairs, layout: SubsystemLayout):
    for j, (rho, sigma) in enumerate(pairs, start=1):
        expected = marginal_reference_operator(rho, layout)
        if not _close(expected, sigma, Config.STATE_TOL):
            raise PreconditionError(
                f"sigma_{j} is not rho_{j} reduced to {layout.labels[0]} tensored with the identity",
                pair=j,
            )


def special_case_remainder(kind, rho1, sigma1, rho2, sigma2, marginal_reference: SubsystemLayout = None):
    """Simplified remainders for the special cases, or None when none applies.

    Cases: equal second arguments give h(p) for both entropies; second arguments
    sigma_i = (rho_i)_A (x) 1 for the layout passed as ``marginal_reference``
    give h(p) for Umegaki and c0 h(p) for BS, with c0 = max ||sigma_i^{-1}||_inf.
    The marginal form is verified, and a mismatch raises PreconditionError.
    """
    if kind not in KINDS:
        raise DomainError(f"Unknown remainder kind '{kind}'")
    if _close(sigma1, sigma2, Config.STATE_TOL):
        return RemainderFunction(kind, {}, "special-case:equal-second-arguments", _zero_at_ends(binary_entropy))
    if marginal_reference is not None:
        _check_marginal_reference(((rho1, sigma1), (rho2, sigma2)), marginal_reference)
        if kind == "umegaki":
            return RemainderFunction(kind, {}, "special-case:marginal-reference", _zero_at_ends(binary_entropy))
        for j, sigma in enumerate((sigma1, sigma2), start=1):
            if not is_full_rank(sigma):
                raise PreconditionError(f"sigma_{j} must be full rank for the BS remainder", pair=j)
        c0 = max(1.0 / min_nonzero_eigenvalue(sigma1), 1.0 / min_nonzero_eigenvalue(sigma2))
        return RemainderFunction(
            kind, {"c0": c0}, "special-case:marginal-reference", _zero_at_ends(lambda p: c0 * binary_entropy(p))
        )
    return None


def remainder_for(kind, rho1, sigma1, rho2, sigma2, cfg: QuadratureConfig = None):
    if kind == "umegaki":
        return umegaki_remainder(rho1, sigma1, rho2, sigma2, cfg)
    if kind == "bs":
        return bs_remainder(rho1, sigma1, rho2, sigma2, cfg)
    raise DomainError(f"Unknown remainder kind '{kind}'. Must be one of: {', '.join(KINDS)}")


def resolve_remainder(kind, rho1, sigma1, rho2, sigma2, marginal_reference: SubsystemLayout = None, general=False,
                      cfg: QuadratureConfig = None):
    """Special-case remainder when one applies (unless ``general``), else the general evaluator."""
    if not general:
        special = special_case_remainder(kind, rho1, sigma1, rho2, sigma2, marginal_reference)
        if special is not None:
            return special
    return remainder_for(kind, rho1, sigma1, rho2, sigma2, cfg)


def default_p_grid():
    """41 uniform points plus points near the ends where remainders vanish"""
    grid = np.concatenate([np.linspace(0.0, 1.0, 41), [1e-4, 1e-3, 1e-2, 0.99, 0.999]])
    return np.unique(grid)


def _divergence(kind):
    return umegaki if kind == "umegaki" else bs_entropy


def _mix(a, b, p):
    return p * as_array(a) + (1 - p) * as_array(b)


def check_almost_concavity(kind, pairs, p_grid=None, cfg: QuadratureConfig = None, tol=None, remainder=None):
    """One report per p: Delta(p) must lie in [-f(p) - tol, tol]."""
    (rho1, sigma1), (rho2, sigma2) = pairs
    tol = Config.REPORT_TOL if tol is None else tol
    p_grid = default_p_grid() if p_grid is None else p_grid
    remainder = remainder or remainder_for(kind, rho1, sigma1, rho2, sigma2, cfg)
    divergence = _divergence(kind)
    d1 = divergence(rho1, sigma1).value
    d2 = divergence(rho2, sigma2).value
    tag = fingerprint(rho1, sigma1, rho2, sigma2)
    reports = []
    for p in p_grid:
        mixed = divergence(_mix(rho1, rho2, p), _mix(sigma1, sigma2, p)).value
        delta = mixed - p * d1 - (1 - p) * d2
        reports.append(
            BoundReport(
                bound_name=f"{kind}_almost_concavity",
                measured=-delta,
                bound=remainder(p),
                floor=0.0,
                inputs_fingerprint=tag,
                dims=(as_array(rho1).shape[0],),
                tol=tol,
                details={"p": float(p), "delta": float(delta), **{k: float(v) for k, v in remainder.constants.items()}},
            )
        )
    return reports


def check_lemma1(A1, A2, p, tol=1e-9):
    """-A log A <= -p A1 log A1 - (1-p) A2 log A2 + h_{A1,A2}(p) 1 in the PSD order."""
    A1, A2 = as_array(A1), as_array(A2)
    minus_xlogx = lambda v: -xlogy(np.clip(v, 0.0, None), np.clip(v, 0.0, None))
    A = p * A1 + (1 - p) * A2
    lhs = matrix_function((A + A.conj().T) / 2, minus_xlogx).matrix
    rhs = (
        p * matrix_function(A1, minus_xlogx).matrix
        + (1 - p) * matrix_function(A2, minus_xlogx).matrix
        + distorted_binary_entropy(p, max(np.trace(A1).real, 0.0), max(np.trace(A2).real, 0.0)) * np.eye(A.shape[0])
    )
    gap = np.linalg.eigvalsh((rhs - lhs + (rhs - lhs).conj().T) / 2)[0]
    return BoundReport(
        bound_name="distorted_entropy_operator_inequality",
        measured=-float(gap),
        bound=0.0,
        inputs_fingerprint=fingerprint(A1, A2),
        dims=(A.shape[0],),
        tol=tol,
        details={"p": float(p)},
    )


def check_audenaert(rho1, rho2, p, tol=1e-9):
    """S(p rho1 + (1-p) rho2) <= T h(p) + p S(rho1) + (1-p) S(rho2)."""
    mixed = von_neumann_entropy(_mix(rho1, rho2, p))
    bound = trace_distance(rho1, rho2) * binary_entropy(p) + p * von_neumann_entropy(rho1) + (1 - p) * von_neumann_entropy(rho2)
    return BoundReport("entropy_almost_concavity", mixed, bound, inputs_fingerprint=fingerprint(rho1, rho2), tol=tol, details={"p": float(p)})


def check_peierls_bogolubov(rho1, sigma1, sigma, cfg: QuadratureConfig = None, tol=None):
    """tr[rho1 (log sigma - log sigma1)] <= log alpha(rho1, sigma1^{-1}, sigma)."""
    measured = float(np.trace(as_array(rho1) @ (log_support(sigma).matrix - log_support(sigma1).matrix)).real)
    bound = float(np.log(alpha(rho1, pinv(sigma1), sigma, cfg)))
    return BoundReport("peierls_bogolubov_step", measured, bound, inputs_fingerprint=fingerprint(rho1, sigma1, sigma),
                       tol=Config.REPORT_TOL if tol is None else tol)


def check_sherman_davis(sigma, projector, tol=1e-9):
    """P (P sigma P)^+ P <= P sigma^{-1} P."""
    P = as_array(projector)
    sig = as_array(sigma)
    compressed = pinv((P @ sig @ P + (P @ sig @ P).conj().T) / 2).matrix
    gap = P @ pinv(sig).matrix @ P - P @ compressed @ P
    smallest = np.linalg.eigvalsh((gap + gap.conj().T) / 2)[0]
    return BoundReport("sherman_davis_step", -float(smallest), 0.0, inputs_fingerprint=fingerprint(sig, P), tol=tol)


def check_bs_chain(rho1, sigma1, sigma2, p, cfg: QuadratureConfig = None, tol=None):
    """D^(rho1||sigma1) - D^(rho1||sigma_p) <= log(p + (1-p) c^_1)."""
    constants = bs_constants(rho1, sigma1, rho1, sigma2, cfg)
    sigma_p = _mix(sigma1, sigma2, p)
    measured = bs_entropy(rho1, sigma1).value - bs_entropy(rho1, sigma_p).value
    bound = float(np.log(p + (1 - p) * constants["c1"]))
    return BoundReport("bs_alpha_chain", measured, bound, inputs_fingerprint=fingerprint(rho1, sigma1, sigma2),
                       tol=Config.REPORT_TOL if tol is None else tol, details={"p": float(p), "c1": constants["c1"]})


def check_c1_bound(rho1, sigma1, sigma2, cfg: QuadratureConfig = None, tol=None):
    """c1 = alpha(rho1, sigma1^{-1}, sigma2) <= 1 / m~(sigma1)."""
    c1 = alpha(rho1, pinv(sigma1), sigma2, cfg)
    return BoundReport("c1_support_bound", c1, 1.0 / min_nonzero_eigenvalue(sigma1),
                       inputs_fingerprint=fingerprint(rho1, sigma1, sigma2), tol=Config.REPORT_TOL if tol is None else tol)


def bs_excess_over_umegaki(rho1, sigma1, rho2, sigma2, p_grid=None, cfg: QuadratureConfig = None):
    """Pointwise f^(p) - f(p); positive for commuting inputs with rho1 != rho2."""
    p_grid = default_p_grid() if p_grid is None else p_grid
    f = umegaki_remainder(rho1, sigma1, rho2, sigma2, cfg)
    f_hat = bs_remainder(rho1, sigma1, rho2, sigma2, cfg)
    return np.array([f_hat(p) - f(p) for p in p_grid])


def tightness_states(t):
    """rho1 = |0><0|, rho2 = |1><1|, sigma1 = diag(t, 1-t), sigma2 = diag(1-t, t); equality case of the Umegaki remainder."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    rho1 = np.diag([1.0, 0.0])
    rho2 = np.diag([0.0, 1.0])
    return (rho1, np.diag([t, 1.0 - t])), (rho2, np.diag([1.0 - t, t]))


def tightness_table(t_values=(0.1, 0.25, 0.4), p_grid=None, cfg: QuadratureConfig = None):
    """Rows (t, p, f(p), concavity deficit, |difference|) over a (t, p) grid."""
    p_grid = np.linspace(0.0, 1.0, 41) if p_grid is None else p_grid
    rows = []
    for t in t_values:
        pairs = tightness_states(t)
        for report in check_almost_concavity("umegaki", pairs, p_grid, cfg):
            f_value = report.bound
            deficit = -report.details["delta"]
            rows.append({"t": float(t), "p": report.details["p"], "f": f_value, "deficit": deficit,
                         "difference": abs(f_value - deficit)})
    return rows
