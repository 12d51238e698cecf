"""Applications: entropic uncertainty, approximate Markov chains and optimized divergences."""
from __future__ import annotations

import logging

import numpy as np
from scipy import optimize

from config import Config
from entropies import (
    binary_entropy,
    bs_conditional_entropy,
    bs_relative_entropy_psd,
    conditional_entropy,
    conditional_mutual_information,
    g_d,
    mutual_information,
    r_epsilon,
    relative_entropy_psd,
    umegaki,
)
from errors import LayoutError, PreconditionError, SolverError
from models import (
    BasisPair,
    BoundReport,
    ConvexSetDescriptor,
    DensityMatrix,
    HermitianOperator,
    OptimizationResult,
    SolverConfig,
    SubsystemLayout,
    fingerprint,
)
from operator_core import (
    as_array,
    embed,
    inv_sqrt,
    is_full_rank,
    log_support,
    operator_norm,
    partial_trace,
    partial_trace_array,
    pinch_subsystem,
    pinv,
    sqrt_psd,
    trace_distance,
    trace_norm,
)

logger = logging.getLogger(__name__)

DC_TOL = 1e-6
STALL_WINDOW = 25
GRADIENT_TOL = 1e-7


# Approximate quantum Markov chains

def _tripartite(layout: SubsystemLayout, labels):
    if len(labels) != 3:
        raise LayoutError(f"Expected three subsystem labels, got {labels}")
    for label in labels:
        layout.index(label)
    return labels


def petz_recovery(rho, layout: SubsystemLayout, labels=("A", "B", "C")):
    """rho_AB^{1/2} rho_B^{-1/2} rho_BC rho_B^{-1/2} rho_AB^{1/2}, factors embedded by the layout.

    A rank-deficient rho_B is inverted on its support (logged).
    """
    a, b, c = _tripartite(layout, labels)
    arr = as_array(rho)
    layout.check(arr.shape[0])
    rho_ab = partial_trace(arr, layout, [a, b]).matrix
    rho_b = partial_trace(arr, layout, [b]).matrix
    rho_bc = partial_trace(arr, layout, [b, c]).matrix
    if not is_full_rank(rho_b):
        logger.warning("petz_recovery: rho_%s is rank deficient, using the pseudo-inverse", b)
    outer = embed(sqrt_psd(rho_ab).matrix, layout, [a, b])
    middle = embed(inv_sqrt(rho_b).matrix, layout, [b])
    core = embed(rho_bc, layout, [b, c])
    recovered = outer @ middle @ core @ middle @ outer
    return HermitianOperator.from_matrix((recovered + recovered.conj().T) / 2)


def markov_sandwich(rho, layout: SubsystemLayout, labels=("A", "B", "C")):
    """(lower, I(A:C|B), upper) with Delta = rho - petz_recovery(rho).

    lower = (pi/8)^4 ||rho_B^{-1}||^{-2} ||rho^{-1}||^{-2} ||Delta||_1^4, or None when
    rho is rank deficient; upper = 2 (log min{d_A, d_C} + 1) ||Delta||_1^{1/2}.
    """
    a, b, c = _tripartite(layout, labels)
    arr = as_array(rho)
    delta = trace_norm(arr - petz_recovery(arr, layout, labels).matrix)
    cmi = conditional_mutual_information(arr, layout, a, c, b)
    upper = 2.0 * (np.log(min(layout.dim_of(a), layout.dim_of(c))) + 1.0) * np.sqrt(delta)
    lower = None
    rho_b = partial_trace(arr, layout, [b]).matrix
    if is_full_rank(arr) and is_full_rank(rho_b):
        inv_b = operator_norm(pinv(rho_b))
        inv_all = operator_norm(pinv(arr))
        lower = float((np.pi / 8) ** 4 * inv_b ** -2 * inv_all ** -2 * delta ** 4)
    else:
        logger.info("markov_sandwich: lower bound unavailable for a rank-deficient state")
    return lower, float(cmi), float(upper)


def check_markov_sandwich(rho, layout: SubsystemLayout, labels=("A", "B", "C"), tol=None):
    tol = Config.REPORT_TOL if tol is None else tol
    lower, cmi, upper = markov_sandwich(rho, layout, labels)
    return BoundReport(
        bound_name="markov_sandwich",
        measured=cmi,
        bound=upper,
        floor=lower,
        inputs_fingerprint=fingerprint(rho),
        dims=tuple(layout.factor_dims),
        tol=tol,
        details={"lower": lower if lower is not None else "unavailable", "cmi": cmi, "upper": upper},
    )


# Entropic uncertainty with quantum memory

def uncertainty_constants(bases: BasisPair, d_A=None):
    """(m, xi) with m = min{1/d^2, min overlap / d} and
    xi = 3 log^2(1/m)/(1-m) (sum_x max_y |1/d - overlap_xy|)^{1/2}.

    xi is None when some overlap vanishes (m = 0).
    """
    d = bases.dim if d_A is None else int(d_A)
    overlaps = bases.overlap_matrix
    m = float(min(1.0 / d ** 2, overlaps.min() / d))
    if m <= Config.STATE_TOL:
        logger.warning("uncertainty_constants: degenerate overlaps, xi unavailable")
        return 0.0, None
    spread = float(np.sum(np.max(np.abs(1.0 / d - overlaps), axis=1)))
    xi = 3.0 * np.log(1.0 / m) ** 2 / (1.0 - m) * np.sqrt(spread)
    return m, float(xi)


def _bipartite(layout: SubsystemLayout, system, memory):
    if len(layout.labels) != 2:
        raise LayoutError(f"Expected a bipartite layout, got {list(layout.labels)}")
    layout.index(system)
    layout.index(memory)


def uncertainty_terms(rho, layout: SubsystemLayout, bases: BasisPair, system="A", memory="M"):
    """H(X|M), H(Y|M), H(A|M) and the pinching divergences D(rho || E_X rho), D(rho || E_Y rho)."""
    _bipartite(layout, system, memory)
    if layout.dim_of(system) != bases.dim:
        raise LayoutError(f"Bases act on dim {bases.dim}, subsystem '{system}' has dim {layout.dim_of(system)}")
    pinched_x = pinch_subsystem(rho, layout, system, bases.basis_x)
    pinched_y = pinch_subsystem(rho, layout, system, bases.basis_y)
    return {
        "H_X_M": conditional_entropy(pinched_x, layout, memory, system),
        "H_Y_M": conditional_entropy(pinched_y, layout, memory, system),
        "H_A_M": conditional_entropy(rho, layout, memory, system),
        "D_X": umegaki(rho, pinched_x).value,
        "D_Y": umegaki(rho, pinched_y).value,
    }


def check_uncertainty(rho, layout: SubsystemLayout, bases: BasisPair, system="A", memory="M", tol=None):
    """H(X|M) + H(Y|M) + xi >= H(A|M)"""
    m, xi = uncertainty_constants(bases, layout.dim_of(system))
    if xi is None:
        raise PreconditionError("Uncertainty relation needs non-degenerate overlaps (m > 0)")
    terms = uncertainty_terms(rho, layout, bases, system, memory)
    return BoundReport(
        bound_name="uncertainty_relation",
        measured=terms["H_A_M"],
        bound=terms["H_X_M"] + terms["H_Y_M"] + xi,
        inputs_fingerprint=fingerprint(rho, bases.basis_x, bases.basis_y),
        dims=tuple(layout.factor_dims),
        tol=Config.REPORT_TOL if tol is None else tol,
        details={"m": m, "xi": xi, **terms},
    )


def check_uncertainty_identity(rho, layout: SubsystemLayout, bases: BasisPair, system="A", memory="M", tol=1e-9):
    """H(X|M) + H(Y|M) = D(rho||E_X rho) + D(rho||E_Y rho) + 2 H(A|M)"""
    terms = uncertainty_terms(rho, layout, bases, system, memory)
    lhs = terms["H_X_M"] + terms["H_Y_M"]
    rhs = terms["D_X"] + terms["D_Y"] + 2.0 * terms["H_A_M"]
    return BoundReport("uncertainty_identity", abs(lhs - rhs), 0.0, inputs_fingerprint=fingerprint(rho),
                       dims=tuple(layout.factor_dims), tol=tol, details={"lhs": lhs, "rhs": rhs})


def check_overlap_bound(rho, layout: SubsystemLayout, bases: BasisPair, system="A", memory="M", tol=None):
    """||(E_M - E_X o E_Y)(rho)||_1 <= sum_x max_y |1/d - overlap_xy|"""
    _bipartite(layout, system, memory)
    d = bases.dim
    arr = as_array(rho)
    rho_m = partial_trace_array(arr, layout.factor_dims, [layout.index(memory)])
    replaced = embed(np.eye(d) / d, layout, system) @ embed(rho_m, layout, memory)
    composed = pinch_subsystem(pinch_subsystem(arr, layout, system, bases.basis_y), layout, system, bases.basis_x)
    measured = trace_norm(replaced - composed.matrix)
    bound = float(np.sum(np.max(np.abs(1.0 / d - bases.overlap_matrix), axis=1)))
    return BoundReport("pinching_overlap_bound", measured, bound, inputs_fingerprint=fingerprint(rho),
                       dims=tuple(layout.factor_dims), tol=Config.REPORT_TOL if tol is None else tol)


# Optimized divergences D_C(rho) = inf_{gamma in C} D(rho || gamma)

def hermitian_from_params(theta, d):
    """d^2 real parameters -> Hermitian matrix (diagonal, then real and imaginary upper parts)."""
    theta = np.asarray(theta, dtype=float)
    rows, cols = np.triu_indices(d, k=1)
    k = rows.size
    H = np.diag(theta[:d]).astype(complex)
    H[rows, cols] = theta[d:d + k] + 1j * theta[d + k:d + 2 * k]
    H[cols, rows] = np.conj(H[rows, cols])
    return H


def params_from_hermitian(H):
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    rows, cols = np.triu_indices(d, k=1)
    return np.concatenate([H.diagonal().real, H[rows, cols].real, H[rows, cols].imag])


def gibbs_state(H):
    """exp(H) / tr exp(H), shifted by the top eigenvalue for stability."""
    evals, evecs = np.linalg.eigh(H)
    weights = np.exp(evals - evals[-1])
    weights = weights / weights.sum()
    return (evecs * weights) @ evecs.conj().T


def _log_params(state):
    """Parameters reproducing a full-rank state through gibbs_state, or None."""
    if not is_full_rank(state):
        return None
    return params_from_hermitian(log_support(state).matrix)


def conditional_reference_set(layout: SubsystemLayout, target="A", cond_on="B"):
    """{1_A/d_A (x) sigma_B}; D_C(rho) = log d_A - H(A|B) for the Umegaki entropy."""
    if set(layout.labels) != {target, cond_on}:
        raise LayoutError(f"Layout {list(layout.labels)} must consist of exactly '{target}' and '{cond_on}'")
    d_a, d_b = layout.dim_of(target), layout.dim_of(cond_on)
    identity = np.eye(d_a) / d_a

    def parametrization(theta):
        gamma = embed(identity, layout, target) @ embed(gibbs_state(hermitian_from_params(theta, d_b)), layout, cond_on)
        return DensityMatrix.from_matrix(gamma)

    def closed_form(rho, kind):
        if kind != "umegaki":
            return None
        return float(np.log(d_a) - conditional_entropy(rho, layout, cond_on, target))

    def warm_start(rho):
        return _log_params(partial_trace(rho, layout, [cond_on]))

    return ConvexSetDescriptor(
        name="conditional_reference",
        parametrization=parametrization,
        n_params=d_b ** 2,
        anchor=DensityMatrix.maximally_mixed(layout.total_dim),
        closed_form=closed_form,
        warm_start=warm_start,
    )


def product_state_set(layout: SubsystemLayout, a="A", b="B"):
    """{sigma_A (x) sigma_B}: not convex; D_C(rho) = I(A:B) for the Umegaki entropy."""
    if set(layout.labels) != {a, b}:
        raise LayoutError(f"Layout {list(layout.labels)} must consist of exactly '{a}' and '{b}'")
    d_a, d_b = layout.dim_of(a), layout.dim_of(b)

    def parametrization(theta):
        sigma_a = gibbs_state(hermitian_from_params(theta[:d_a ** 2], d_a))
        sigma_b = gibbs_state(hermitian_from_params(theta[d_a ** 2:], d_b))
        return DensityMatrix.from_matrix(embed(sigma_a, layout, a) @ embed(sigma_b, layout, b))

    def closed_form(rho, kind):
        if kind != "umegaki":
            return None
        return float(mutual_information(rho, layout, a, b))

    def warm_start(rho):
        first = _log_params(partial_trace(rho, layout, [a]))
        second = _log_params(partial_trace(rho, layout, [b]))
        if first is None or second is None:
            return None
        return np.concatenate([first, second])

    return ConvexSetDescriptor(
        name="product_states",
        parametrization=parametrization,
        n_params=d_a ** 2 + d_b ** 2,
        anchor=DensityMatrix.maximally_mixed(layout.total_dim),
        convex=False,
        closed_form=closed_form,
        warm_start=warm_start,
    )


def _divergence(kind):
    if kind == "umegaki":
        return relative_entropy_psd
    if kind == "bs":
        return bs_relative_entropy_psd
    raise PreconditionError(f"Unknown divergence kind '{kind}'")


def _stalled(history, tol):
    if len(history) <= STALL_WINDOW:
        return False
    old, new = history[-STALL_WINDOW - 1], history[-1]
    return abs(old - new) <= tol * max(1.0, abs(old))


def optimized_divergence(rho, C: ConvexSetDescriptor, kind="umegaki", solver: SolverConfig = None, strict=False):
    """inf over C of D(rho || gamma), by multi-start BFGS on gamma = exp(H(theta)) / tr.

    Starts: the set's warm start (when it has one), the anchor, then random
    parameter vectors. Each start keeps its best iterate and the best start wins,
    so the value never exceeds D(rho || anchor). ``converged`` is True when BFGS
    reports success, stops on precision loss, or the objective stalls.
    """
    solver = solver or SolverConfig()
    divergence = _divergence(kind)
    arr = as_array(rho)

    def objective(theta):
        value = divergence(arr, C.parametrization(theta).matrix).value
        return value if np.isfinite(value) else 1e12

    anchor_value = divergence(arr, C.anchor.matrix).value
    rng = np.random.default_rng(solver.seed)
    starts = []
    if C.warm_start is not None:
        warm = C.warm_start(rho)
        if warm is not None:
            starts.append(np.asarray(warm, dtype=float))
    starts.append(np.zeros(C.n_params))
    while len(starts) < max(solver.starts, 1):
        starts.append(rng.normal(scale=0.5, size=C.n_params))

    best = None
    finals = []
    for index, theta0 in enumerate(starts[:max(solver.starts, 1)]):
        trail = [(objective(theta0), np.asarray(theta0, dtype=float))]
        result = optimize.minimize(
            objective,
            theta0,
            method="BFGS",
            callback=lambda theta: trail.append((objective(theta), np.array(theta))),
            options={"maxiter": solver.max_iters, "gtol": GRADIENT_TOL},
        )
        history = [value for value, _ in trail]
        converged = bool(result.success or result.status == 2 or _stalled(history, solver.tol))
        logger.debug("start %d: objective %.12g after %d iterations (status %d)", index, result.fun, result.nit, result.status)
        if any(later > earlier + 1e-12 for earlier, later in zip(history, history[1:])):
            logger.warning("start %d: objective increased between iterations; keeping the best iterate", index)
        # a start never ends above its own best iterate (theta0 included)
        fun, x = min(trail + [(float(result.fun), result.x)], key=lambda item: item[0])
        finals.append(fun)
        if best is None or fun < best[0]:
            best = (fun, x, converged, history)

    if best is None or not np.isfinite(best[0]) or best[0] >= 1e12:
        raise SolverError("No start produced a finite objective", best_value=None)
    value, theta, converged, history = best
    minimizer = C.parametrization(theta)
    # the result is never worse than the anchor member of C
    if value > anchor_value:
        value, minimizer, converged = anchor_value, C.anchor, True
    if not converged:
        logger.warning("optimized_divergence(%s, %s) did not converge; returning best iterate %.12g", C.name, kind, value)
        if strict:
            raise SolverError("Solver did not converge", best_value=value, best_state=minimizer)
    return OptimizationResult(value=max(value, 0.0), minimizer=minimizer, converged=converged, history=history, starts=finals)


def variational_bs_conditional_entropy(rho, layout: SubsystemLayout, solver: SolverConfig = None, target="A", cond_on="B"):
    """sup_{sigma_B} -D^(rho || 1_A (x) sigma_B) = log d_A - inf over the normalized reference set."""
    C = conditional_reference_set(layout, target, cond_on)
    result = optimized_divergence(rho, C, "bs", solver)
    return float(np.log(layout.dim_of(target)) - result.value)


def variational_bs_mutual_information(rho, layout: SubsystemLayout, solver: SolverConfig = None, a="A", b="B"):
    """inf_{sigma_A, sigma_B} D^(rho || sigma_A (x) sigma_B)"""
    return optimized_divergence(rho, product_state_set(layout, a, b), "bs", solver).value


def bs_conditional_gap(rho, layout: SubsystemLayout, solver: SolverConfig = None):
    """H^var(A|B) - H^(A|B); non-negative up to solver tolerance, positive values witness a gap."""
    plug_in = bs_conditional_entropy(rho, layout, "B", "A").value
    return variational_bs_conditional_entropy(rho, layout, solver) - plug_in


def dc_value(rho, C: ConvexSetDescriptor, kind="umegaki", solver: SolverConfig = None):
    """D_C(rho), through the closed form when the set has one for this kind."""
    if C.closed_form is not None:
        value = C.closed_form(rho, kind)
        if value is not None:
            return value, True
    return optimized_divergence(rho, C, kind, solver).value, False


def dc_envelope(C: ConvexSetDescriptor, kind, dim):
    """(lower defect, upper defect) of p -> D_C(p rho + (1-p) sigma) - p D_C(rho) - (1-p) D_C(sigma)."""
    if not C.convex:
        return binary_entropy, lambda p: 2.0 * binary_entropy(p)
    if kind == "bs":
        return (lambda p: 0.0 if p >= 1.0 else g_d(p, dim)), (lambda p: 0.0)
    return binary_entropy, (lambda p: 0.0)


def check_dc_almost_affinity(C: ConvexSetDescriptor, kind, rho, sigma, p_grid=None, solver: SolverConfig = None, tol=None):
    """Per p: -lower(p) <= D_C(mix) - p D_C(rho) - (1-p) D_C(sigma) <= upper(p)."""
    p_grid = np.linspace(0.0, 1.0, 11) if p_grid is None else p_grid
    rho_arr, sigma_arr = as_array(rho), as_array(sigma)
    lower, upper = dc_envelope(C, kind, rho_arr.shape[0])
    d_rho, exact = dc_value(rho_arr, C, kind, solver)
    d_sigma, _ = dc_value(sigma_arr, C, kind, solver)
    tol = (Config.REPORT_TOL if exact else DC_TOL) if tol is None else tol
    reports = []
    for p in p_grid:
        mixed, _ = dc_value(p * rho_arr + (1 - p) * sigma_arr, C, kind, solver)
        delta = mixed - p * d_rho - (1 - p) * d_sigma
        reports.append(
            BoundReport(
                bound_name=f"dc_almost_affinity_{C.name}_{kind}",
                measured=float(delta),
                bound=float(upper(p)),
                floor=-float(lower(p)),
                inputs_fingerprint=fingerprint(rho_arr, sigma_arr),
                dims=(rho_arr.shape[0],),
                tol=tol,
                details={"p": float(p), "closed_form": exact},
            )
        )
    return reports


def check_dc_continuity(rho, sigma, layout: SubsystemLayout, solver: SolverConfig = None, tol=None):
    """|D_C(rho) - D_C(sigma)| <= eps log min{d_A, d_B} + r(eps) on the product-state set.

    The product set stands in for the separable states only when one factor is
    a qubit; larger pairs of factors are rejected.
    """
    if min(layout.factor_dims) != 2:
        raise PreconditionError(
            f"Product-state continuity is only checked with a qubit factor, got dims {list(layout.factor_dims)}"
        )
    C = product_state_set(layout, *layout.labels)
    d_rho, exact = dc_value(rho, C, "umegaki", solver)
    d_sigma, _ = dc_value(sigma, C, "umegaki", solver)
    eps = trace_distance(rho, sigma)
    bound = eps * np.log(min(layout.factor_dims)) + r_epsilon(eps)
    return BoundReport(
        bound_name="dc_continuity_product_states",
        measured=abs(d_rho - d_sigma),
        bound=float(bound),
        epsilon=eps,
        inputs_fingerprint=fingerprint(rho, sigma),
        dims=tuple(layout.factor_dims),
        tol=(Config.REPORT_TOL if exact else DC_TOL) if tol is None else tol,
    )
