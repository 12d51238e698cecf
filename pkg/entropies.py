"""Scalar entropic quantities, all in nats."""
from __future__ import annotations

import logging

import numpy as np
from scipy.special import rel_entr, xlogy

from config import Config
from errors import DomainError, LayoutError, PreconditionError
from models import EntropyValue, SubsystemLayout
from operator_core import (
    as_array,
    embed,
    eig_hermitian,
    is_full_rank,
    kernel_threshold,
    log_support,
    matrix_function,
    partial_trace_array,
    pinv,
    sqrt_psd,
    support_projector,
)

logger = logging.getLogger(__name__)

NATS_PER_BIT = np.log(2.0)
NEAR_SINGULAR_EIG = 1e-8


def to_base(value, base="e"):
    """Convert a value in nats for display ('e' or '2')."""
    if base in ("e", None):
        return value
    if str(base) == "2":
        return value / NATS_PER_BIT
    raise ValueError(f"Unsupported log base '{base}'")


def _check_probability(p, name="p"):
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p}")
    return arr


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def von_neumann_entropy(rho):
    evals = np.linalg.eigvalsh(as_array(rho))
    evals = evals[evals > kernel_threshold(rho)]
    return float(max(-np.sum(xlogy(evals, evals)), 0.0))


def binary_entropy(p):
    p = _check_probability(p)
    return _scalar(-xlogy(p, p) - xlogy(1.0 - p, 1.0 - p))


def distorted_binary_entropy(p, trA1, trA2):
    """h_{A1,A2}(p) = -p log(p) tr[A1] - (1-p) log(1-p) tr[A2]"""
    if trA1 < 0 or trA2 < 0:
        raise DomainError("Traces of PSD operators cannot be negative")
    p = _check_probability(p)
    return _scalar(-xlogy(p, p) * trA1 - xlogy(1.0 - p, 1.0 - p) * trA2)


def r_epsilon(eps):
    """r(eps) = (1 + eps) h(eps / (1 + eps))"""
    eps = _check_probability(eps, "epsilon")
    return _scalar((1.0 + eps) * binary_entropy(eps / (1.0 + eps)))


def g_d(p, d):
    """(d / p^{1/d}) h(p) - log(1 - p^{1/d}), with g_d(0) = 0."""
    if int(d) < 2:
        raise DomainError(f"g_d needs d >= 2, got {d}")
    p = _check_probability(p)
    if np.any(p >= 1.0):
        raise DomainError("g_d diverges at p = 1")
    root = np.power(p, 1.0 / d)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(p > 0, d / np.where(p > 0, root, 1.0) * binary_entropy(p) - np.log1p(-root), 0.0)
    return _scalar(value)


def classical_relative_entropy(p, q):
    """Kullback-Leibler divergence of probability vectors, +inf off support."""
    return float(np.sum(rel_entr(np.asarray(p, dtype=float), np.asarray(q, dtype=float))))


def _leak(sigma, rho):
    complement = np.eye(sigma.shape[0]) - support_projector(sigma).matrix
    return float(np.max(np.abs(complement @ rho @ complement)))


def _near_singular(sigma, leak):
    evals = np.linalg.eigvalsh(sigma)
    support = evals[evals > kernel_threshold(sigma)]
    marginal_eig = support.size > 0 and support[0] < NEAR_SINGULAR_EIG
    return bool(marginal_eig or leak > Config.STATE_TOL * 1e-3)


def relative_entropy_psd(rho, sigma):
    """tr[rho (log rho - log sigma)] for PSD arrays; sigma need not be normalized."""
    rho, sigma = as_array(rho), as_array(sigma)
    leak = _leak(sigma, rho)
    if leak > Config.STATE_TOL:
        return EntropyValue(float("inf"))
    value = np.trace(rho @ (log_support(rho).matrix - log_support(sigma).matrix)).real
    return EntropyValue(float(value), _near_singular(sigma, leak))


def bs_relative_entropy_psd(rho, sigma):
    """tr[rho log(rho^{1/2} sigma^{-1} rho^{1/2})], inverse taken on the support."""
    rho, sigma = as_array(rho), as_array(sigma)
    leak = _leak(sigma, rho)
    if leak > Config.STATE_TOL:
        return EntropyValue(float("inf"))
    root = sqrt_psd(rho).matrix
    inner = root @ pinv(sigma).matrix @ root
    value = np.trace(rho @ log_support(inner).matrix).real
    return EntropyValue(float(value), _near_singular(sigma, leak))


def umegaki(rho, sigma):
    if as_array(rho).shape != as_array(sigma).shape:
        raise LayoutError("umegaki needs states of equal dimension")
    return relative_entropy_psd(rho, sigma)


def bs_entropy(rho, sigma):
    if as_array(rho).shape != as_array(sigma).shape:
        raise LayoutError("bs_entropy needs states of equal dimension")
    return bs_relative_entropy_psd(rho, sigma)


def bs_entropy_alternative(rho, sigma):
    """tr[sigma X log X] with X = sigma^{-1/2} rho sigma^{-1/2}; sigma must be full rank."""
    if not is_full_rank(sigma):
        raise PreconditionError("The alternative BS form needs a full-rank second argument")
    evals, evecs = eig_hermitian(sigma)
    inv_root = (evecs / np.sqrt(evals)) @ evecs.conj().T
    x = inv_root @ as_array(rho) @ inv_root
    xlogx = matrix_function((x + x.conj().T) / 2, lambda v: xlogy(np.clip(v, 0.0, None), np.clip(v, 0.0, None)))
    return float(np.trace(as_array(sigma) @ xlogx.matrix).real)


def _others(layout, labels):
    return [label for label in layout.labels if label not in labels]


def _reduced(rho, layout, labels):
    """Marginal on `labels` with its sub-layout."""
    arr = as_array(rho)
    layout.check(arr.shape[0])
    if set(labels) == set(layout.labels):
        return arr, layout
    idx = sorted(layout.index(label) for label in labels)
    return partial_trace_array(arr, layout.factor_dims, idx), layout.restrict(labels)


def _conditioning_pair(rho, layout, cond_on, target):
    cond_on = [cond_on] if isinstance(cond_on, str) else list(cond_on)
    target = _others(layout, cond_on) if target is None else ([target] if isinstance(target, str) else list(target))
    if not cond_on or not target or set(cond_on) & set(target):
        raise LayoutError("Conditioning and target subsystems must be non-empty and disjoint")
    joint, sub = _reduced(rho, layout, target + cond_on)
    marginal = partial_trace_array(joint, sub.factor_dims, sorted(sub.index(c) for c in cond_on))
    return joint, embed(marginal, sub, cond_on), marginal


def conditional_entropy(rho, layout: SubsystemLayout, cond_on="B", target=None):
    """H(target|cond_on) = -D(rho_{target,cond} || 1_target (x) rho_cond)"""
    joint, reference, _ = _conditioning_pair(rho, layout, cond_on, target)
    return -relative_entropy_psd(joint, reference).value


def mutual_information(rho, layout: SubsystemLayout, a="A", b="B"):
    joint, sub = _reduced(rho, layout, [a, b])
    rho_a = partial_trace_array(joint, sub.factor_dims, [sub.index(a)])
    rho_b = partial_trace_array(joint, sub.factor_dims, [sub.index(b)])
    product = embed(rho_a, sub, a) @ embed(rho_b, sub, b)
    return relative_entropy_psd(joint, product).value


def conditional_mutual_information(rho, layout: SubsystemLayout, a="A", b="B", c="C"):
    """I(a:b|c) = H(a|c) - H(a|bc)"""
    return conditional_entropy(rho, layout, [c], [a]) - conditional_entropy(rho, layout, [b, c], [a])


def bs_conditional_entropy(rho, layout: SubsystemLayout, cond_on="B", target=None):
    """-D^(rho_AB || 1_A (x) rho_B); -inf flagged when rho_B is rank deficient"""
    joint, reference, marginal = _conditioning_pair(rho, layout, cond_on, target)
    if not is_full_rank(marginal):
        logger.debug("BS conditional entropy requested with rank-deficient conditioning marginal")
        return EntropyValue(float("-inf"), near_singular=True)
    value = bs_relative_entropy_psd(joint, reference)
    return EntropyValue(-value.value, value.near_singular)


def bs_mutual_information(rho, layout: SubsystemLayout, a="A", b="B"):
    joint, sub = _reduced(rho, layout, [a, b])
    rho_a = partial_trace_array(joint, sub.factor_dims, [sub.index(a)])
    rho_b = partial_trace_array(joint, sub.factor_dims, [sub.index(b)])
    if not (is_full_rank(rho_a) and is_full_rank(rho_b)):
        return EntropyValue(float("inf"), near_singular=True)
    product = embed(rho_a, sub, a) @ embed(rho_b, sub, b)
    return bs_relative_entropy_psd(joint, product)


def bs_cmi(rho, layout: SubsystemLayout, a="A", b="B", c="C"):
    """H^(a|c) - H^(a|bc), the sign kept when a term is -inf.

    Both terms -inf leaves the difference undefined: nan, flagged near-singular.
    """
    first = bs_conditional_entropy(rho, layout, [c], [a])
    second = bs_conditional_entropy(rho, layout, [b, c], [a])
    if not (first.finite or second.finite):
        logger.debug("BS CMI undefined: both conditioning marginals are rank deficient")
        return EntropyValue(float("nan"), near_singular=True)
    if not (first.finite and second.finite):
        return EntropyValue(first.value - second.value, near_singular=True)
    return EntropyValue(first.value - second.value, first.near_singular or second.near_singular)


QUANTITIES = {
    "von_neumann": "rho",
    "umegaki": "rho,sigma",
    "bs": "rho,sigma",
    "conditional_entropy": "rho,layout",
    "mutual_information": "rho,layout",
    "conditional_mutual_information": "rho,layout",
    "bs_conditional_entropy": "rho,layout",
    "bs_mutual_information": "rho,layout",
    "bs_cmi": "rho,layout",
}


def evaluate_quantity(name, rho, sigma=None, layout=None):
    """Dispatch used by the CLI and the API: returns an EntropyValue."""
    if name not in QUANTITIES:
        raise DomainError(f"Unknown quantity '{name}'. Must be one of: {', '.join(QUANTITIES)}")
    needs = QUANTITIES[name].split(",")
    if "sigma" in needs and sigma is None:
        raise PreconditionError(f"Quantity '{name}' needs a second state")
    if "layout" in needs and layout is None:
        raise PreconditionError(f"Quantity '{name}' needs a layout")
    labels = layout.labels if layout is not None else ()
    if name == "von_neumann":
        return EntropyValue(von_neumann_entropy(rho))
    if name == "umegaki":
        return umegaki(rho, sigma)
    if name == "bs":
        return bs_entropy(rho, sigma)
    if name == "conditional_entropy":
        return EntropyValue(conditional_entropy(rho, layout, labels[-1], labels[:-1]))
    if name == "mutual_information":
        return EntropyValue(mutual_information(rho, layout, labels[0], labels[1]))
    if name == "conditional_mutual_information":
        return EntropyValue(conditional_mutual_information(rho, layout, *labels[:3]))
    if name == "bs_conditional_entropy":
        return bs_conditional_entropy(rho, layout, labels[-1], labels[:-1])
    if name == "bs_mutual_information":
        return bs_mutual_information(rho, layout, labels[0], labels[1])
    return bs_cmi(rho, layout, *labels[:3])
