"""Seeded verification campaigns over every inequality in the library.

A check is a function of one trial: it draws its inputs from the trial's
generator and returns one or more ``BoundReport`` records. A campaign runs
``trials`` of them on a thread pool and keeps one report per trial (the one
with the worst margin), ordered by trial index.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

import alaff_engine
import almost_concavity
import applications
import bound_catalog
from config import Config
from entropies import bs_entropy, bs_entropy_alternative, umegaki
from errors import PreconditionError, RelEntError, UnknownCheckError
from models import CSV_COLUMNS, BoundReport, CampaignConfig, DensityMatrix, QuadratureConfig, SubsystemLayout, fingerprint
from operator_core import as_array, trace_distance
from sampling import (
    mix_with_identity,
    random_projector,
    rotated_basis_pair,
    sample_ginibre_state,
    sample_psd,
    sample_state,
    sample_supported_state,
    trial_seed,
)

logger = logging.getLogger(__name__)

LABELS = ("A", "B", "C")


@dataclass
class Trial:
    rng: np.random.Generator
    dims: tuple
    cfg: CampaignConfig

    @property
    def dim(self):
        return int(np.prod(self.dims))

    @property
    def layout(self):
        return SubsystemLayout(LABELS[:len(self.dims)], tuple(self.dims))

    def state(self, dim=None):
        """First-argument state from the configured sampler."""
        return sample_state(self.cfg.sampler, dim or self.dim, self.rng, self.cfg.rank, self.cfg.floor)

    def full_rank(self, dim=None):
        return sample_ginibre_state(dim or self.dim, None, self.rng)

    def any_rank(self, dim=None):
        dim = dim or self.dim
        return sample_ginibre_state(dim, int(self.rng.integers(1, dim + 1)), self.rng)

    def probability(self):
        return float(self.rng.uniform(0.0, 1.0))


@dataclass(frozen=True)
class Check:
    name: str
    description: str
    run: Callable = field(repr=False)  # Trial -> list[BoundReport]
    arity: int = 1  # number of tensor factors in dims
    default_dims: tuple = (2,)
    samplers: tuple = ("ginibre", "ginibre_rank_k", "pure", "min_eig_floor")
    hard: bool = True

    def to_dict(self):
        return {
            "name": self.name,
            "description": self.description,
            "arity": self.arity,
            "default_dims": list(self.default_dims),
            "samplers": list(self.samplers),
            "hard": self.hard,
        }


CHECKS = {}


def check(name, description, arity=1, default_dims=(2,), samplers=None, hard=True):
    """Register a trial function under ``name``."""

    def decorator(fn):
        CHECKS[name] = Check(
            name=name,
            description=description,
            run=fn,
            arity=arity,
            default_dims=default_dims,
            samplers=samplers or Check.samplers,
            hard=hard,
        )
        return fn

    return decorator


FULL_RANK_ONLY = ("ginibre", "min_eig_floor")


# Entropy identities

@check("umegaki_nonneg", "D(rho||sigma) >= 0")
def _umegaki_nonneg(trial):
    rho, sigma = trial.state(), trial.full_rank()
    return [BoundReport("umegaki_nonneg", -umegaki(rho, sigma).value, 0.0, inputs_fingerprint=fingerprint(rho, sigma))]


@check("bs_dominates_umegaki", "D^(rho||sigma) >= D(rho||sigma)")
def _bs_dominates(trial):
    rho, sigma = trial.state(), trial.full_rank()
    gap = umegaki(rho, sigma).value - bs_entropy(rho, sigma).value
    return [BoundReport("bs_dominates_umegaki", gap, 0.0, inputs_fingerprint=fingerprint(rho, sigma), tol=1e-9)]


@check("bs_commuting_equality", "D^ = D on commuting pairs")
def _bs_commuting(trial):
    rho = DensityMatrix.diagonal(trial.rng.dirichlet(np.ones(trial.dim)))
    sigma = DensityMatrix.diagonal(trial.rng.dirichlet(np.ones(trial.dim)))
    gap = abs(umegaki(rho, sigma).value - bs_entropy(rho, sigma).value)
    return [BoundReport("bs_commuting_equality", gap, 0.0, inputs_fingerprint=fingerprint(rho, sigma), tol=1e-10)]


@check("bs_alternative_form", "D^(rho||sigma) = tr[sigma X log X], X = sigma^-1/2 rho sigma^-1/2", samplers=FULL_RANK_ONLY)
def _bs_alternative(trial):
    rho, sigma = trial.state(), trial.full_rank()
    gap = abs(bs_entropy(rho, sigma).value - bs_entropy_alternative(rho, sigma))
    return [BoundReport("bs_alternative_form", gap, 0.0, inputs_fingerprint=fingerprint(rho, sigma), tol=1e-9)]


@check("distorted_entropy_operator_inequality", "-A log A <= -p A1 log A1 - (1-p) A2 log A2 + h_{A1,A2}(p) 1")
def _lemma1(trial):
    A1 = sample_psd(trial.dim, trial.rng.uniform(0.5, 2.0), trial.rng)
    A2 = sample_psd(trial.dim, trial.rng.uniform(0.5, 2.0), trial.rng)
    return [almost_concavity.check_lemma1(A1, A2, trial.probability())]


@check("entropy_almost_concavity", "S(p rho + (1-p) sigma) <= T h(p) + p S(rho) + (1-p) S(sigma)")
def _audenaert(trial):
    return [almost_concavity.check_audenaert(trial.state(), trial.state(), trial.probability())]


# Almost concavity and the alpha constants

def _kernel_pair(trial):
    sigma = trial.any_rank()
    rank = int(trial.rng.integers(1, np.linalg.matrix_rank(sigma.matrix, tol=1e-9) + 1))
    return sample_supported_state(sigma, rank, trial.rng), sigma


@check("umegaki_almost_concavity", "-f(p) <= D(rho_p||sigma_p) - p D(rho1||sigma1) - (1-p) D(rho2||sigma2) <= 0",
       default_dims=(3,))
def _umegaki_ac(trial):
    return almost_concavity.check_almost_concavity("umegaki", (_kernel_pair(trial), _kernel_pair(trial)))


@check("bs_almost_concavity", "-f^(p) <= D^(rho_p||sigma_p) - p D^ - (1-p) D^ <= 0", default_dims=(3,))
def _bs_ac(trial):
    pairs = ((trial.state(), trial.full_rank()), (trial.state(), trial.full_rank()))
    return almost_concavity.check_almost_concavity("bs", pairs)


@check("bs_remainder_dominates", "f^(p) >= f(p) for commuting inputs")
def _bs_excess(trial):
    states = [DensityMatrix.diagonal(trial.rng.dirichlet(np.ones(trial.dim))) for _ in range(4)]
    excess = almost_concavity.bs_excess_over_umegaki(*states, p_grid=np.linspace(0.05, 0.95, 19))
    return [BoundReport("bs_remainder_dominates", -float(excess.min()), 0.0, inputs_fingerprint=fingerprint(*states))]


@check("c1_support_bound", "alpha(rho1, sigma1^-1, sigma2) <= 1/m~(sigma1)")
def _c1_bound(trial):
    rho1, sigma1 = _kernel_pair(trial)
    return [almost_concavity.check_c1_bound(rho1, sigma1, trial.full_rank())]


@check("alpha_quadrature_consistency", "halving abs_tol moves alpha by less than the residual")
def _alpha_consistency(trial):
    O, P, Q = trial.state(), trial.full_rank(), trial.full_rank()
    cfg = QuadratureConfig()
    value, residual = almost_concavity.alpha_with_error(O, P, Q, cfg)
    finer, finer_residual = almost_concavity.alpha_with_error(O, P, Q, cfg.halved())
    return [BoundReport("alpha_quadrature_consistency", abs(value - finer), residual + finer_residual,
                        inputs_fingerprint=fingerprint(O, P, Q), tol=1e-12)]


@check("alpha_spectral_agreement", "quadrature alpha equals the characteristic-function closed form")
def _alpha_spectral(trial):
    O, P, Q = trial.state(), trial.full_rank(), trial.full_rank()
    gap = abs(almost_concavity.alpha(O, P, Q) - almost_concavity.alpha_spectral(O, P, Q))
    return [BoundReport("alpha_spectral_agreement", gap, 0.0, inputs_fingerprint=fingerprint(O, P, Q))]


@check("peierls_bogolubov_step", "tr[rho1 (log sigma - log sigma1)] <= log alpha(rho1, sigma1^-1, sigma)")
def _peierls(trial):
    return [almost_concavity.check_peierls_bogolubov(trial.full_rank(), trial.full_rank(), trial.full_rank())]


@check("sherman_davis_step", "P (P sigma P)^+ P <= P sigma^-1 P")
def _sherman_davis(trial):
    rank = int(trial.rng.integers(1, trial.dim + 1))
    return [almost_concavity.check_sherman_davis(trial.full_rank(), random_projector(trial.dim, rank, trial.rng))]


@check("bs_alpha_chain", "D^(rho1||sigma1) - D^(rho1||sigma_p) <= log(p + (1-p) c^_1)")
def _bs_chain(trial):
    return [almost_concavity.check_bs_chain(trial.full_rank(), trial.full_rank(), trial.full_rank(),
                                            float(trial.rng.uniform(0.01, 0.99)))]


@check("tightness_equality", "the two-level example attains the Umegaki remainder")
def _tightness(trial):
    t = float(trial.rng.uniform(0.05, 0.45))
    reports = []
    for row in almost_concavity.tightness_table((t,), np.linspace(0.0, 1.0, 11)):
        reports.append(BoundReport("tightness_equality", row["difference"], 0.0, tol=1e-9, details=row))
    return reports


# Perturbed Delta constructions and ALAFF continuity

def _perturbed_pair(trial):
    rho, sigma = trial.state(), trial.state()
    tau = trial.full_rank()
    t = float(trial.rng.choice([0.0, 0.3, 0.7]))
    return rho, sigma, tau, t


@check("delta_trace_distance", "1/2 ||gamma+ - gamma-||_1 = 1 - t")
def _delta_distance(trial):
    rho, sigma, tau, t = _perturbed_pair(trial)
    plus, minus = alaff_engine.delta_states(rho, sigma, tau, t)
    gap = abs(trace_distance(plus, minus) - (1 - t))
    return [BoundReport("delta_trace_distance", gap, 0.0, inputs_fingerprint=fingerprint(rho, sigma, tau), tol=1e-10,
                        details={"t": t})]


@check("omega_representations", "both convex forms of the interpolating state agree")
def _omega(trial):
    rho, sigma, tau, t = _perturbed_pair(trial)
    left, right = alaff_engine.omega_representations(rho, sigma, tau, t)
    gap = float(np.max(np.abs(left - right)))
    return [BoundReport("omega_representations", gap, 0.0, inputs_fingerprint=fingerprint(rho, sigma, tau), tol=1e-12)]


def _close_pair(trial):
    """A random pair, mixed towards each other half of the time so small distances are covered."""
    rho, sigma = trial.state(), trial.state()
    if trial.rng.uniform() < 0.5:
        weight = float(10 ** trial.rng.uniform(-4, 0))
        sigma = DensityMatrix.from_matrix((1 - weight) * rho.matrix + weight * sigma.matrix)
    return rho, sigma


@check("conditional_entropy_bound", "|H(A|B)_rho - H(A|B)_sigma| <= 2 eps log d_A + r(eps)", arity=2,
       default_dims=(2, 2))
def _ce(trial):
    rho, sigma = _close_pair(trial)
    layout = trial.layout
    alaff = alaff_engine.conditional_entropy_alaff(layout)
    return [bound_catalog.check_ce_bound(rho, sigma, layout), alaff_engine.check_continuity(alaff, rho, sigma)]


@check("mutual_information_bound", "|I(A:B)_rho - I(A:B)_sigma| <= 2 eps log min{d_A, d_B} + 2 r(eps)", arity=2,
       default_dims=(2, 2))
def _mi(trial):
    rho, sigma = _close_pair(trial)
    layout = trial.layout
    alaff = alaff_engine.mutual_information_alaff(layout)
    return [bound_catalog.check_mi_bound(rho, sigma, layout), alaff_engine.check_continuity(alaff, rho, sigma)]


@check("conditional_mutual_information_bound", "|I(A:B|C)_rho - I(A:B|C)_sigma| <= 2 eps log min{d_A, d_B} + 2 r(eps)",
       arity=3, default_dims=(2, 2, 2))
def _cmi(trial):
    rho, sigma = _close_pair(trial)
    return [bound_catalog.check_cmi_bound(rho, sigma, trial.layout)]


@check("divergence_continuity", "|D(rho1||sigma) - D(rho2||sigma)| <= eps log 1/m~ + r(eps)")
def _divergence_continuity(trial):
    sigma = trial.any_rank()
    rho1 = sample_supported_state(sigma, None, trial.rng)
    rho2 = sample_supported_state(sigma, None, trial.rng)
    return [alaff_engine.check_continuity(alaff_engine.divergence_alaff(sigma), rho1, rho2)]


# Catalog bounds

@check("divergence_bound_chain", "D <= eps log 1/m~ + r(eps) <= (1 + log(1/m~)/sqrt 2) sqrt(2 eps)")
def _divergence_chain(trial):
    rho, sigma = _kernel_pair(trial)
    return bound_catalog.check_divergence_bound(rho, sigma)


def _dominated_sigmas(trial, rho, count=2):
    """Full-rank sigmas near rho, so m~ rho <= sigma_j holds with a useful m~."""
    return [mix_with_identity(DensityMatrix.from_matrix(
        (1 - w) * as_array(rho) + w * trial.full_rank().matrix), 0.05) for w in trial.rng.uniform(0.0, 1.0, size=count)]


@check("second_input_bound", "|D(rho||sigma1) - D(rho||sigma2)| <= 3 log^2(1/m~)/(1-m~) ||sigma1 - sigma2||^1/2")
def _second_input(trial):
    rho = trial.state()
    sigma1, sigma2 = _dominated_sigmas(trial, rho)
    return [bound_catalog.check_second_input_bound(rho, sigma1, sigma2)]


@check("two_input_bound", "|D(rho1||sigma1) - D(rho2||sigma2)| <= two-input bound")
def _two_input(trial):
    rho1 = trial.state()
    rho2 = DensityMatrix.from_matrix(0.5 * rho1.matrix + 0.5 * trial.state().matrix)
    sigma1, sigma2 = _dominated_sigmas(trial, 0.5 * (rho1.matrix + rho2.matrix))
    return [bound_catalog.check_two_input_bound(rho1, rho2, sigma1, sigma2)]


@check("bs_bound_shape", "fitted decay exponent of BS conditional entropy differences in [0.35, 1.5]", arity=2,
       default_dims=(2, 2), samplers=("min_eig_floor",))
def _bs_shape(trial):
    floor = trial.cfg.floor if trial.cfg.floor is not None else 0.05
    study = bound_catalog.bs_shape_study(trial.layout, floor, samples=10, seed=trial.rng)
    return [bound_catalog.check_bs_shape(study)]


# Applications

@check("markov_sandwich", "lower <= I(A:C|B) <= 2 (log min{d_A, d_C} + 1) ||rho - petz(rho)||^1/2", arity=3,
       default_dims=(2, 2, 2), samplers=FULL_RANK_ONLY)
def _markov(trial):
    return [applications.check_markov_sandwich(trial.state(), trial.layout)]


def _bipartite_memory(trial):
    d_a, d_m = trial.dims
    return SubsystemLayout(("A", "M"), (d_a, d_m))


@check("uncertainty_relation", "H(X|M) + H(Y|M) + xi >= H(A|M)", arity=2, default_dims=(2, 2))
def _uncertainty(trial):
    layout = _bipartite_memory(trial)
    bases = rotated_basis_pair(layout.dim_of("A"), trial.rng, min_overlap=0.05)
    return [applications.check_uncertainty(trial.state(), layout, bases)]


@check("uncertainty_identity", "H(X|M) + H(Y|M) = D(rho||E_X rho) + D(rho||E_Y rho) + 2 H(A|M)", arity=2,
       default_dims=(2, 2))
def _uncertainty_identity(trial):
    layout = _bipartite_memory(trial)
    bases = rotated_basis_pair(layout.dim_of("A"), trial.rng)
    return [applications.check_uncertainty_identity(trial.state(), layout, bases)]


@check("pinching_overlap_bound", "||(E_M - E_X o E_Y)(rho)||_1 <= sum_x max_y |1/d - overlap|", arity=2,
       default_dims=(2, 2))
def _overlap(trial):
    layout = _bipartite_memory(trial)
    bases = rotated_basis_pair(layout.dim_of("A"), trial.rng)
    return [applications.check_overlap_bound(trial.state(), layout, bases)]


@check("dc_almost_affinity", "-h(p) <= D_C(rho_p) - p D_C(rho) - (1-p) D_C(sigma) <= 0 for C = {1/d_A (x) sigma_B}",
       arity=2, default_dims=(2, 2))
def _dc_affinity(trial):
    C = applications.conditional_reference_set(trial.layout)
    return applications.check_dc_almost_affinity(C, "umegaki", trial.state(), trial.state())


@check("dc_almost_affinity_product", "-h(p) <= D_C deviation <= 2 h(p) for product states", arity=2,
       default_dims=(2, 2))
def _dc_affinity_product(trial):
    C = applications.product_state_set(trial.layout)
    return applications.check_dc_almost_affinity(C, "umegaki", trial.state(), trial.state())


@check("dc_almost_affinity_bs", "-g_d(p) <= D^_C deviation <= 0 for C = {1/d_A (x) sigma_B}", arity=2,
       default_dims=(2, 2), samplers=FULL_RANK_ONLY)
def _dc_affinity_bs(trial):
    C = applications.conditional_reference_set(trial.layout)
    return applications.check_dc_almost_affinity(C, "bs", trial.state(), trial.state(), p_grid=np.linspace(0.0, 1.0, 5))


@check("dc_continuity_product_states", "|D_C(rho) - D_C(sigma)| <= eps log min{d_A, d_B} + r(eps)", arity=2,
       default_dims=(2, 2))
def _dc_continuity(trial):
    rho, sigma = _close_pair(trial)
    return [applications.check_dc_continuity(rho, sigma, trial.layout)]


@check("variational_bs_conditional_entropy", "H^var(A|B) >= H^(A|B)", arity=2, default_dims=(2, 2),
       samplers=FULL_RANK_ONLY)
def _variational(trial):
    rho = trial.state()
    gap = applications.bs_conditional_gap(rho, trial.layout)
    return [BoundReport("variational_bs_conditional_entropy", -gap, 0.0, inputs_fingerprint=fingerprint(rho))]


def get_check(name):
    try:
        return CHECKS[name]
    except KeyError:
        raise UnknownCheckError(f"Unknown check '{name}'. Run list-checks for the registry.", check=name)


def list_checks():
    return [CHECKS[name].to_dict() for name in sorted(CHECKS)]


def _resolve_dims(spec: Check, cfg: CampaignConfig):
    if not cfg.dims:
        return [tuple(spec.default_dims)]
    dims = tuple(int(d) for d in cfg.dims)
    if spec.arity == 1:
        return [(d,) for d in dims]
    if len(dims) != spec.arity:
        raise PreconditionError(f"Check '{spec.name}' needs {spec.arity} factor dimensions, got {list(dims)}")
    return [dims]


def _worst(reports):
    return min(reports, key=lambda r: (r.passed, r.margin if np.isfinite(r.margin) else -np.inf))


def run_trial(spec: Check, cfg: CampaignConfig, dims, index):
    trial = Trial(np.random.default_rng(trial_seed(cfg.seed, index)), dims, cfg)
    try:
        reports = spec.run(trial)
    except RelEntError as err:
        logger.warning("%s trial %d raised %s: %s", spec.name, index, type(err).__name__, err.message)
        reports = [BoundReport(spec.name, float("nan"), 0.0, details={"error": err.message})]
    report = _worst(reports)
    report.trial = index
    if report.tol == Config.REPORT_TOL:
        report.tol = cfg.tol
    report.dims = tuple(dims)
    report.details.setdefault("sub_reports", len(reports))
    return report


def summarize(spec: Check, cfg: CampaignConfig, reports):
    failed = [r for r in reports if not r.passed]
    ratios = [r.measured / r.bound for r in reports if np.isfinite(r.measured) and r.bound > 0]
    margins = [r.margin for r in reports if np.isfinite(r.margin)]
    return {
        "check": spec.name,
        "description": spec.description,
        "config": cfg.to_dict(),
        "trials": len(reports),
        "passed": len(reports) - len(failed),
        "failed": len(failed),
        "failed_trials": [r.trial for r in failed],
        "worst_margin": float(min(margins)) if margins else None,
        "max_ratio": float(max(ratios)) if ratios else None,
        "hard": spec.hard,
        "ok": not (failed and spec.hard),
    }


@dataclass
class CampaignResult:
    reports: list
    summary: dict

    @property
    def ok(self):
        return self.summary["ok"]


def run_campaign(cfg: CampaignConfig):
    """Run ``cfg.trials`` trials of a registered check; reports come back ordered by trial index."""
    spec = get_check(cfg.check_name)
    if cfg.sampler not in spec.samplers:
        raise PreconditionError(
            f"Sampler '{cfg.sampler}' does not match check '{spec.name}' (allowed: {', '.join(spec.samplers)})"
        )
    dims_cycle = _resolve_dims(spec, cfg)
    logger.info("Campaign %s: %d trials, dims %s, seed %d", spec.name, cfg.trials, dims_cycle, cfg.seed)

    reports = [None] * cfg.trials
    step = max(cfg.trials // 10, 1)
    with ThreadPoolExecutor(max_workers=max(cfg.workers, 1)) as executor:
        futures = {
            executor.submit(run_trial, spec, cfg, dims_cycle[i % len(dims_cycle)], i): i for i in range(cfg.trials)
        }
        for done, future in enumerate(as_completed(futures), start=1):
            reports[futures[future]] = future.result()
            if done % step == 0:
                logger.info("Campaign %s: %d/%d trials done", spec.name, done, cfg.trials)

    summary = summarize(spec, cfg, reports)
    logger.info("Campaign %s: %d/%d passed, worst margin %s", spec.name, summary["passed"], summary["trials"],
                summary["worst_margin"])
    result = CampaignResult(reports, summary)
    if cfg.out:
        write_reports(result, cfg.out, cfg.fmt)
    return result


def write_reports(result: CampaignResult, out_dir, fmt="json"):
    """JSON lines (or CSV) per report plus one summary JSON; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    name = result.summary["check"]
    paths = []
    if fmt == "csv":
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["trial"] + CSV_COLUMNS)
            for report in result.reports:
                writer.writerow([report.trial] + report.csv_row())
    else:
        path = os.path.join(out_dir, f"{name}.jsonl")
        with open(path, "w") as handle:
            for report in result.reports:
                handle.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    paths.append(path)
    summary_path = os.path.join(out_dir, f"{name}.summary.json")
    with open(summary_path, "w") as handle:
        json.dump(result.summary, handle, sort_keys=True, indent=2)
    paths.append(summary_path)
    return paths
