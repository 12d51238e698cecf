import json

import pytest

from config import Config
from errors import PreconditionError, UnknownCheckError
from harness import CHECKS, Check, get_check, list_checks, run_campaign, write_reports
from models import BoundReport, CampaignConfig

EXPECTED_CHECKS = {
    "umegaki_nonneg",
    "bs_dominates_umegaki",
    "bs_commuting_equality",
    "bs_alternative_form",
    "distorted_entropy_operator_inequality",
    "entropy_almost_concavity",
    "umegaki_almost_concavity",
    "bs_almost_concavity",
    "bs_remainder_dominates",
    "c1_support_bound",
    "alpha_quadrature_consistency",
    "alpha_spectral_agreement",
    "peierls_bogolubov_step",
    "sherman_davis_step",
    "bs_alpha_chain",
    "tightness_equality",
    "delta_trace_distance",
    "omega_representations",
    "conditional_entropy_bound",
    "mutual_information_bound",
    "conditional_mutual_information_bound",
    "divergence_continuity",
    "divergence_bound_chain",
    "second_input_bound",
    "two_input_bound",
    "bs_bound_shape",
    "markov_sandwich",
    "uncertainty_relation",
    "uncertainty_identity",
    "pinching_overlap_bound",
    "dc_almost_affinity",
    "dc_almost_affinity_product",
    "dc_almost_affinity_bs",
    "dc_continuity_product_states",
    "variational_bs_conditional_entropy",
}


def test_registry_covers_every_inequality():
    assert set(CHECKS) == EXPECTED_CHECKS
    listed = list_checks()
    assert [c["name"] for c in listed] == sorted(EXPECTED_CHECKS)
    assert all(c["description"] for c in listed)


@pytest.mark.parametrize("name", sorted(EXPECTED_CHECKS))
def test_every_check_passes_a_short_campaign(name):
    spec = get_check(name)
    cfg = CampaignConfig(name, trials=2, seed=7, sampler=spec.samplers[0], workers=2)
    result = run_campaign(cfg)
    assert result.ok, [r.to_dict() for r in result.reports if not r.passed]
    assert result.summary["trials"] == 2


def test_campaigns_are_deterministic(tmp_path):
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        cfg = CampaignConfig("umegaki_almost_concavity", trials=4, seed=3, workers=2, out=str(out))
        run_campaign(cfg)
        outputs.append((out / "umegaki_almost_concavity.jsonl").read_bytes())
    assert outputs[0] == outputs[1]


def test_reports_are_ordered_by_trial():
    result = run_campaign(CampaignConfig("umegaki_nonneg", trials=6, workers=3))
    assert [r.trial for r in result.reports] == list(range(6))
    assert result.summary["passed"] == 6
    assert result.summary["failed_trials"] == []


def test_one_factor_dims_cycle():
    result = run_campaign(CampaignConfig("umegaki_nonneg", dims=(2, 3), trials=4, workers=1))
    assert [r.dims for r in result.reports] == [(2,), (3,), (2,), (3,)]


def test_tol_override_applies_to_default_reports():
    result = run_campaign(CampaignConfig("umegaki_nonneg", trials=1, tol=1e-6, workers=1))
    assert result.reports[0].tol == 1e-6
    result = run_campaign(CampaignConfig("bs_dominates_umegaki", trials=1, tol=1e-6, workers=1))
    assert result.reports[0].tol == 1e-9


def test_sampler_must_match_check():
    with pytest.raises(PreconditionError):
        run_campaign(CampaignConfig("bs_bound_shape", trials=1, sampler="ginibre"))


def test_dims_must_match_arity():
    with pytest.raises(PreconditionError):
        run_campaign(CampaignConfig("conditional_entropy_bound", dims=(2, 2, 2), trials=1))


def test_unknown_check():
    with pytest.raises(UnknownCheckError):
        get_check("pinsker_inequality")
    with pytest.raises(UnknownCheckError):
        run_campaign(CampaignConfig("pinsker_inequality", trials=1))


def _failing(trial):
    return [BoundReport("always_fails", measured=1.0, bound=0.0)]


def _raising(trial):
    raise PreconditionError("no inputs for this trial")


def test_failures_are_reported(monkeypatch):
    monkeypatch.setitem(CHECKS, "always_fails", Check("always_fails", "1 <= 0", _failing))
    result = run_campaign(CampaignConfig("always_fails", trials=3, workers=1))
    assert not result.ok
    assert result.summary["failed_trials"] == [0, 1, 2]
    assert result.summary["worst_margin"] == -1.0


def test_soft_checks_do_not_fail_the_campaign(monkeypatch):
    monkeypatch.setitem(CHECKS, "soft", Check("soft", "1 <= 0", _failing, hard=False))
    result = run_campaign(CampaignConfig("soft", trials=2, workers=1))
    assert result.ok
    assert result.summary["failed"] == 2


def test_trial_errors_become_failed_reports(monkeypatch):
    monkeypatch.setitem(CHECKS, "raising", Check("raising", "raises", _raising))
    result = run_campaign(CampaignConfig("raising", trials=2, workers=1))
    assert not result.ok
    assert result.reports[0].details["error"] == "no inputs for this trial"


def test_write_reports(tmp_path):
    result = run_campaign(CampaignConfig("umegaki_nonneg", trials=3, workers=1))
    jsonl, summary = write_reports(result, tmp_path / "json")
    lines = open(jsonl).read().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["trial"] == 0
    assert json.load(open(summary))["check"] == "umegaki_nonneg"

    csv_path, _ = write_reports(result, tmp_path / "csv", fmt="csv")
    rows = open(csv_path).read().splitlines()
    assert rows[0] == "trial,bound_name,epsilon,measured,bound,margin,pass"
    assert len(rows) == 4


@pytest.mark.slow
@pytest.mark.parametrize("name", ["umegaki_almost_concavity", "bs_almost_concavity", "tightness_equality",
                                  "conditional_entropy_bound", "mutual_information_bound", "second_input_bound"])
def test_acceptance_campaigns(name):
    result = run_campaign(CampaignConfig(name, trials=Config.CAMPAIGN_TRIALS, seed=Config.CAMPAIGN_SEED))
    assert result.ok
