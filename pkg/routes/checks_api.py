import logging

from flask import Blueprint, current_app, jsonify, request

from harness import get_check, list_checks, run_campaign
from models import CampaignConfig

checks_api = Blueprint("checks_api", __name__)

logger = logging.getLogger(__name__)


def _bad_request(message: str, status_code: int = 400):
    return jsonify({"ok": False, "error": message}), status_code


@checks_api.get("/checks")
def get_checks():
    return jsonify({"ok": True, "checks": list_checks()})


@checks_api.get("/checks/<name>")
def get_check_detail(name: str):
    return jsonify({"ok": True, "check": get_check(name).to_dict()})


@checks_api.post("/checks/<name>")
def run_check(name: str):
    """Run a small campaign in-process and return its summary."""
    get_check(name)
    data = request.get_json(silent=True) or {}
    max_trials = current_app.config["API_MAX_TRIALS"]

    try:
        trials = int(data.get("trials", min(current_app.config["CAMPAIGN_TRIALS"], max_trials)))
        seed = int(data.get("seed", current_app.config["CAMPAIGN_SEED"]))
        tol = float(data.get("tol", current_app.config["REPORT_TOL"]))
        dims = tuple(int(d) for d in data["dims"]) if data.get("dims") else None
    except (TypeError, ValueError):
        return _bad_request("trials, seed, tol and dims must be numbers")

    if trials > max_trials:
        return _bad_request(f"At most {max_trials} trials per request")

    cfg = CampaignConfig(
        check_name=name,
        dims=dims,
        trials=trials,
        seed=seed,
        tol=tol,
        sampler=str(data.get("sampler", "ginibre")),
        rank=data.get("rank"),
        floor=data.get("floor"),
        workers=current_app.config["CAMPAIGN_WORKERS"],
    )
    result = run_campaign(cfg)
    logger.info("API campaign %s finished: %d/%d passed", name, result.summary["passed"], trials)

    payload = {"ok": True, "summary": result.summary}
    if data.get("include_reports"):
        payload["reports"] = [report.to_dict() for report in result.reports]
    return jsonify(payload)
