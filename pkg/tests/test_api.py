import numpy as np
import pytest

from almost_concavity import marginal_reference_operator
from models import DensityMatrix, HermitianOperator

LOG2 = np.log(2.0)


def _op(matrix):
    return DensityMatrix.from_matrix(matrix).to_dict()


def _op_unnormalized(matrix):
    return HermitianOperator.from_matrix(matrix).to_dict()


def test_index(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "/api/entropy" in response.get_json()["endpoints"]


def test_list_quantities(client):
    data = client.get("/api/quantities").get_json()
    assert data["ok"] is True
    names = [q["name"] for q in data["quantities"]]
    assert "umegaki" in names and "bs_cmi" in names


def test_entropy_of_maximally_mixed_qubit(client):
    response = client.post("/api/entropy", json={"quantity": "von_neumann", "rho": _op(np.eye(2) / 2)})
    data = response.get_json()
    assert response.status_code == 200
    assert data["value"] == pytest.approx(LOG2)
    assert data["finite"] is True
    bits = client.post("/api/entropy", json={"quantity": "von_neumann", "rho": _op(np.eye(2) / 2), "log_base": "2"})
    assert bits.get_json()["value"] == pytest.approx(1.0)


def test_entropy_with_layout(client, bell):
    body = {"quantity": "conditional_entropy", "rho": bell.to_dict(), "layout": {"labels": ["A", "B"], "dims": [2, 2]}}
    data = client.post("/api/entropy", json=body).get_json()
    assert data["value"] == pytest.approx(-LOG2)


def test_entropy_accepts_bare_real_matrix(client):
    response = client.post("/api/entropy", json={"quantity": "von_neumann", "rho": [[0.5, 0.0], [0.0, 0.5]]})
    assert response.get_json()["value"] == pytest.approx(LOG2)


def test_infinite_divergence_is_reported(client):
    body = {"quantity": "umegaki", "rho": _op(np.eye(2) / 2), "sigma": _op(np.diag([1.0, 0.0]))}
    data = client.post("/api/entropy", json=body).get_json()
    assert data["finite"] is False
    assert data["value"] == "inf"


def test_entropy_rejects_bad_payloads(client):
    assert client.post("/api/entropy", json={"quantity": "von_neumann"}).status_code == 400
    assert client.post("/api/entropy", data="not json", content_type="text/plain").status_code == 400
    unknown = client.post("/api/entropy", json={"quantity": "renyi", "rho": _op(np.eye(2) / 2)})
    assert unknown.status_code == 404
    bad_base = client.post("/api/entropy", json={"quantity": "von_neumann", "rho": _op(np.eye(2) / 2), "log_base": "10"})
    assert bad_base.status_code == 400


def test_invalid_state_goes_through_error_handler(client):
    response = client.post("/api/entropy", json={"quantity": "von_neumann", "rho": [[1.0, 0.0], [0.0, 1.0]]})
    data = response.get_json()
    assert response.status_code == 400
    assert data["ok"] is False
    assert data["kind"] == "InvalidStateError"


def test_layout_mismatch(client):
    body = {"quantity": "mutual_information", "rho": _op(np.eye(2) / 2), "layout": {"labels": ["A", "B"], "dims": [2, 2]}}
    response = client.post("/api/entropy", json=body)
    assert response.status_code == 400
    assert response.get_json()["kind"] == "LayoutError"


def test_remainder_at_the_tightness_states(client):
    body = {
        "kind": "umegaki",
        "rho1": _op(np.diag([1.0, 0.0])),
        "sigma1": _op(np.diag([0.25, 0.75])),
        "rho2": _op(np.diag([0.0, 1.0])),
        "sigma2": _op(np.diag([0.75, 0.25])),
        "p_grid": [0.0, 0.5, 1.0],
        "general": True,
    }
    data = client.post("/api/remainder", json=body).get_json()
    assert data["ok"] is True
    assert data["constants"]["c1"] == pytest.approx(3.0, abs=1e-8)
    assert [v["f"] for v in data["values"]] == [0.0, pytest.approx(2 * LOG2, abs=1e-8), 0.0]


def test_remainder_special_case_and_validation(client):
    sigma = _op(np.diag([0.4, 0.6]))
    body = {"kind": "bs", "rho1": _op(np.diag([1.0, 0.0])), "sigma1": sigma, "rho2": _op(np.diag([0.0, 1.0])),
            "sigma2": sigma, "p_grid": [0.5]}
    data = client.post("/api/remainder", json=body).get_json()
    assert data["provenance"] == "special-case:equal-second-arguments"
    assert data["values"][0]["f"] == pytest.approx(LOG2)
    assert client.post("/api/remainder", json={**body, "p_grid": [1.5]}).status_code == 400
    assert client.post("/api/remainder", json={**body, "kind": "petz"}).status_code == 400


def test_bounds(client):
    listed = client.get("/api/bounds").get_json()["bounds"]
    assert {"name": "conditional_entropy", "arguments": ["eps", "d_A"]} in listed
    data = client.post("/api/bounds/conditional_entropy", json={"eps": 1.0, "d_A": 2}).get_json()
    assert data["value"] == pytest.approx(4 * LOG2)
    assert client.post("/api/bounds/pinsker", json={}).status_code == 404
    assert client.post("/api/bounds/conditional_entropy", json={"eps": "x", "d_A": 2}).status_code == 400
    assert client.post("/api/bounds/conditional_entropy", json={"eps": 0.1}).status_code == 400


def test_divergence_bound_endpoint(client):
    body = {"rho": _op(np.diag([0.6, 0.4])), "sigma": _op(np.diag([0.5, 0.5]))}
    data = client.post("/api/bounds/divergence", json=body).get_json()
    assert data["epsilon"] == pytest.approx(0.1)
    assert data["value"] <= data["sqrt_form"]


def test_checks_list_and_detail(client):
    checks = client.get("/api/checks").get_json()["checks"]
    assert any(c["name"] == "umegaki_nonneg" for c in checks)
    detail = client.get("/api/checks/markov_sandwich").get_json()["check"]
    assert detail["arity"] == 3
    missing = client.get("/api/checks/pinsker")
    assert missing.status_code == 404
    assert missing.get_json()["kind"] == "UnknownCheckError"


def test_run_check(client):
    data = client.post("/api/checks/umegaki_nonneg", json={"trials": 3, "seed": 1, "include_reports": True}).get_json()
    assert data["ok"] is True
    assert data["summary"]["trials"] == 3
    assert data["summary"]["ok"] is True
    assert len(data["reports"]) == 3


def test_run_check_limits(client, app):
    too_many = app.config["API_MAX_TRIALS"] + 1
    assert client.post("/api/checks/umegaki_nonneg", json={"trials": too_many}).status_code == 400
    assert client.post("/api/checks/umegaki_nonneg", json={"trials": "many"}).status_code == 400
    assert client.post("/api/checks/pinsker", json={"trials": 1}).status_code == 404
    assert client.post("/api/checks/bs_bound_shape", json={"trials": 1}).status_code == 400


def test_uncertainty_endpoint(client):
    rho = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2)
    body = {"rho": _op(rho), "layout": {"labels": ["A", "M"], "dims": [2, 2]}}
    data = client.post("/api/uncertainty", json=body).get_json()
    assert data["ok"] is True
    assert data["report"]["pass"] is True
    assert data["report"]["margin"] == pytest.approx(LOG2, abs=1e-10)
    wrong = client.post("/api/uncertainty", json={**body, "layout": {"labels": ["A"], "dims": [4]}})
    assert wrong.status_code == 400


def test_markov_endpoint(client):
    body = {"rho": _op(np.eye(8) / 8), "layout": {"labels": ["A", "B", "C"], "dims": [2, 2, 2]}}
    data = client.post("/api/markov", json=body).get_json()
    assert data["cmi"] == pytest.approx(0.0, abs=1e-10)
    assert data["upper"] == pytest.approx(0.0, abs=1e-6)


def test_optimize_endpoint(client, bell):
    body = {
        "rho": bell.mix(DensityMatrix.maximally_mixed(4), 0.8).to_dict(),
        "layout": {"labels": ["A", "B"], "dims": [2, 2]},
        "set": "product",
        "solver": {"starts": 2, "seed": 3},
    }
    data = client.post("/api/optimize", json=body).get_json()
    assert data["ok"] is True
    assert data["set"] == "product_states"
    assert data["solver"]["starts"] == 2
    assert data["value"] == pytest.approx(data["closed_form"], abs=1e-6)
    assert client.post("/api/optimize", json={**body, "set": "separable"}).status_code == 400
    assert client.post("/api/optimize", json={**body, "kind": "renyi"}).status_code == 400


def test_remainder_with_marginal_reference(client, random_state, qubit_pair):
    rho1, rho2 = random_state(4), random_state(4)
    body = {
        "kind": "umegaki",
        "rho1": rho1.to_dict(),
        "sigma1": _op_unnormalized(marginal_reference_operator(rho1, qubit_pair)),
        "rho2": rho2.to_dict(),
        "sigma2": _op_unnormalized(marginal_reference_operator(rho2, qubit_pair)),
        "p_grid": [0.5],
        "marginal_reference": qubit_pair.to_dict(),
    }
    data = client.post("/api/remainder", json=body).get_json()
    assert data["provenance"] == "special-case:marginal-reference"
    assert data["values"][0]["f"] == pytest.approx(LOG2)

    mismatch = client.post("/api/remainder", json={**body, "sigma2": random_state(4).to_dict()})
    assert mismatch.status_code == 400
    assert mismatch.get_json()["kind"] == "PreconditionError"
