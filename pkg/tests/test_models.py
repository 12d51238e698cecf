import numpy as np
import pytest

from errors import (
    DimensionMismatchError,
    InvalidStateError,
    LayoutError,
    NotHermitianError,
    PreconditionError,
)
from models import (
    BasisPair,
    BoundReport,
    CampaignConfig,
    DensityMatrix,
    HermitianOperator,
    QuadratureConfig,
    SolverConfig,
    SubsystemLayout,
    fingerprint,
)


def test_hermitian_rejects_asymmetric_matrix():
    with pytest.raises(NotHermitianError):
        HermitianOperator.from_matrix([[1.0, 1.0], [0.0, 1.0]])


def test_hermitian_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        HermitianOperator.from_matrix(np.ones((2, 3)))


def test_hermitian_matrix_is_read_only():
    op = HermitianOperator.from_matrix(np.eye(2))
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 2.0


def test_density_matrix_rejects_negative_eigenvalue():
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_matrix(np.diag([1.5, -0.5]))


def test_density_matrix_rejects_wrong_trace():
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_matrix(np.eye(2))


def test_density_matrix_absorbs_roundoff():
    rho = DensityMatrix.from_matrix(np.diag([1.0 + 1e-12, -1e-12]))
    assert np.linalg.eigvalsh(rho.matrix)[0] >= 0.0
    assert abs(np.trace(rho.matrix).real - 1.0) < 1e-15


def test_pure_state_is_normalized():
    rho = DensityMatrix.pure([3.0, 4.0j])
    assert abs(np.trace(rho.matrix).real - 1.0) < 1e-12
    assert abs(np.trace(rho.matrix @ rho.matrix).real - 1.0) < 1e-12


def test_exchange_format(random_state):
    rho = random_state(3)
    data = rho.to_dict()
    assert data["dim"] == 3
    assert np.abs(DensityMatrix.from_dict(data).matrix - rho.matrix).max() < 1e-15


def test_exchange_format_checks_declared_dim():
    with pytest.raises(DimensionMismatchError):
        HermitianOperator.from_dict({"dim": 3, "re": [[1.0, 0.0], [0.0, 0.0]]})


def test_layout_validation():
    with pytest.raises(LayoutError):
        SubsystemLayout(("A", "A"), (2, 2))
    with pytest.raises(LayoutError):
        SubsystemLayout(("A", "B"), (2,))
    layout = SubsystemLayout.of(A=2, B=3, C=2)
    assert layout.total_dim == 12
    assert layout.dim_of("A", "C") == 4
    assert layout.restrict(["C", "A"]).labels == ("A", "C")
    with pytest.raises(LayoutError):
        layout.check(6)
    with pytest.raises(LayoutError):
        layout.index("M")


def test_bound_report_pass_rule():
    assert BoundReport("x", measured=1.0, bound=1.0).passed
    assert BoundReport("x", measured=1.0 + 1e-9, bound=1.0).passed
    assert not BoundReport("x", measured=1.1, bound=1.0).passed
    assert not BoundReport("x", measured=float("nan"), bound=1.0).passed
    assert not BoundReport("x", measured=float("inf"), bound=1.0).passed


def test_bound_report_floor():
    report = BoundReport("x", measured=0.5, bound=1.0, floor=0.6)
    assert not report.passed
    report.floor = 0.4
    assert report.passed
    assert report.to_dict()["floor"] == 0.4


def test_bound_report_to_dict_is_json_ready():
    report = BoundReport("x", measured=np.float64(0.25), bound=1.0, details={"arr": np.arange(2), "inf": float("inf")})
    data = report.to_dict()
    assert data["margin"] == 0.75
    assert data["pass"] is True
    assert data["details"] == {"arr": [0, 1], "inf": "inf"}


def test_campaign_config_validation():
    with pytest.raises(PreconditionError):
        CampaignConfig("umegaki_nonneg", trials=0)
    with pytest.raises(PreconditionError):
        CampaignConfig("umegaki_nonneg", sampler="wishart")
    with pytest.raises(PreconditionError):
        CampaignConfig("umegaki_nonneg", fmt="xml")
    assert CampaignConfig("umegaki_nonneg").to_dict()["dims"] is None


def test_quadrature_config_tail():
    assert QuadratureConfig.tail_mass(0.0) == pytest.approx(1.0)
    cfg = QuadratureConfig(abs_tol=1e-10)
    T = cfg.truncation_for(1.0)
    assert QuadratureConfig.tail_mass(T) < 1e-10
    assert cfg.halved().abs_tol == 5e-11


def test_solver_config_ignores_unknown_keys():
    cfg = SolverConfig.from_dict({"starts": 2, "colour": "red"})
    assert cfg.starts == 2
    assert cfg.to_dict()["starts"] == 2


def test_basis_pair_requires_orthonormal_vectors():
    with pytest.raises(InvalidStateError):
        BasisPair.from_vectors([[1, 0], [1, 1]], [[1, 0], [0, 1]])
    pair = BasisPair.from_vectors([[1, 0], [0, 1]], [[1, 0], [0, 1]])
    assert np.allclose(pair.overlap_matrix, np.eye(2))


def test_fingerprint_is_stable():
    a, b = np.eye(2) / 2, np.diag([1.0, 0.0])
    assert fingerprint(a, b) == fingerprint(a.copy(), b.copy())
    assert fingerprint(a, b) != fingerprint(b, a)
