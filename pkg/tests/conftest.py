import json

import numpy as np
import pytest

from app import create_app
from models import DensityMatrix, SubsystemLayout
from sampling import sample_ginibre_state


@pytest.fixture
def app():
    app = create_app({"TESTING": True, "CAMPAIGN_WORKERS": 2})
    return app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def bell():
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)
    return DensityMatrix.pure(psi)


@pytest.fixture
def qubit_pair():
    return SubsystemLayout(("A", "B"), (2, 2))


@pytest.fixture
def random_state(rng):
    def draw(dim, rank=None):
        return sample_ginibre_state(dim, rank, rng)
    return draw


@pytest.fixture
def write_state(tmp_path):
    """Write a state to a JSON file in the exchange format and return its path."""
    counter = {"n": 0}

    def write(state):
        counter["n"] += 1
        path = tmp_path / f"op{counter['n']}.json"
        path.write_text(json.dumps(state.to_dict()))
        return str(path)
    return write
