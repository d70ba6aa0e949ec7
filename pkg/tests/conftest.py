import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from riskbandit.model import ActionSet, MVInstance  # noqa: E402
from riskbandit.sor import load_scenario, to_instance  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def scenario_one():
    instance, _ = to_instance(load_scenario("I"), 4)
    return instance


@pytest.fixture
def basis_instance():
    return MVInstance(ActionSet(np.eye(3)), np.array([0.3, 0.2, 0.1]), np.array([0.1, -0.2, 0.3]), omega=1.0, rho=2.0)


def random_instance(rng: np.random.Generator, K: int, d: int, rho: float = 2.0) -> MVInstance:
    """Spanning unit-ball actions with valid random coefficients."""
    X = rng.standard_normal((K, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True) * rng.uniform(1.0, 2.0, size=(K, 1))
    theta = rng.standard_normal(d)
    theta *= rng.uniform(0.2, 1.0) / np.linalg.norm(theta)
    phi = rng.standard_normal(d)
    phi *= rng.uniform(0.0, 0.9) / np.linalg.norm(phi)
    return MVInstance(ActionSet(X), theta, phi, omega=1.0, rho=rho)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
