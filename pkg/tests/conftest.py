import numpy as np
import pytest

from auvgnc.lti import LtiSystem

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_stable(rng, n, margin=0.05, scale=1.0):
    """Random Hurwitz matrix: shifted Gaussian with spectral abscissa at -margin or below."""
    A = rng.normal(size=(n, n)) * scale
    shift = np.max(np.linalg.eigvals(A).real) + margin + rng.uniform(0, 0.5) * scale
    return A - shift * np.eye(n)


def random_desired(rng, n):
    """Random 2-in/2-out strictly proper stable system with nonsingular C B."""
    while True:
        A = random_stable(rng, n)
        B = rng.normal(size=(n, 2))
        C = rng.normal(size=(2, n))
        if abs(np.linalg.det(C @ B)) > 0.1:
            return LtiSystem(A, B, C)


_RUNS: dict = {}


@pytest.fixture(scope="session")
def scenario():
    """Run a bundled scenario once per session and reuse the result."""
    from auvgnc.sim.config import bundled_config
    from auvgnc.sim.runner import run

    def get(name):
        if name not in _RUNS:
            _RUNS[name] = run(bundled_config(name))
        return _RUNS[name]
    return get
