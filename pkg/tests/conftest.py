import numpy as np
import pytest

from geoquantile import AtomicMeasure, ObjectiveContext

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_points():
    """Half mass at (-1, 0) and (1, 0)."""
    return AtomicMeasure([[-1.0, 0.0], [1.0, 0.0]])


@pytest.fixture
def diamond():
    """Uniform on (+-1, 0), (0, +-1)."""
    return AtomicMeasure([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


@pytest.fixture
def random_ctx(rng):
    def make(m=30, d=2, ell_scale=0.5):
        ell = rng.standard_normal(d)
        ell *= ell_scale * rng.uniform() / np.linalg.norm(ell)
        return ObjectiveContext.create(rng.standard_normal((m, d)) * rng.uniform(0.5, 3), ell)
    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
