import numpy as np
import pytest

from llgauss.rng import Seed
from llgauss.stochastics import PathPair, SamplingScheme

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_path(t1, x1, t2, x2, T=None, resolution=None) -> PathPair:
    t1, t2 = np.asarray(t1, float), np.asarray(t2, float)
    T = max(t1[-1], t2[-1]) if T is None else T
    scheme = SamplingScheme(t1, t2, "test", {}, T, resolution)
    return PathPair(scheme, np.asarray(x1, float), np.asarray(x2, float))


def random_path(rng, n1, n2, T=1.0, lattice=None):
    """Random non-synchronous path; times on ``lattice`` when given."""
    def times(n):
        if lattice is None:
            inner = np.sort(rng.uniform(0, T, n - 1))
        else:
            k = int(round(T / lattice))
            inner = np.sort(rng.choice(np.arange(1, k), size=n - 1, replace=False)) * lattice
        return np.concatenate(([0.0], inner))
    t1, t2 = times(n1), times(n2)
    return make_path(t1, rng.standard_normal(n1), t2, rng.standard_normal(n2), T, lattice)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def seed():
    return Seed(2024)
