import numpy as np
import pytest

from switchcert import ActivationBounds, SwitchedSystem
from switchcert.ncs import EXAMPLE3_MODES, build_delay_free, example1_plant, EXAMPLE1_K


@pytest.fixture
def example3():
    return SwitchedSystem(EXAMPLE3_MODES)


def example3_bounds(rho):
    return ActivationBounds((1.0 - rho, 0.0), (1.0, rho))


def example1(rho):
    return build_delay_free(example1_plant(), EXAMPLE1_K, rho)


def random_system(rng, M, n=2, scale=1.0):
    return SwitchedSystem(tuple(scale * rng.normal(size=(n, n)) for _ in range(M)))


def random_bounds(rng, M):
    """Valid bounds: brackets around a random point of the simplex."""
    p = rng.dirichlet(np.ones(M))
    lo = np.clip(p - rng.uniform(0, 0.3, M), 0, 1) * rng.integers(0, 2, M)
    hi = np.clip(p + rng.uniform(0, 0.3, M), 0, 1)
    lo = np.minimum(lo, p)
    return ActivationBounds(tuple(lo), tuple(hi))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
