import numpy as np
import pytest

from subsetvi.io.generators import random_model
from subsetvi.model import PomdpModel

BATTERY_SEED = 7100


def battery_model(i, states=None, actions=2, observations=2):
    """Model ``i`` of the seeded random battery: 2-4 states, some sparsity."""
    states = states or 2 + i % 3
    sparsity = (0.0, 0.25, 0.4)[i % 3]
    return random_model(seed=BATTERY_SEED + i, states=states, actions=actions,
                        observations=observations, sparsity=sparsity)


def battery(n=100, **kw):
    return [battery_model(i, **kw) for i in range(n)]


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def points_in(basis, n, gen):
    """``n`` random convex combinations of basis points (plus the points themselves)."""
    W = gen.dirichlet(np.ones(len(basis)), size=n)
    return np.vstack([basis.points, W @ basis.points])


def simplex_grid(step=0.01):
    """All 3-state beliefs on a grid with the given step."""
    k = int(round(1 / step))
    pts = [(i, j, k - i - j) for i in range(k + 1) for j in range(k + 1 - i)]
    return np.array(pts, dtype=np.float64) / k


def one_state(reward=1.0, discount=0.95):
    return PomdpModel(np.ones((1, 1, 1)), np.ones((1, 1, 1)), np.full((1, 1), reward), discount)


@pytest.fixture
def gen():
    return rng(12345)


# -- acceptance report -----------------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion and print it in the summary."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
        if detail:
            line += f": {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
