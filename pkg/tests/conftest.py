import time

import numpy as np
import pytest

from fairshare.multi import MultiProblem, aumann_multi, raiffa_multi

TWO_PLAYER = np.array([[20, 20, 30], [100, 50, 10]], dtype=float)
THREE_SHARED = np.array(
    [
        [3.0, 4.7, 2.3, 8.4, 1.9, 2.2, 1.7],
        [8.7, 6.2, 18.4, 8.6, 3.7, 18.1, 19.6],
        [3.9, 9.0, 14.3, 20.8, 9.2, 21.1, 24.9],
    ]
)
THREE_DISTINCT = np.array(
    [
        [8.4, 8.7, 3.0, 0.1, 0.2, 0.5, 0.3],
        [0.3, 0.2, 18.5, 12.1, 19.6, 0.5, 0.2],
        [0.2, 0.7, 10.5, 0.1, 1.0, 31.1, 30.4],
    ]
)
PENTAGON_LINES = [(160.0, -1.0 / 3.0), (225.0, -2.5), (350.0, -5.0)]


def random_instances(count=100, seed=2024, players=(2, 3, 4), commodities=(3, 8)):
    """Utility matrices with entries uniform on (0, 10]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.choice(players))
        k = int(rng.integers(commodities[0], commodities[1] + 1))
        out.append(10.0 - rng.uniform(0.0, 10.0, size=(n, k)))
    return out


@pytest.fixture(scope="session")
def random_utilities():
    return random_instances()


@pytest.fixture(scope="session")
def random_solutions(random_utilities):
    """``(problem, raiffa, aumann)`` for every random instance."""
    out = []
    for u in random_utilities:
        problem = MultiProblem(u)
        out.append((problem, raiffa_multi(problem), aumann_multi(problem)))
    return out


# acceptance bookkeeping: criterion number -> [title, passed]
ACCEPTANCE = {}
SESSION = {}


def pytest_sessionstart(session):
    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # tests marked "last" measure the whole run, so they go at the end
    items.sort(key=lambda item: item.get_closest_marker("last") is not None)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}")
