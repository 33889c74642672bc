import numpy as np
import pytest

from curvlab import MappingChain


def swap_chain(rates=(1.0, 1.0), measure=(0.5, 0.5)):
    """Two states joined by one self-inverse swap move."""
    from curvlab.chain import MoveSet

    moves = MoveSet(np.array([[0, 1], [1, 0]]), 0, np.array([0, 1]), ("e", "swap"))
    table = np.array([[0.0, rates[0]], [0.0, rates[1]]])
    return MappingChain(moves, table, np.asarray(measure, float))


def random_reversible(n, rng, density=0.6):
    """Rate matrix Q with Q[x, y] = w[x, y] / m[x] for symmetric conductances w.

    A random spanning path keeps the chain irreducible.
    """
    m = rng.uniform(0.5, 2.0, n)
    m /= m.sum()
    w = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        w[a, b] = w[b, a] = rng.uniform(0.2, 2.0)
    for a in range(n):
        for b in range(a + 1, n):
            if w[a, b] == 0 and rng.random() < density:
                w[a, b] = w[b, a] = rng.uniform(0.2, 2.0)
    w /= w.sum() / n  # keep rates of order one
    Q = w / m[:, None]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q, m


@pytest.fixture
def swap():
    return swap_chain()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
