import numpy as np
import pytest

from chainbound.synth import algebraic_boundary, graph_boundary

# w^2 = (z - 4)^3: closure passes through the projection centre, so the
# minimal level over 0 is 2 with sheets +-(z - 4)^{3/2}
CUBIC_Q = [[64, 0, 1], [-48, 0, 0], [12, 0, 0], [-1, 0, 0]]
# w^2 = z - 4
SQRT_Q = [[4, 0, 1], [-1, 0, 0]]


def power_sums(roots, order):
    """Brute-force oracle: (len(roots), sum b, sum b^2, ..., sum b^order)."""
    roots = np.asarray(roots, dtype=complex)
    return np.array([np.sum(roots ** d) for d in range(order + 1)])


@pytest.fixture(scope="session")
def f_graph():
    """Graph of f = z^2 + z^3 over the unit circle."""
    return graph_boundary([0, 0, 1, 1])


@pytest.fixture(scope="session")
def cubic_curve():
    return algebraic_boundary(CUBIC_Q)


@pytest.fixture(scope="session")
def sqrt_curve():
    return algebraic_boundary(SQRT_Q)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
