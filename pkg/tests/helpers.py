"""Shared test helpers."""

import numpy as np

from ludometer.model import MatchSet


def random_league(rng, size, n, tie_share=0.3):
    """Random matches among ``size`` players with every outcome code present."""
    first = rng.integers(size, size=n)
    second = (first + rng.integers(1, size, size=n)) % size
    outcome = rng.choice([-1, 0, 1], size=n, p=[(1 - tie_share) / 2, tie_share, (1 - tie_share) / 2])
    outcome[:3] = [-1, 0, 1]
    return MatchSet(first, second, outcome)


def finite_diff_gradient(f, x, h=1e-5):
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def finite_diff_jacobian(f, x, h=1e-5):
    """Central differences of a vector function; row ``j`` is ``d f / d x_j``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(cols)
