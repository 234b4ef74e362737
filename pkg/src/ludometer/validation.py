"""Input checks shared by the estimator classes."""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError
from .model import MatchSet, Population

CLASSES = np.array([-1, 0, 1])


def check_pairs(X) -> np.ndarray:
    """``X`` as an (n, 2) array of player labels (strings or integers)."""
    X = np.asarray(X, dtype=object)
    if X.ndim != 2 or X.shape[1] != 2:
        raise DomainError(f"X must have shape (n_matches, 2), got {X.shape}")
    if X.shape[0] == 0:
        raise DomainError("X has no rows")
    if any(v is None for v in X.ravel()):
        raise DomainError("X contains missing player labels")
    return X


def check_outcomes(y, n: int) -> np.ndarray:
    """``y`` as int64 codes in {-1, 0, 1} with ``n`` entries."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise DomainError(f"y must be a vector of length {n}")
    if y.dtype.kind == "f":
        if not np.all(np.isfinite(y)) or np.any(y != np.round(y)):
            raise DomainError("y must hold integer outcome codes")
    try:
        codes = y.astype(np.int64)
    except (TypeError, ValueError) as exc:
        raise DomainError("y must hold outcome codes -1, 0 or 1") from exc
    if not np.isin(codes, CLASSES).all():
        raise DomainError("y must hold outcome codes -1, 0 or 1")
    return codes


def check_matches(X, y) -> tuple[Population, MatchSet]:
    """Build a population (first-seen order) and a match set from ``(X, y)``."""
    X = check_pairs(X)
    codes = check_outcomes(y, X.shape[0])
    labels = [(str(a), str(b)) for a, b in X]
    if any(a == b for a, b in labels):
        raise DomainError("a row of X pairs a player with themself")
    pop = Population.from_pairs(labels)
    first = np.array([pop.index[a] for a, _ in labels], dtype=np.int64)
    second = np.array([pop.index[b] for _, b in labels], dtype=np.int64)
    matches = MatchSet(first, second, codes, np.arange(len(codes)))
    return pop, matches


def lookup(pop: Population, X) -> tuple[np.ndarray, np.ndarray]:
    """Dense indices for the rows of ``X``; unseen labels map to ``-1``."""
    X = check_pairs(X)
    get = pop.index.get
    first = np.array([get(str(a), -1) for a in X[:, 0]], dtype=np.int64)
    second = np.array([get(str(b), -1) for b in X[:, 1]], dtype=np.int64)
    return first, second
