"""Luck and returns-to-skill metrics.

Two families live here:

* the information-theoretic pair ``S`` (returns to skill, the fraction of
  outcome entropy explained by knowing the player) and ``L = 1 - S``;
* the latent-performance ratios ``ell2 = 1 / (1 + skill variance)`` computed
  either from a skill vector or from a population variance.

Natural logarithms are used throughout; ``S`` is a ratio so the base cancels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError
from .model import (
    Matchmaker,
    OutcomeDistribution,
    Population,
    SkillState,
    marginal_outcome_dists,
)


@dataclass(frozen=True)
class LuckReport:
    S: float
    L: float
    H_marginal: float
    I_player_outcome: float
    method: str = "exact"
    mc_stderr: float | None = None
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "S": self.S,
            "L": self.L,
            "H_marginal": self.H_marginal,
            "I_player_outcome": self.I_player_outcome,
            "method": self.method,
            "mc_stderr": self.mc_stderr,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class EllSquaredReport:
    value: float
    source: str

    def __float__(self):
        return self.value


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(p), 0.0)


def _as_matrix(per_player) -> np.ndarray:
    if isinstance(per_player, np.ndarray):
        probs = np.asarray(per_player, dtype=float)
    else:
        probs = np.array(
            [p.as_array() if isinstance(p, OutcomeDistribution) else p for p in per_player],
            dtype=float,
        )
    if probs.ndim != 2 or probs.shape[0] < 2:
        raise DomainError("need an (A, k) array of outcome distributions with A >= 2")
    if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
        raise DomainError("each row must be a probability distribution")
    return probs


def luck_from_marginals(per_player: Sequence[OutcomeDistribution] | np.ndarray) -> LuckReport:
    """Returns to skill and luck from each player's marginal outcome distribution.

    ``per_player`` may be a sequence of :class:`OutcomeDistribution` or an
    (A, k) array whose rows are distributions over k outcome categories.
    A game whose population outcome is certain has no entropy to explain; it
    is reported as ``L = 1`` with ``degenerate=True``.
    """
    probs = _as_matrix(per_player)
    pooled = probs.mean(axis=0)
    neg_h = float(_plogp(pooled).sum())
    neg_h_cond = float(_plogp(probs).sum(axis=1).mean())
    h = -neg_h
    mi = neg_h_cond - neg_h
    if h <= 1e-15:
        return LuckReport(S=0.0, L=1.0, H_marginal=max(h, 0.0), I_player_outcome=max(mi, 0.0), degenerate=True)
    s = (neg_h - neg_h_cond) / neg_h
    s = min(max(s, 0.0), 1.0)
    return LuckReport(S=s, L=1.0 - s, H_marginal=h, I_player_outcome=mi)


def marginals_from_pairwise(table) -> np.ndarray:
    """Uniform-matchmaking marginals from an (A, A, k) pairwise outcome table.

    ``table[a, b]`` is the distribution of ``a``'s outcome against ``b``; the
    diagonal is ignored.
    """
    table = np.asarray(table, dtype=float)
    size = table.shape[0]
    mask = ~np.eye(size, dtype=bool)
    return (table * mask[:, :, None]).sum(axis=1) / (size - 1)


def luck_from_fit(
    skills: SkillState,
    pop: Population | None = None,
    matchmaker: Matchmaker | None = None,
    exact_threshold: int = 20_000,
    seed: int = 0,
    n_opponents: int = 2_000,
) -> LuckReport:
    """Luck of a fitted skill model under (by default) uniform matchmaking.

    The tie category is kept only when ``skills.t > 0``. Populations larger
    than ``exact_threshold`` score each player against ``n_opponents``
    sampled opponents and report a Monte Carlo standard error.
    """
    if pop is not None and pop.size != skills.size:
        raise DomainError("skill vector does not match population size")
    probs, stderr = marginal_outcome_dists(
        skills, matchmaker, exact_threshold=exact_threshold, n_opponents=n_opponents, seed=seed
    )
    if skills.t == 0:
        probs = probs[:, [0, 2]]
        probs = probs / probs.sum(axis=1, keepdims=True)
    report = luck_from_marginals(probs)
    if stderr is None:
        return report
    mc = _subsample_stderr(probs, stderr if skills.t > 0 else stderr[:, [0, 2]])
    return LuckReport(
        S=report.S,
        L=report.L,
        H_marginal=report.H_marginal,
        I_player_outcome=report.I_player_outcome,
        method="subsampled",
        mc_stderr=mc,
        degenerate=report.degenerate,
    )


def _subsample_stderr(probs: np.ndarray, stderr: np.ndarray) -> float:
    """Delta-method standard error of ``L`` from per-player marginal errors.

    ``L = H(O|A) / H(O)``; entries are treated as independent estimates.
    """
    h = -float(_plogp(probs.mean(axis=0)).sum())
    if h <= 0:
        return 0.0
    h_cond = -float(_plogp(probs).sum(axis=1).mean())
    size = probs.shape[0]
    logs = np.log(np.clip(probs, 1e-300, None))
    log_pooled = np.log(np.clip(probs.mean(axis=0), 1e-300, None))
    d_hcond = -(logs + 1.0) / size
    d_h = -(log_pooled + 1.0) / size
    grad = d_hcond / h - h_cond * d_h[None, :] / h**2
    return float(np.sqrt(np.sum((grad * stderr) ** 2)))


def ell2_from_skills(s) -> EllSquaredReport:
    """``1 / (1 + mean(s**2))``: performance noise relative to skill spread."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size == 0:
        raise DomainError("empty skill vector")
    if not np.all(np.isfinite(s)):
        raise DomainError("skills must be finite")
    return EllSquaredReport(1.0 / (1.0 + float(np.mean(s * s))), "from_skills")


def ell2_from_sigma(sigma_sq: float) -> EllSquaredReport:
    """``1 / (1 + sigma_sq)`` for a normal population of skills."""
    sigma_sq = float(sigma_sq)
    if not sigma_sq >= 0:
        raise DomainError(f"sigma_sq must be non-negative, got {sigma_sq}")
    return EllSquaredReport(1.0 / (1.0 + sigma_sq), "from_sigma")
