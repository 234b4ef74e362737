"""Domain types and closed-form outcome-probability kernels.

All skills are expressed in units of the per-game performance standard
deviation, so a skill gap of ``sqrt(2)`` gives the stronger player a
``Phi(1)`` chance of winning under the probit model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import special

from .exceptions import DomainError

INV_SQRT2 = 1.0 / math.sqrt(2.0)

#: Outcome columns used by every (n, 3) probability array in the package.
OUTCOME_ORDER = ("win", "tie", "lose")

MODELS = ("bradley-terry", "probit", "probit-ties")


class TwoPlayerOutcome(enum.IntEnum):
    """Outcome of a two-player game from the first player's point of view."""

    FIRST_WINS = 1
    TIE = 0
    SECOND_WINS = -1


@dataclass(frozen=True)
class PlayerId:
    raw: str
    index: int


@dataclass(frozen=True)
class MatchRecord:
    first: PlayerId
    second: PlayerId
    outcome: TwoPlayerOutcome
    order: object = None

    def __post_init__(self):
        if self.first.index == self.second.index:
            raise DomainError(f"self-match for player {self.first.raw!r}")


@dataclass(frozen=True)
class MultiMatchRecord:
    players: tuple
    winner: int

    def __post_init__(self):
        if len(self.players) < 2:
            raise DomainError("a multiplayer match needs at least two players")
        if len({p.index for p in self.players}) != len(self.players):
            raise DomainError("players in a match must be distinct")
        if not 0 <= self.winner < len(self.players):
            raise DomainError("winner index out of range")


class Population:
    """Registry of players with dense indices assigned in first-seen order."""

    def __init__(self, labels: Iterable[str], match_counts: Sequence[int] | None = None):
        self.labels = tuple(str(label) for label in labels)
        self.index = {label: i for i, label in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise DomainError("player labels must be unique")
        if match_counts is None:
            match_counts = [0] * len(self.labels)
        self.match_counts = np.asarray(match_counts, dtype=np.int64)
        if self.match_counts.shape != (len(self.labels),):
            raise DomainError("match_counts must have one entry per player")

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return str(label) in self.index

    def __eq__(self, other):
        return (
            isinstance(other, Population)
            and self.labels == other.labels
            and np.array_equal(self.match_counts, other.match_counts)
        )

    def __repr__(self):
        return f"Population(size={self.size})"

    def player(self, key) -> PlayerId:
        if isinstance(key, (int, np.integer)):
            return PlayerId(self.labels[key], int(key))
        return PlayerId(str(key), self.index[str(key)])

    @property
    def players(self) -> list[PlayerId]:
        return [PlayerId(label, i) for i, label in enumerate(self.labels)]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "Population":
        """Index every label in ``pairs`` by first appearance."""
        index: dict[str, int] = {}
        counts: list[int] = []
        for pair in pairs:
            for label in pair:
                label = str(label)
                i = index.setdefault(label, len(index))
                if i == len(counts):
                    counts.append(0)
                counts[i] += 1
        return cls(index.keys(), counts)

    def check(self):
        if self.size < 2:
            raise DomainError(f"population needs at least 2 players, got {self.size}")
        return self


@dataclass(frozen=True)
class MatchSet:
    """Observed two-player matches as parallel arrays of dense indices.

    ``outcome`` uses the +1 / 0 / -1 coding of :class:`TwoPlayerOutcome`.
    ``order`` is an optional sortable key per match (dates, game ids).
    """

    first: np.ndarray
    second: np.ndarray
    outcome: np.ndarray
    order: np.ndarray | None = None

    def __post_init__(self):
        first = np.asarray(self.first, dtype=np.int64).reshape(-1)
        second = np.asarray(self.second, dtype=np.int64).reshape(-1)
        outcome = np.asarray(self.outcome, dtype=np.int64).reshape(-1)
        if not (first.shape == second.shape == outcome.shape):
            raise DomainError("first, second and outcome must have equal length")
        if np.any(first == second):
            raise DomainError("a match cannot pair a player with themself")
        if not np.isin(outcome, (-1, 0, 1)).all():
            raise DomainError("outcomes must be coded +1, 0 or -1")
        if len(first) and (first.min() < 0 or second.min() < 0):
            raise DomainError("player indices must be non-negative")
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)
        object.__setattr__(self, "outcome", outcome)
        if self.order is not None:
            order = np.asarray(self.order)
            if order.shape != first.shape:
                raise DomainError("order must have one entry per match")
            object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.first)

    @property
    def n_ties(self) -> int:
        return int(np.count_nonzero(self.outcome == 0))

    @property
    def max_index(self) -> int:
        if not len(self):
            return -1
        return int(max(self.first.max(), self.second.max()))

    def subset(self, mask_or_index) -> "MatchSet":
        order = None if self.order is None else self.order[mask_or_index]
        return MatchSet(
            self.first[mask_or_index],
            self.second[mask_or_index],
            self.outcome[mask_or_index],
            order,
        )

    def records(self, pop: Population) -> Iterator[MatchRecord]:
        for i in range(len(self)):
            yield MatchRecord(
                pop.player(int(self.first[i])),
                pop.player(int(self.second[i])),
                TwoPlayerOutcome(int(self.outcome[i])),
                None if self.order is None else self.order[i],
            )

    @classmethod
    def from_records(cls, records: Iterable[MatchRecord]) -> "MatchSet":
        records = list(records)
        order = [r.order for r in records]
        return cls(
            [r.first.index for r in records],
            [r.second.index for r in records],
            [int(r.outcome) for r in records],
            None if all(o is None for o in order) else np.asarray(order, dtype=object),
        )

    def counts(self, size: int) -> np.ndarray:
        return np.bincount(self.first, minlength=size) + np.bincount(self.second, minlength=size)


@dataclass
class SkillState:
    """Skill vector ``s`` and tie threshold ``t`` of a fitted model."""

    s: np.ndarray
    t: float = 0.0
    model: str = "probit-ties"

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.t = float(self.t)
        if self.t < 0:
            raise DomainError(f"tie threshold must be non-negative, got {self.t}")
        if not np.all(np.isfinite(self.s)):
            raise DomainError("skills must be finite")
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}")

    @property
    def size(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class Matchmaker:
    """Counterfactual pairing scheme.

    ``kind="uniform"`` pairs every opponent with equal probability.
    ``kind="empirical"`` weights opponents by ``pair_counts``, a symmetric
    (A, A) matrix of observed pairing frequencies.
    """

    kind: str = "uniform"
    pair_counts: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "empirical"):
            raise DomainError(f"unknown matchmaker kind {self.kind!r}")
        if self.kind == "empirical" and self.pair_counts is None:
            raise DomainError("empirical matchmaker needs pair_counts")

    @classmethod
    def empirical(cls, matches: MatchSet, size: int) -> "Matchmaker":
        counts = np.zeros((size, size))
        np.add.at(counts, (matches.first, matches.second), 1.0)
        return cls("empirical", counts + counts.T)

    def opponent_weights(self, a: int, size: int) -> np.ndarray:
        if self.kind == "uniform":
            w = np.full(size, 1.0 / (size - 1))
            w[a] = 0.0
            return w
        row = np.array(self.pair_counts[a], dtype=float)
        row[a] = 0.0
        total = row.sum()
        if total <= 0:
            raise DomainError(f"player {a} has no observed opponents")
        return row / total


@dataclass(frozen=True)
class OutcomeDistribution:
    win: float
    tie: float
    lose: float

    def __post_init__(self):
        probs = (self.win, self.tie, self.lose)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise DomainError(f"invalid outcome distribution {probs}")

    def as_array(self) -> np.ndarray:
        return np.array([self.win, self.tie, self.lose])

    @classmethod
    def from_array(cls, probs) -> "OutcomeDistribution":
        win, tie, lose = (float(p) for p in probs)
        return cls(win, tie, lose)

    def __getitem__(self, key):
        return getattr(self, key.lower())


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError(f"non-finite input: {v!r}")


def bt_win_prob(s1, s2):
    """Bradley-Terry probability that player 1 beats player 2 (logistic link)."""
    _check_finite(s1, s2)
    out = special.expit(np.subtract(s1, s2))
    return float(out) if np.ndim(out) == 0 else out


def probit_win_prob(s1, s2):
    """Probability ``Phi((s1 - s2)/sqrt(2))`` that player 1 beats player 2."""
    _check_finite(s1, s2)
    out = special.ndtr(np.subtract(s1, s2) * INV_SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def tie_outcome_probs(diff, t) -> np.ndarray:
    """Vectorized win/tie/lose probabilities for skill differences ``diff``.

    Returns an array of shape ``diff.shape + (3,)``. The tie mass is taken
    from whichever normal tail keeps the subtraction accurate.
    """
    diff = np.asarray(diff, dtype=float)
    if np.any(np.asarray(t) < 0):
        raise DomainError(f"tie threshold must be non-negative, got {t}")
    hi = (t - diff) * INV_SQRT2
    lo = (-t - diff) * INV_SQRT2
    win = special.ndtr(-hi)
    lose = special.ndtr(lo)
    tie = np.where(diff > 0, special.ndtr(hi) - special.ndtr(lo), special.ndtr(-lo) - special.ndtr(-hi))
    tie = np.maximum(tie, 0.0)
    return np.stack([win, tie, lose], axis=-1)


def probit_tie_outcome_probs(s1: float, s2: float, t: float) -> OutcomeDistribution:
    """Outcome distribution of the probit model with tie threshold ``t``.

    A tie occurs when the latent performance difference falls in ``[-t, t]``.
    """
    _check_finite(s1, s2, t)
    if t < 0:
        raise DomainError(f"tie threshold must be non-negative, got {t}")
    return OutcomeDistribution.from_array(tie_outcome_probs(float(s1) - float(s2), float(t)))


def multi_win_prob(s, j: int) -> float:
    """Product-of-pairwise-probits win probability for seat ``j``.

    This is ``prod_{k != j} Phi((s_j - s_k)/sqrt(2))``. The factors are not
    independent events, so the values do not sum to one over ``j`` once
    there are three or more players; see
    :func:`ludometer.synth.mc_multi_win_probs` for the exact probabilities.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or len(s) < 2:
        raise DomainError("multi_win_prob needs at least two players")
    if not 0 <= j < len(s):
        raise DomainError(f"seat index {j} out of range")
    _check_finite(s)
    others = np.delete(s, j)
    return float(np.prod(special.ndtr((s[j] - others) * INV_SQRT2)))


def marginal_outcome_dists(
    skills: SkillState,
    matchmaker: Matchmaker | None = None,
    exact_threshold: int = 20_000,
    n_opponents: int = 2_000,
    seed: int = 0,
    chunk: int = 512,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Outcome distribution of every player against the matchmaker.

    Returns ``(probs, stderr)`` where ``probs`` is (A, 3) in
    :data:`OUTCOME_ORDER`. For uniform matchmaking with ``A`` above
    ``exact_threshold`` each player is scored against ``n_opponents`` opponents
    sampled without replacement, and ``stderr`` holds the Monte Carlo standard
    errors; otherwise ``stderr`` is ``None``.
    """
    matchmaker = matchmaker or Matchmaker()
    s = skills.s
    size = len(s)
    if size < 2:
        raise DomainError("need at least two players")
    t = skills.t
    out = np.empty((size, 3))

    if matchmaker.kind == "empirical":
        for a in range(size):
            w = matchmaker.opponent_weights(a, size)
            out[a] = w @ tie_outcome_probs(s[a] - s, t)
        return out, None

    if size <= exact_threshold:
        for start in range(0, size, chunk):
            rows = slice(start, min(start + chunk, size))
            probs = tie_outcome_probs(s[rows, None] - s[None, :], t)
            total = probs.sum(axis=1)
            # self-play contributes {tie: 1} at t > 0 and {0.5, 0, 0.5} at t == 0
            total -= tie_outcome_probs(np.zeros(rows.stop - rows.start), t)
            out[rows] = total / (size - 1)
        return out, None

    rng = np.random.default_rng(seed)
    m = min(n_opponents, size - 1)
    stderr = np.empty((size, 3))
    for a in range(size):
        opp = rng.choice(size - 1, size=m, replace=False)
        opp[opp >= a] += 1
        probs = tie_outcome_probs(s[a] - s[opp], t)
        out[a] = probs.mean(axis=0)
        # finite-population correction for sampling without replacement
        fpc = (size - 1 - m) / max(size - 2, 1)
        stderr[a] = probs.std(axis=0, ddof=1) / math.sqrt(m) * math.sqrt(fpc)
    return out, stderr


def marginal_outcome_dist(
    a,
    skills: SkillState,
    pop: Population,
    matchmaker: Matchmaker | None = None,
) -> OutcomeDistribution:
    """Outcome distribution of player ``a`` against an opponent drawn by ``matchmaker``."""
    pop.check()
    idx = pop.player(a).index
    w = (matchmaker or Matchmaker()).opponent_weights(idx, pop.size)
    probs = w @ tie_outcome_probs(skills.s[idx] - skills.s, skills.t)
    return OutcomeDistribution.from_array(probs / probs.sum())
