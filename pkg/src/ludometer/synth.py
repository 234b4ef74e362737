"""Synthetic data from the latent-performance model, plus brute-force oracles.

Nothing in this module calls into the estimators; the oracles here are
deliberately written along different computational paths so that agreement
with :mod:`ludometer.luck`, :mod:`ludometer.newton` and
:mod:`ludometer.gibbs` is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .exceptions import DomainError
from .luck import LuckReport
from .model import MatchSet, OutcomeDistribution, Population, SkillState

SQRT2 = math.sqrt(2.0)


def threshold_from_tie_rate(sigma_sq: float, tie_p: float) -> float:
    """Tie threshold giving marginal tie probability ``tie_p`` when skills are N(0, sigma_sq).

    Between two random players the performance difference is
    N(0, 2 * (1 + sigma_sq)), hence ``t = sqrt(2 (1 + sigma_sq)) * Phi^-1((1 + p) / 2)``.
    """
    if not 0 <= tie_p < 1:
        raise DomainError(f"tie_p must be in [0, 1), got {tie_p}")
    if sigma_sq < 0:
        raise DomainError(f"sigma_sq must be non-negative, got {sigma_sq}")
    return math.sqrt(2.0 * (1.0 + sigma_sq)) * float(special.ndtri((1.0 + tie_p) / 2.0))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic league.

    ``schedule`` is one of

    * ``"round-robin:R"`` -- R rounds; in round k every player hosts the
      player ``(k mod (A-1)) + 1`` places after them, so each round has A
      games and every player plays twice (30 players, 41 rounds gives an
      82-game, 1230-match season);
    * ``"random:N"`` -- N games between uniformly drawn distinct players;
    * ``"adjacent:N:W"`` -- N games, each pairing a random player with an
      opponent at most W places away in skill rank.
    """

    n_players: int
    sigma_sq: float = 1.0
    tie_p: float = 0.0
    schedule: str = "random:1000"
    seed: int = 0
    skills: tuple | None = None

    def __post_init__(self):
        if self.skills is not None:
            object.__setattr__(self, "skills", tuple(float(x) for x in self.skills))
            object.__setattr__(self, "n_players", len(self.skills))
        if self.n_players < 2:
            raise DomainError("need at least two players")
        if self.sigma_sq < 0:
            raise DomainError("sigma_sq must be non-negative")
        if not 0 <= self.tie_p < 1:
            raise DomainError("tie_p must be in [0, 1)")
        parse_schedule(self.schedule)

    @property
    def threshold(self) -> float:
        return threshold_from_tie_rate(self.sigma_sq, self.tie_p)


def parse_schedule(text: str) -> tuple:
    kind, _, rest = str(text).partition(":")
    parts = [p for p in rest.split(":") if p]
    try:
        if kind == "round-robin" and len(parts) == 1:
            return kind, int(parts[0])
        if kind == "random" and len(parts) == 1:
            return kind, int(parts[0])
        if kind == "adjacent" and len(parts) == 2:
            return kind, int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise DomainError(f"bad schedule {text!r}; expected round-robin:R, random:N or adjacent:N:W")


def build_schedule(schedule: str, skills: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    size = len(skills)
    parsed = parse_schedule(schedule)
    kind = parsed[0]
    if kind == "round-robin":
        rounds = parsed[1]
        home = np.tile(np.arange(size), rounds)
        shifts = np.repeat(np.arange(rounds) % (size - 1) + 1, size)
        return home, (home + shifts) % size
    if kind == "random":
        n = parsed[1]
        a = rng.integers(size, size=n)
        b = rng.integers(size - 1, size=n)
        b += b >= a
        return a, b
    n, window = parsed[1], parsed[2]
    if window < 1:
        raise DomainError("adjacency window must be at least 1")
    rank_to_player = np.argsort(-skills, kind="stable")
    ra = rng.integers(size, size=n)
    offsets = rng.integers(1, window + 1, size=n) * rng.choice((-1, 1), size=n)
    rb = ra + offsets
    rb = np.where((rb < 0) | (rb >= size), ra - offsets, rb)
    rb = np.clip(rb, 0, size - 1)
    rb = np.where(rb == ra, (ra + 1) % size, rb)
    return rank_to_player[ra], rank_to_player[rb]


def simulate_outcomes(s, t: float, first, second, rng: np.random.Generator) -> np.ndarray:
    """Outcome codes from latent performances ``Y ~ N(s, 1)`` per player."""
    s = np.asarray(s, dtype=float)
    y = s[first] - s[second] + SQRT2 * rng.standard_normal(len(first))
    return np.where(y > t, 1, np.where(y < -t, -1, 0)).astype(np.int64)


def generate(spec: SynthSpec) -> tuple[Population, SkillState, MatchSet]:
    """Draw a league: skills, a schedule and outcomes, all from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    if spec.skills is not None:
        s = np.array(spec.skills)
    else:
        s = math.sqrt(spec.sigma_sq) * rng.standard_normal(spec.n_players)
    t = spec.threshold
    first, second = build_schedule(spec.schedule, s, rng)
    outcome = simulate_outcomes(s, t, first, second, rng)
    width = len(str(spec.n_players - 1))
    pop = Population([f"p{i:0{width}d}" for i in range(spec.n_players)], None)
    matches = MatchSet(first, second, outcome, np.arange(len(first)))
    pop = Population(pop.labels, matches.counts(pop.size))
    return pop, SkillState(s, t, "probit-ties" if t > 0 else "probit"), matches


# ---------------------------------------------------------------------------
# oracles


def brute_force_luck(pairwise, max_players: int = 12) -> LuckReport:
    """Returns to skill by exhaustive enumeration of (player, opponent, outcome).

    ``pairwise[a, b, k]`` is the probability that ``a`` gets outcome ``k``
    against ``b``. The joint table under uniform matchmaking is built
    explicitly and mutual information is summed cell by cell.
    """
    table = np.asarray(pairwise, dtype=float)
    size = table.shape[0]
    if size > max_players:
        raise DomainError(f"brute force enumeration refused for {size} > {max_players} players")
    if size < 2 or table.ndim != 3 or table.shape[1] != size:
        raise DomainError("pairwise table must have shape (A, A, k) with A >= 2")
    k = table.shape[2]
    weight = 1.0 / (size * (size - 1))
    joint = np.zeros((size, k))
    for a in range(size):
        for b in range(size):
            if a == b:
                continue
            for o in range(k):
                joint[a, o] += weight * table[a, b, o]
    p_player = joint.sum(axis=1)
    p_outcome = joint.sum(axis=0)
    mi = 0.0
    for a in range(size):
        for o in range(k):
            if joint[a, o] > 0:
                mi += joint[a, o] * math.log(joint[a, o] / (p_player[a] * p_outcome[o]))
    h = -sum(p * math.log(p) for p in p_outcome if p > 0)
    if h <= 1e-15:
        return LuckReport(S=0.0, L=1.0, H_marginal=0.0, I_player_outcome=mi, degenerate=True)
    s = mi / h
    return LuckReport(S=s, L=1.0 - s, H_marginal=h, I_player_outcome=mi)


def pairwise_table(s, t: float = 0.0) -> np.ndarray:
    """(A, A, 3) win/tie/lose table from latent-normal skills, via direct CDF calls."""
    s = np.asarray(s, dtype=float)
    d = s[:, None] - s[None, :]
    win = stats.norm.cdf((d - t) / SQRT2)
    lose = stats.norm.cdf((-d - t) / SQRT2)
    tie = 1.0 - win - lose
    return np.stack([win, np.clip(tie, 0.0, None), lose], axis=-1)


def mc_kernel_check(s1: float, s2: float, t: float, draws: int = 100_000, seed: int = 0):
    """Monte Carlo win/tie/lose frequencies from ``Y_i ~ N(s_i, 1)``.

    Returns ``(OutcomeDistribution, stderr)`` with binomial standard errors.
    """
    if draws < 10_000:
        raise DomainError("use at least 10,000 draws")
    rng = np.random.default_rng(seed)
    y1 = s1 + rng.standard_normal(draws)
    y2 = s2 + rng.standard_normal(draws)
    diff = y1 - y2
    freq = np.array([np.mean(diff > t), np.mean((diff >= -t) & (diff <= t)), np.mean(diff < -t)])
    freq = freq / freq.sum()
    stderr = np.sqrt(freq * (1.0 - freq) / draws)
    return OutcomeDistribution.from_array(freq), stderr


def mc_multi_win_probs(s, draws: int = 200_000, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Exact-in-expectation multiplayer win probabilities: seat with the highest performance wins."""
    s = np.asarray(s, dtype=float)
    rng = np.random.default_rng(seed)
    y = s[None, :] + rng.standard_normal((draws, len(s)))
    freq = np.bincount(np.argmax(y, axis=1), minlength=len(s)) / draws
    return freq, np.sqrt(freq * (1.0 - freq) / draws)


def mc_bt_win_prob(s1: float, s2: float, draws: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Bradley-Terry win probability from Gumbel performances."""
    rng = np.random.default_rng(seed)
    y1 = rng.gumbel(s1, 1.0, draws)
    y2 = rng.gumbel(s2, 1.0, draws)
    p = float(np.mean(y1 > y2))
    return p, math.sqrt(p * (1 - p) / draws)


def _composite_legendre(lo: float, hi: float, panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _legendre_on(lo, hi, panels: int, order: int = 8):
    """Composite Gauss-Legendre nodes/weights on ``[lo, hi]`` (arrays broadcast row-wise)."""
    x, w = np.polynomial.legendre.leggauss(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    frac = np.arange(panels + 1) / panels
    edges = lo + (hi - lo) * frac
    half = (edges[..., 1:] - edges[..., :-1]) / 2.0
    mid = (edges[..., 1:] + edges[..., :-1]) / 2.0
    nodes = mid[..., :, None] + half[..., :, None] * x
    weights = half[..., :, None] * w
    shape = nodes.shape[:-2] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def _quadrature_moments(counts, a_sigma, b_sigma, a_p, b_p, level, u_range=(-14.0, 10.0)):
    """Posterior moments on a tensor grid in (log sigma^2, p, d).

    ``counts`` = (wins of player 0, ties, wins of player 1). For each
    ``(sigma^2, p)`` the d-axis gets fine panels over ``[-t-12, t+12]``, where
    the likelihood changes, and coarse panels over the Gaussian tails out to
    nine prior standard deviations.
    """
    wins0, ties, wins1 = counts
    us, uw = _composite_legendre(u_range[0], u_range[1], 24 * level, 8)
    ps, pw = _composite_legendre(0.0, 1.0, 8 * level, 8)
    log_prior_p = stats.beta.logpdf(ps, a_p, b_p)
    acc = np.zeros(9)
    for u, wu in zip(us, uw):
        sigma_sq = math.exp(u)
        log_prior_u = stats.invgamma.logpdf(sigma_sq, a_sigma, scale=b_sigma) + u
        if log_prior_u < -700:
            continue
        sd = math.sqrt(2.0 * sigma_sq)
        reach = 9.0 * sd
        t = math.sqrt(2.0 * (1.0 + sigma_sq)) * special.ndtri((1.0 + ps) / 2.0)
        inner = np.minimum(t + 12.0, reach)
        n_inner = max(int(math.ceil(2.0 * inner.max() * level)), 4)
        d_in, w_in = _legendre_on(-inner, inner, n_inner)
        parts_d = [d_in]
        parts_w = [w_in]
        if np.any(inner < reach):
            d_hi, w_hi = _legendre_on(inner, np.full_like(inner, reach), 16 * level)
            parts_d += [d_hi, -d_hi]
            parts_w += [w_hi, w_hi]
        d = np.concatenate(parts_d, axis=1)
        wd = np.concatenate(parts_w, axis=1)
        tt = t[:, None]
        hi = (tt - d) / SQRT2
        lo = (-tt - d) / SQRT2
        logw = -0.25 * d * d / sigma_sq - 0.5 * math.log(2.0 * math.pi * sd * sd)
        if wins0:
            logw = logw + wins0 * special.log_ndtr(-hi)
        if wins1:
            logw = logw + wins1 * special.log_ndtr(lo)
        if ties:
            logw = logw + ties * np.log(np.clip(special.ndtr(hi) - special.ndtr(lo), 1e-300, None))
        w = np.exp(logw + log_prior_p[:, None] + log_prior_u) * wd * pw[:, None] * wu
        total = w.sum()
        acc += np.array([
            total,
            total * sigma_sq,
            total * sigma_sq**2,
            (w * d).sum(),
            (w * d * d).sum(),
            (w.sum(axis=1) * ps).sum(),
            (w.sum(axis=1) * t).sum(),
            total / (1.0 + sigma_sq),
            total / (1.0 + sigma_sq) ** 2,
        ])
    m = acc / acc[0]
    return {
        "sigma_sq": m[1],
        "sigma_sq_sd": math.sqrt(max(m[2] - m[1] ** 2, 0.0)),
        "diff": m[3],
        "diff_sd": math.sqrt(max(m[4] - m[3] ** 2, 0.0)),
        "p": m[5],
        "t": m[6],
        "ell2": m[7],
        "ell2_sd": math.sqrt(max(m[8] - m[7] ** 2, 0.0)),
    }


def posterior_quadrature_oracle(
    matches: MatchSet,
    a_sigma: float = 2.0,
    b_sigma: float = 1.0,
    a_p: float = 2.0,
    b_p: float = 5.0,
    tol: float = 1e-4,
    max_level: int = 4,
) -> dict:
    """Exact posterior moments for a two-player league by tensor-grid quadrature.

    With two players the sum ``s_0 + s_1`` is independent of the difference
    ``d = s_0 - s_1`` under the prior and absent from the likelihood, so it
    integrates out and the posterior lives on ``(d, sigma^2, p)``. The grid
    is refined until the moments of ``sigma^2`` and ``d`` move by less than
    ``tol``.

    Returns a dict with keys ``sigma_sq, sigma_sq_sd, diff, diff_sd, p, t,
    ell2, ell2_sd`` and ``level`` (the grid refinement used).
    """
    if matches.max_index > 1:
        raise DomainError("quadrature oracle handles exactly two players")
    if len(matches) > 10:
        raise DomainError("quadrature oracle is limited to 10 matches")
    if a_sigma <= 1:
        raise DomainError("a_sigma must exceed 1 for a finite posterior mean of sigma^2")
    # outcome from player 0's side
    view = np.where(matches.first == 0, matches.outcome, -matches.outcome)
    counts = (int(np.sum(view == 1)), int(np.sum(view == 0)), int(np.sum(view == -1)))
    prev = _quadrature_moments(counts, a_sigma, b_sigma, a_p, b_p, 1)
    for level in range(2, max_level + 1):
        cur = _quadrature_moments(counts, a_sigma, b_sigma, a_p, b_p, level)
        change = max(abs(cur["sigma_sq"] - prev["sigma_sq"]), abs(cur["diff"] - prev["diff"]))
        if change < tol:
            cur["level"] = level
            return cur
        prev = cur
    raise DomainError(f"quadrature did not stabilise to {tol} by level {max_level} (last change {change:.2e})")
