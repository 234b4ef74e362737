"""Gibbs sampler for the hierarchical skill model.

Model::

    sigma^2 ~ InvGamma(a_sigma, b_sigma)      p ~ Beta(a_p, b_p)
    t = sqrt(2 (1 + sigma^2)) * Phi^-1((1 + p) / 2)
    s | sigma^2 ~ N(0, sigma^2 I)
    y_i | s ~ N(s_first - s_second, 2)
    o_i = +1 if y_i > t, 0 if |y_i| <= t, -1 otherwise

``p`` is the marginal tie probability between two random players, so the
threshold moves with the population variance.

Each sweep draws ``(p, sigma^2)``, sets ``t``, then draws the latent
performances ``y`` and the skills ``s`` as blocks. Two schemes are offered
for the first step:

``"collapsed"``
    ``p | o ~ Beta(a_p + ties, b_p + n - ties)`` and
    ``sigma^2 | s ~ InvGamma(a_sigma + A/2, b_sigma + |s|^2/2)``, accepted
    unconditionally. Fast, but the stationary law is only an approximation
    of the posterior because both draws ignore how ``t`` enters the
    likelihood.
``"exact"`` (default)
    The same two draws serve as a joint independence proposal, accepted
    with a Metropolis-Hastings ratio computed from the closed-form
    likelihood of the outcomes given ``s`` (``y`` integrated out). The
    chain then targets the exact posterior.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

from .convergence import effective_sample_size, split_rhat
from .exceptions import DomainError, SamplerError
from .model import MatchSet, Population
from .newton import _observation_terms

SQRT2 = math.sqrt(2.0)
SCHEMES = ("exact", "collapsed")
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class GibbsConfig:
    a_sigma: float = 2.0
    b_sigma: float = 1.0
    a_p: float = 2.0
    b_p: float = 5.0
    burn_in: int = 100
    samples: int = 250
    thin: int = 1
    seed: int = 0
    scheme: str = "exact"
    keep_skills: bool = False
    precision_form: str = "model"
    direct_limit: int = 50_000

    def __post_init__(self):
        for name in ("a_sigma", "b_sigma", "a_p", "b_p"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.samples < 1 or self.thin < 1 or self.burn_in < 0:
            raise DomainError("need samples >= 1, thin >= 1 and burn_in >= 0")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.precision_form not in ("model", "printed"):
            raise DomainError("precision_form must be 'model' or 'printed'")


def threshold_map(sigma_sq, p):
    """``sqrt(2 (1 + sigma_sq)) * Phi^-1((1 + p) / 2)``."""
    return np.sqrt(2.0 * (1.0 + np.asarray(sigma_sq))) * ndtri((1.0 + np.asarray(p)) / 2.0)


def sample_truncnorm(mean, sd, lo, hi, rng: np.random.Generator):
    """Exact draws from N(mean, sd^2) restricted to ``[lo, hi]``.

    Inverse-CDF sampling. Intervals lying in a tail are mirrored to the lower
    tail and inverted in log space, so bounds many standard deviations from
    the mean stay accurate. Arguments broadcast.
    """
    mean, sd, lo, hi = np.broadcast_arrays(
        np.asarray(mean, float), np.asarray(sd, float), np.asarray(lo, float), np.asarray(hi, float)
    )
    if np.any(sd <= 0) or np.any(~(lo < hi)):
        raise DomainError("truncated normal needs sd > 0 and lo < hi")
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    flip = a > 0
    # mirror right-tail intervals so the interval upper end is <= 0 or straddles 0
    a2 = np.where(flip, -b, a)
    b2 = np.where(flip, -a, b)
    u = rng.random(mean.shape)
    u = np.where(u == 0.0, 0.5**54, u)
    z = np.empty(mean.shape)

    tail = b2 <= 0
    if tail.any():
        la = log_ndtr(a2[tail])
        lb = log_ndtr(b2[tail])
        ratio = np.exp(la - lb)
        logp = lb + np.log(ratio + u[tail] * (1.0 - ratio))
        z[tail] = ndtri_exp(np.minimum(logp, 0.0))
    mid = ~tail
    if mid.any():
        pa = ndtr(a2[mid])
        pb = ndtr(b2[mid])
        z[mid] = ndtri(pa + u[mid] * (pb - pa))
    z = np.clip(z, a2, b2)
    z = np.where(flip, -z, z)
    out = mean + sd * z
    out = np.clip(out, lo, hi)
    return out if out.ndim else float(out)


@dataclass
class GibbsState:
    s: np.ndarray
    sigma_sq: float
    p: float
    t: float
    y: np.ndarray
    accepted: bool = True


@dataclass
class GibbsTrace:
    sigma_sq: np.ndarray
    p: np.ndarray
    t: np.ndarray
    ell2: np.ndarray
    accepted: np.ndarray
    skills: np.ndarray | None = None
    seed: int = 0
    chain: int = 0

    def __len__(self):
        return len(self.sigma_sq)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self.accepted) else math.nan

    def scalar(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def to_csv(self, path_or_buf, include_chain: bool = False):
        """Write ``iteration, sigma_sq, p, t, ell2`` rows (plus ``chain``)."""
        rows = []
        header = ("chain," if include_chain else "") + "iteration,sigma_sq,p,t,ell2"
        rows.append(header)
        for i in range(len(self)):
            prefix = f"{self.chain}," if include_chain else ""
            values = (float(self.sigma_sq[i]), float(self.p[i]), float(self.t[i]), float(self.ell2[i]))
            rows.append(prefix + f"{i}," + ",".join(repr(v) for v in values))
        text = "\n".join(rows) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


@dataclass(frozen=True)
class PosteriorSummary:
    ell2_mean: float
    ell2_sd: float
    t_mean: float
    t_sd: float
    ell2_quantiles: tuple
    t_quantiles: tuple
    sigma_sq_mean: float
    ess_ell2: float
    ess_t: float
    acceptance_rate: float = 1.0
    rhat: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "ell2_mean": self.ell2_mean,
            "ell2_sd": self.ell2_sd,
            "t_mean": self.t_mean,
            "t_sd": self.t_sd,
            "ell2_quantiles": list(self.ell2_quantiles),
            "t_quantiles": list(self.t_quantiles),
            "sigma_sq_mean": self.sigma_sq_mean,
            "ess_ell2": self.ess_ell2,
            "ess_t": self.ess_t,
            "acceptance_rate": self.acceptance_rate,
            "rhat": dict(self.rhat),
        }


_QUANTILES = (0.025, 0.5, 0.975)


def summarize(traces) -> PosteriorSummary:
    """Posterior mean, sd, quantiles and ESS of ``ell2`` and ``t`` over pooled chains."""
    if isinstance(traces, GibbsTrace):
        traces = [traces]
    ell2 = np.concatenate([tr.ell2 for tr in traces])
    t = np.concatenate([tr.t for tr in traces])
    sd = lambda x: float(np.std(x, ddof=1)) if len(x) > 1 else 0.0  # noqa: E731
    rhat = {}
    if len(traces) > 1 and len({len(tr) for tr in traces}) == 1:
        rhat = {k: v["rhat"] for k, v in multi_chain_diagnostics(traces, warn=False).items()}
    return PosteriorSummary(
        ell2_mean=float(np.mean(ell2)),
        ell2_sd=sd(ell2),
        t_mean=float(np.mean(t)),
        t_sd=sd(t),
        ell2_quantiles=tuple(float(q) for q in np.quantile(ell2, _QUANTILES)),
        t_quantiles=tuple(float(q) for q in np.quantile(t, _QUANTILES)),
        sigma_sq_mean=float(np.mean(np.concatenate([tr.sigma_sq for tr in traces]))),
        ess_ell2=effective_sample_size(np.stack([tr.ell2 for tr in traces])) if len({len(tr) for tr in traces}) == 1 else math.nan,
        ess_t=effective_sample_size(np.stack([tr.t for tr in traces])) if len({len(tr) for tr in traces}) == 1 else math.nan,
        acceptance_rate=float(np.mean(np.concatenate([tr.accepted for tr in traces]))),
        rhat=rhat,
    )


class GibbsSampler:
    """Precomputed structures for repeated sweeps over one data set."""

    def __init__(self, matches: MatchSet, size: int, config: GibbsConfig):
        if size < 1:
            raise DomainError("need at least one player")
        if len(matches) and matches.max_index >= size:
            raise DomainError("match refers to a player outside the population")
        self.matches = matches
        self.size = size
        self.config = config
        self.n = len(matches)
        self.n_ties = matches.n_ties
        f, g = matches.first, matches.second
        # x^T x is the (multi)graph Laplacian of the schedule
        deg = matches.counts(size).astype(float)
        lap = sparse.coo_matrix(
            (np.concatenate([-np.ones(self.n), -np.ones(self.n)]), (np.concatenate([f, g]), np.concatenate([g, f]))),
            shape=(size, size),
        ).tocsr() + sparse.diags(deg)
        self.laplacian = lap.tocsr()
        self.degree = deg
        if config.precision_form == "model":
            self.lik_scale = 0.5
        else:
            self.lik_scale = 1.0
        if size <= DENSE_LIMIT:
            self.solver = "dense"
            self.lap_dense = self.laplacian.toarray()
        elif size <= config.direct_limit:
            self.solver = "sparse"
        else:
            self.solver = "single-site"
        lo_code = matches.outcome
        self.is_win = lo_code == 1
        self.is_tie = lo_code == 0
        self.is_loss = lo_code == -1

    # -- individual conditionals -------------------------------------------

    def _log_weight(self, s: np.ndarray, t: float, p: float) -> float:
        """Target over proposal for the joint ``(sigma^2, p)`` independence step."""
        if self.n == 0:
            return 0.0
        u = s[self.matches.first] - s[self.matches.second]
        ll = float(np.sum(_observation_terms(u, t, self.matches.outcome)))
        return ll - self.n_ties * math.log(p) - (self.n - self.n_ties) * math.log1p(-p)

    def draw_hyper(self, state: GibbsState, rng: np.random.Generator) -> tuple[float, float, bool]:
        cfg = self.config
        p_new = rng.beta(cfg.a_p + self.n_ties, cfg.b_p + self.n - self.n_ties)
        p_new = min(max(p_new, 1e-300), 1.0 - 1e-16)
        shape = cfg.a_sigma + self.size / 2.0
        scale = cfg.b_sigma + float(state.s @ state.s) / 2.0
        sigma_sq_new = scale / rng.gamma(shape)
        if cfg.scheme == "collapsed":
            return sigma_sq_new, p_new, True
        u = rng.random()
        t_new = float(threshold_map(sigma_sq_new, p_new))
        log_ratio = self._log_weight(state.s, t_new, p_new) - self._log_weight(state.s, state.t, state.p)
        if math.log(u) < log_ratio:
            return sigma_sq_new, p_new, True
        return state.sigma_sq, state.p, False

    def draw_latent(self, s: np.ndarray, t: float, rng: np.random.Generator) -> np.ndarray:
        if self.n == 0:
            return np.empty(0)
        mean = s[self.matches.first] - s[self.matches.second]
        lo = np.where(self.is_win, t, np.where(self.is_tie, -t, -np.inf))
        hi = np.where(self.is_win, np.inf, np.where(self.is_tie, t, -t))
        if t == 0 and self.is_tie.any():
            raise SamplerError("tie observed with zero threshold")
        return sample_truncnorm(mean, SQRT2, lo, hi, rng)

    def draw_skills(self, y: np.ndarray, s: np.ndarray, sigma_sq: float, rng: np.random.Generator) -> np.ndarray:
        """Draw ``s | y, sigma^2`` from its Gaussian full conditional.

        With ``precision_form="model"`` the precision is ``x'x/2 + I/sigma^2``
        and the mean solves ``Q m = x'y/2``. A draw is obtained as
        ``Q^-1 (x'y/2 + x'e/sqrt(2) + z/sigma)`` with standard normal ``e, z``,
        whose covariance is exactly ``Q^-1``.
        """
        f, g = self.matches.first, self.matches.second
        c = self.lik_scale
        prior_prec = 1.0 / sigma_sq if self.config.precision_form == "model" else SQRT2 / sigma_sq
        eps = rng.standard_normal(self.n)
        z = rng.standard_normal(self.size)
        r = c * y + math.sqrt(c) * eps
        rhs = np.bincount(f, r, self.size) - np.bincount(g, r, self.size) + math.sqrt(prior_prec) * z
        try:
            if self.solver == "dense":
                q = c * self.lap_dense + prior_prec * np.eye(self.size)
                factor = linalg.cho_factor(q, lower=True, check_finite=False)
                return linalg.cho_solve(factor, rhs, check_finite=False)
            if self.solver == "sparse":
                q = (c * self.laplacian + prior_prec * sparse.identity(self.size)).tocsc()
                return splinalg.splu(q).solve(rhs)
        except (linalg.LinAlgError, RuntimeError) as exc:
            raise SamplerError(f"skill draw failed at sigma^2={sigma_sq:.4g}: {exc}") from exc
        # single-site Gibbs: s_a | s_-a ~ N((b_a - sum_{b != a} Q_ab s_b) / Q_aa, 1 / Q_aa)
        s = s.copy()
        lap = self.laplacian
        b = np.bincount(f, c * y, self.size) - np.bincount(g, c * y, self.size)
        noise = rng.standard_normal(self.size)
        indptr, indices, data = lap.indptr, lap.indices, lap.data
        for a in range(self.size):
            row = slice(indptr[a], indptr[a + 1])
            off = float(data[row] @ s[indices[row]]) - self.degree[a] * s[a]
            qaa = c * self.degree[a] + prior_prec
            s[a] = (b[a] - c * off) / qaa + noise[a] / math.sqrt(qaa)
        return s

    # -- sweep ------------------------------------------------------------

    def initial_state(self) -> GibbsState:
        cfg = self.config
        sigma_sq = cfg.b_sigma / (cfg.a_sigma - 1.0) if cfg.a_sigma > 1 else cfg.b_sigma / cfg.a_sigma
        p = cfg.a_p / (cfg.a_p + cfg.b_p)
        t = float(threshold_map(sigma_sq, p))
        return GibbsState(np.zeros(self.size), sigma_sq, p, t, np.zeros(self.n))

    def sweep(self, state: GibbsState, rng: np.random.Generator) -> GibbsState:
        sigma_sq, p, accepted = self.draw_hyper(state, rng)
        t = float(threshold_map(sigma_sq, p))
        y = self.draw_latent(state.s, t, rng)
        s = self.draw_skills(y, state.s, sigma_sq, rng)
        if not np.all(np.isfinite(s)):
            raise SamplerError(f"non-finite skills drawn at sigma^2={sigma_sq:.4g}")
        return GibbsState(s, sigma_sq, p, t, y, accepted)


def gibbs_sweep(state: GibbsState, matches: MatchSet, size: int, config: GibbsConfig, rng) -> GibbsState:
    """One full sweep (p, sigma^2, t, y, s). Builds the sampler on every call."""
    return GibbsSampler(matches, size, config).sweep(state, rng)


def _make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def run_chain(matches: MatchSet, pop: Population | int, config: GibbsConfig = GibbsConfig(), seed_seq=None, chain: int = 0):
    """Run one chain; returns ``(GibbsTrace, PosteriorSummary)``.

    Starts from zero skills, the prior mean of ``sigma^2`` and the prior
    mean of ``p``. ``burn_in`` sweeps are discarded, then ``samples`` states are
    kept, one every ``thin`` sweeps.
    """
    size = pop if isinstance(pop, int) else pop.size
    sampler = GibbsSampler(matches, size, config)
    rng = _make_rng(seed_seq if seed_seq is not None else config.seed)
    state = sampler.initial_state()
    for _ in range(config.burn_in):
        state = sampler.sweep(state, rng)
    k = config.samples
    sig = np.empty(k)
    ps = np.empty(k)
    ts = np.empty(k)
    acc = np.empty(k, dtype=bool)
    skills = np.empty((k, size)) if config.keep_skills else None
    for i in range(k):
        accepted = True
        for _ in range(config.thin):
            state = sampler.sweep(state, rng)
            accepted = accepted and state.accepted
        sig[i], ps[i], ts[i], acc[i] = state.sigma_sq, state.p, state.t, state.accepted
        if skills is not None:
            skills[i] = state.s
    trace = GibbsTrace(sig, ps, ts, 1.0 / (1.0 + sig), acc, skills, seed=config.seed, chain=chain)
    return trace, summarize(trace)


def run_chains(
    matches: MatchSet,
    pop: Population | int,
    config: GibbsConfig = GibbsConfig(),
    chains: int = 1,
    threads: int = 1,
):
    """Run independent chains on spawned seed substreams.

    Chain ``k`` always uses substream ``k`` of ``SeedSequence(config.seed)``,
    so results do not depend on ``threads``.
    """
    if chains < 1:
        raise DomainError("need at least one chain")
    streams = np.random.SeedSequence(config.seed).spawn(chains)
    if threads <= 1 or chains == 1:
        traces = [run_chain(matches, pop, config, streams[k], chain=k)[0] for k in range(chains)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_chain, matches, pop, config, streams[k], k) for k in range(chains)]
            traces = [f.result()[0] for f in futures]
    return traces, summarize(traces)


def multi_chain_diagnostics(traces, names=("sigma_sq", "p", "t", "ell2"), threshold: float = 1.05, warn: bool = True) -> dict:
    """Rank-normalized split-R-hat and bulk ESS per scalar across chains."""
    import warnings

    if len(traces) < 2:
        raise DomainError("need at least two chains")
    lengths = {len(tr) for tr in traces}
    if len(lengths) != 1:
        raise DomainError(f"chains have unequal lengths {sorted(lengths)}")
    out = {}
    for name in names:
        draws = np.stack([tr.scalar(name) for tr in traces])
        rhat = split_rhat(draws)
        out[name] = {"rhat": rhat, "ess": effective_sample_size(draws)}
        if warn and rhat > threshold:
            warnings.warn(f"R-hat for {name} is {rhat:.3f} > {threshold}", RuntimeWarning, stacklevel=2)
    return out
