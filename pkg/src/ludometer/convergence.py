"""Multi-chain convergence diagnostics (rank-normalized split R-hat, bulk ESS)."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.special import ndtri


def _split(draws: np.ndarray) -> np.ndarray:
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    half = draws.shape[1] // 2
    if half < 2:
        return draws
    return np.concatenate([draws[:, :half], draws[:, -half:]], axis=0)


def _rank_normalize(draws: np.ndarray) -> np.ndarray:
    ranks = stats.rankdata(draws, method="average").reshape(draws.shape)
    return ndtri((ranks - 0.375) / (draws.size + 0.25))


def _rhat(chains: np.ndarray) -> float:
    m, n = chains.shape
    within = chains.var(axis=1, ddof=1).mean()
    between = n * chains.mean(axis=1).var(ddof=1)
    if within == 0:
        return 1.0 if between == 0 else math.inf
    var_plus = (n - 1) / n * within + between / n
    return float(math.sqrt(var_plus / within))


def split_rhat(draws) -> float:
    """Rank-normalized split R-hat; the max of the bulk and folded versions.

    ``draws`` has shape (chains, iterations). All-constant input returns 1.
    """
    chains = _split(draws)
    if np.ptp(chains) == 0:
        return 1.0
    bulk = _rhat(_rank_normalize(chains))
    folded = np.abs(chains - np.median(chains))
    tail = _rhat(_rank_normalize(folded)) if np.ptp(folded) > 0 else 1.0
    return max(bulk, tail)


def _autocov(x: np.ndarray) -> np.ndarray:
    n = len(x)
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return acov


def effective_sample_size(draws) -> float:
    """Bulk effective sample size with Geyer's initial monotone sequence."""
    chains = np.atleast_2d(np.asarray(draws, dtype=float))
    if chains.shape[0] > 1 or chains.shape[1] >= 8:
        chains = _split(chains)
    m, n = chains.shape
    if np.ptp(chains) == 0 or n < 4:
        return float(m * n)
    chains = _rank_normalize(chains)
    acov = np.stack([_autocov(c) for c in chains])
    mean_var = acov[:, 0].mean() * n / (n - 1)
    var_plus = mean_var * (n - 1) / n
    if m > 1:
        var_plus += chains.mean(axis=1).var(ddof=1)
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer initial positive sequence: keep (even, odd) pairs while their sum is positive
    kept = np.zeros(n)
    kept[:2] = rho[:2]
    even, odd = 1.0, rho[1]
    t = 1
    while t < n - 3 and even + odd > 0.0:
        even, odd = rho[t + 1], rho[t + 2]
        if even + odd >= 0:
            kept[t + 1], kept[t + 2] = even, odd
        t += 2
    max_t = t - 2
    if even > 0:
        kept[max_t + 1] = even
    # Geyer initial monotone sequence
    for t in range(1, max_t - 1, 2):
        if kept[t + 1] + kept[t + 2] > kept[t - 1] + kept[t]:
            kept[t + 1] = kept[t + 2] = (kept[t - 1] + kept[t]) / 2.0
    tau = -1.0 + 2.0 * kept[: max_t + 1].sum() + kept[max_t + 1 : max_t + 2].sum()
    tau = max(tau, 1.0 / math.log10(m * n))
    return float(m * n / tau)


def batch_means_stderr(x, batches: int = 50) -> float:
    """Monte Carlo standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    size = len(x) // batches
    if size < 1:
        return float(np.std(x, ddof=1) / math.sqrt(len(x)))
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))
