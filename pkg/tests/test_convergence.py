import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ludometer.convergence import batch_means_stderr, effective_sample_size, split_rhat

# arviz 0.23.4 rhat(method="rank") and ess(method="bulk") on the fixtures below
ORACLE = {
    "iid": (1.0027224658159581, 2171.2873945120637),
    "ar": (1.0115649762278844, 262.07287237692685),
    "shifted": (1.107439810275332, 24.95212830237439),
    "heavy": (1.0032402591302108, 564.9670440240363),
}
ORACLE_SINGLE_CHAIN_ESS = 21.441327294393975


def _ar1(rng, phi, shape):
    x = np.empty(shape)
    x[:, 0] = rng.normal(size=shape[0])
    for k in range(1, shape[1]):
        x[:, k] = phi * x[:, k - 1] + rng.normal(size=shape[0])
    return x


@pytest.fixture(scope="module")
def chains():
    rng = np.random.default_rng(20261015)
    iid = rng.normal(size=(4, 500))
    ar = _ar1(rng, 0.8, (4, 500))
    shifted = rng.normal(size=(4, 500))
    shifted[0] += 1.0
    heavy = rng.standard_cauchy(size=(3, 200))
    return {"iid": iid, "ar": ar, "shifted": shifted, "heavy": heavy}


class TestOracleAgreement:
    @pytest.mark.parametrize("name", sorted(ORACLE))
    def test_rhat(self, chains, name):
        assert split_rhat(chains[name]) == pytest.approx(ORACLE[name][0], rel=1e-12)

    @pytest.mark.parametrize("name", sorted(ORACLE))
    def test_ess(self, chains, name):
        assert effective_sample_size(chains[name]) == pytest.approx(ORACLE[name][1], rel=1e-12)

    def test_single_chain_ess(self, chains):
        assert effective_sample_size(chains["ar"][:1, :300]) == pytest.approx(ORACLE_SINGLE_CHAIN_ESS, rel=1e-12)


class TestSplitRhat:
    def test_constant(self):
        assert split_rhat(np.full((3, 50), 2.5)) == 1.0

    def test_chains_at_different_constants(self):
        assert split_rhat(np.repeat([[0.0], [1.0]], 50, axis=1)) == math.inf

    def test_trend_is_caught_by_splitting(self):
        # a single drifting chain looks fine unsplit but not split
        x = np.linspace(0, 5, 400)[None, :] + np.random.default_rng(1).normal(0, 0.1, (1, 400))
        assert split_rhat(x) > 1.5

    def test_iid_chains_near_one(self):
        rng = np.random.default_rng(2)
        values = [split_rhat(rng.normal(size=(4, 1000))) for _ in range(20)]
        assert max(values) < 1.01

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(-20, 20), st.sampled_from([-1.0, 1.0]))
    def test_scale_and_sign_invariant(self, seed, power, sign):
        # rank statistics; power-of-two scaling and negation keep every tie exact
        x = np.random.default_rng(seed).normal(size=(3, 40))
        assert split_rhat(sign * 2.0**power * x) == pytest.approx(split_rhat(x), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_chain_order_invariant(self, seed):
        x = np.random.default_rng(seed).normal(size=(4, 30))
        assert split_rhat(x[::-1]) == pytest.approx(split_rhat(x), rel=1e-12)


class TestEffectiveSampleSize:
    def test_constant(self):
        assert effective_sample_size(np.zeros((2, 100))) == 200

    def test_ar1_rate(self):
        # AR(1) with phi has integrated autocorrelation time (1 + phi) / (1 - phi)
        rng = np.random.default_rng(3)
        phi = 0.5
        ess = np.mean([effective_sample_size(_ar1(rng, phi, (4, 2000))) for _ in range(10)])
        assert ess == pytest.approx(8000 * (1 - phi) / (1 + phi), rel=0.1)

    def test_antithetic_capped(self):
        x = _ar1(np.random.default_rng(4), -0.7, (2, 1000))
        assert effective_sample_size(x) <= 2000 * math.log10(2000)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 4), st.integers(4, 200))
    def test_positive_and_bounded(self, seed, m, n):
        x = np.random.default_rng(seed).normal(size=(m, n))
        ess = effective_sample_size(x)
        assert 0 < ess <= m * n * max(1.0, math.log10(m * n)) + 1e-9


class TestBatchMeans:
    def test_iid_matches_naive(self):
        x = np.random.default_rng(5).normal(size=100_000)
        assert batch_means_stderr(x) == pytest.approx(1 / math.sqrt(len(x)), rel=0.25)

    def test_ar1_long_run_variance(self):
        # sd of the mean of AR(1) with unit innovations is 1 / ((1 - phi) sqrt(n))
        rng = np.random.default_rng(6)
        phi, n = 0.9, 50_000
        se = np.mean([batch_means_stderr(_ar1(rng, phi, (1, n))[0]) for _ in range(10)])
        assert se == pytest.approx(1 / ((1 - phi) * math.sqrt(n)), rel=0.15)

    def test_short_series_falls_back(self):
        x = np.array([1.0, 2.0, 4.0])
        assert batch_means_stderr(x) == pytest.approx(np.std(x, ddof=1) / math.sqrt(3))
