import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ludometer.exceptions import DomainError
from ludometer.model import (
    Matchmaker,
    MatchSet,
    MultiMatchRecord,
    OutcomeDistribution,
    PlayerId,
    Population,
    SkillState,
    TwoPlayerOutcome,
    bt_win_prob,
    marginal_outcome_dist,
    marginal_outcome_dists,
    multi_win_prob,
    probit_tie_outcome_probs,
    probit_win_prob,
    tie_outcome_probs,
)
from ludometer.synth import mc_multi_win_probs

# Frozen 20-digit values from mpmath at 30 significant digits.
LOGISTIC_2_5 = 0.92414181997875644881
PHI_1 = 0.84134474606854294859
KERNEL_1_2_0_3_0_5 = (0.61135129460523922707, 0.22754930231347000942, 0.16109940308129076351)
MULTI_1_0_M1 = 0.70045658263151135643
MARGINALS_2_1_0_M3 = (
    (0.83100321787251181881, 0.10798930545879713534, 0.06100747666869104585),
    (0.59197373795565070753, 0.14692068319411546696, 0.26110557885023382551),
    (0.38147406105774747807, 0.11839088017515758513, 0.50013505876709493680),
    (0.0024819445482697241271, 0.012833208303570355504, 0.98468484714815992037),
)

skill = st.floats(-8, 8, allow_nan=False)
threshold = st.floats(0, 4, allow_nan=False)


class TestBradleyTerry:
    def test_even(self):
        assert bt_win_prob(0, 0) == 0.5

    def test_log_three(self):
        assert bt_win_prob(math.log(3), 0) == pytest.approx(0.75, abs=1e-15)

    def test_against_high_precision(self):
        assert bt_win_prob(2.1, -0.4) == pytest.approx(LOGISTIC_2_5, rel=1e-14)

    @given(skill, skill)
    def test_complement(self, a, b):
        assert bt_win_prob(a, b) + bt_win_prob(b, a) == pytest.approx(1.0, abs=1e-15)

    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            bt_win_prob(float("nan"), 0)


class TestProbit:
    def test_even(self):
        assert probit_win_prob(0, 0) == 0.5

    def test_phi_one(self):
        assert probit_win_prob(math.sqrt(2), 0) == pytest.approx(PHI_1, rel=1e-14)

    @given(skill, skill, st.floats(-5, 5))
    def test_translation(self, a, b, c):
        assert probit_win_prob(a + c, b + c) == pytest.approx(probit_win_prob(a, b), abs=1e-12)

    def test_rejects_inf(self):
        with pytest.raises(DomainError):
            probit_win_prob(math.inf, 0)


class TestTieKernel:
    def test_no_ties_at_zero_threshold(self):
        d = probit_tie_outcome_probs(0, 0, 0)
        assert (d.win, d.tie, d.lose) == (0.5, 0.0, 0.5)

    @pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
    def test_symmetric_tie_mass(self, t):
        d = probit_tie_outcome_probs(0, 0, t)
        assert d.tie == pytest.approx(2 * probit_win_prob(t, 0) - 1, abs=1e-15)

    def test_high_precision_values(self):
        d = probit_tie_outcome_probs(1.2, 0.3, 0.5)
        np.testing.assert_allclose(d.as_array(), KERNEL_1_2_0_3_0_5, rtol=1e-13)

    def test_latent_simulation(self):
        rng = np.random.default_rng(20160)
        draws = 10_000_000
        diff = (1.2 + rng.standard_normal(draws)) - (0.3 + rng.standard_normal(draws))
        freq = np.array([np.mean(diff > 0.5), np.mean(np.abs(diff) <= 0.5), np.mean(diff < -0.5)])
        se = np.sqrt(freq * (1 - freq) / draws)
        exact = probit_tie_outcome_probs(1.2, 0.3, 0.5).as_array()
        assert np.all(np.abs(freq - exact) <= 3 * se)

    def test_negative_threshold(self):
        with pytest.raises(DomainError):
            probit_tie_outcome_probs(0, 0, -0.1)

    @settings(max_examples=300)
    @given(skill, skill, threshold)
    def test_is_distribution(self, a, b, t):
        p = probit_tie_outcome_probs(a, b, t).as_array()
        assert np.all(p >= 0)
        assert abs(p.sum() - 1) <= 1e-12

    def test_vectorized_distribution(self):
        rng = np.random.default_rng(1)
        diff = rng.normal(0, 4, 10_000)
        t = rng.uniform(0, 3, 10_000)
        p = tie_outcome_probs(diff, t)
        assert np.all(p >= 0)
        assert np.max(np.abs(p.sum(axis=1) - 1)) <= 1e-12

    @given(skill, skill, threshold)
    def test_antisymmetry(self, a, b, t):
        fwd = probit_tie_outcome_probs(a, b, t)
        rev = probit_tie_outcome_probs(b, a, t)
        assert (fwd.win, fwd.tie, fwd.lose) == (rev.lose, rev.tie, rev.win)

    @given(skill, skill, st.floats(-5, 5), threshold)
    def test_translation(self, a, b, c, t):
        np.testing.assert_allclose(
            probit_tie_outcome_probs(a + c, b + c, t).as_array(),
            probit_tie_outcome_probs(a, b, t).as_array(),
            atol=1e-12,
        )

    def test_monotone_and_unimodal(self):
        diff = np.linspace(-6, 6, 1201)
        p = tie_outcome_probs(diff, 0.7)
        assert np.all(np.diff(p[:, 0]) > 0)
        assert np.argmax(p[:, 1]) == 600
        assert np.all(np.diff(p[:600, 1]) >= 0)
        assert np.all(np.diff(p[600:, 1]) <= 0)


class TestMultiWin:
    def test_two_players_is_probit(self):
        assert multi_win_prob([0.4, -0.2], 0) == pytest.approx(probit_win_prob(0.4, -0.2), abs=1e-15)

    def test_equal_three(self):
        for j in range(3):
            assert multi_win_prob([0.3, 0.3, 0.3], j) == pytest.approx(0.25, abs=1e-15)

    def test_high_precision(self):
        assert multi_win_prob([1, 0, -1], 0) == pytest.approx(MULTI_1_0_M1, rel=1e-14)

    def test_product_is_not_normalized(self):
        # the product of pairwise factors is not the seat-wins probability
        s = [1.0, 0.0, -1.0]
        total = sum(multi_win_prob(s, j) for j in range(3))
        assert abs(total - 1) > 0.05
        freq, se = mc_multi_win_probs(s, draws=200_000, seed=3)
        assert freq.sum() == pytest.approx(1.0)
        assert abs(freq[0] - MULTI_1_0_M1) > 10 * se[0]

    def test_one_player(self):
        with pytest.raises(DomainError):
            multi_win_prob([1.0], 0)


class TestMarginals:
    def test_two_players_equal_pairwise(self):
        pop = Population(["a", "b"])
        skills = SkillState([0.8, -0.1], 0.3)
        got = marginal_outcome_dist("a", skills, pop)
        np.testing.assert_allclose(got.as_array(), probit_tie_outcome_probs(0.8, -0.1, 0.3).as_array(), atol=1e-15)

    def test_equal_skills(self):
        pop = Population(list("abcd"))
        got = marginal_outcome_dist("c", SkillState(np.zeros(4), 0.0), pop)
        assert got.as_array().tolist() == [0.5, 0.0, 0.5]

    def test_hand_enumeration(self):
        pop = Population(list("wxyz"))
        skills = SkillState([2, 1, 0, -3], 0.5)
        for a, expected in zip("wxyz", MARGINALS_2_1_0_M3):
            np.testing.assert_allclose(marginal_outcome_dist(a, skills, pop).as_array(), expected, atol=1e-14)
        block, stderr = marginal_outcome_dists(skills)
        assert stderr is None
        np.testing.assert_allclose(block, MARGINALS_2_1_0_M3, atol=1e-14)

    def test_needs_two_players(self):
        with pytest.raises(DomainError):
            marginal_outcome_dist("a", SkillState([0.0]), Population(["a"]))

    def test_subsampled_reports_stderr(self):
        skills = SkillState(np.random.default_rng(0).normal(size=300), 0.4)
        exact, none = marginal_outcome_dists(skills)
        approx, se = marginal_outcome_dists(skills, exact_threshold=100, n_opponents=120, seed=5)
        assert none is None
        assert se.shape == (300, 3)
        assert np.all(np.abs(approx - exact) <= 5 * se + 1e-12)

    def test_empirical_weights(self):
        matches = MatchSet([0, 0, 1], [1, 2, 2], [1, 1, 1])
        mm = Matchmaker.empirical(matches, 3)
        w = mm.opponent_weights(0, 3)
        assert w.tolist() == [0.0, 0.5, 0.5]
        for a in range(3):
            assert mm.opponent_weights(a, 3).sum() == pytest.approx(1.0)


class TestTypes:
    def test_population_rejects_duplicates(self):
        with pytest.raises(DomainError):
            Population(["a", "a"])

    def test_population_from_pairs_is_first_seen(self):
        pop = Population.from_pairs([("x", "y"), ("z", "x")])
        assert pop.labels == ("x", "y", "z")
        assert pop.match_counts.tolist() == [2, 1, 1]
        assert pop.player("z") == PlayerId("z", 2)

    def test_population_check(self):
        with pytest.raises(DomainError):
            Population(["solo"]).check()

    def test_match_set_validation(self):
        with pytest.raises(DomainError):
            MatchSet([0], [0], [1])
        with pytest.raises(DomainError):
            MatchSet([0], [1], [2])
        with pytest.raises(DomainError):
            MatchSet([0, 1], [1], [1])

    def test_records_round_trip(self):
        pop = Population(["a", "b", "c"])
        matches = MatchSet([0, 2], [1, 0], [1, 0])
        again = MatchSet.from_records(matches.records(pop))
        assert np.array_equal(again.first, matches.first)
        assert np.array_equal(again.outcome, matches.outcome)
        assert next(matches.records(pop)).outcome is TwoPlayerOutcome.FIRST_WINS

    def test_skill_state_validation(self):
        with pytest.raises(DomainError):
            SkillState([0.0, 1.0], -1.0)
        with pytest.raises(DomainError):
            SkillState([np.nan, 1.0])

    def test_outcome_distribution_validation(self):
        with pytest.raises(DomainError):
            OutcomeDistribution(0.5, 0.2, 0.2)
        assert OutcomeDistribution(0.2, 0.3, 0.5)["Tie"] == 0.3

    def test_multi_match_record(self):
        players = (PlayerId("a", 0), PlayerId("b", 1), PlayerId("c", 2))
        assert MultiMatchRecord(players, 2).winner == 2
        with pytest.raises(DomainError):
            MultiMatchRecord(players, 3)
        with pytest.raises(DomainError):
            MultiMatchRecord((players[0], players[0]), 0)
