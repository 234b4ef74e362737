import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ludometer.dataio import (
    balance_report,
    count_histogram,
    date_filter,
    experience_window_filter,
    gini,
    load_matches,
    parse_outcome,
    reindex,
    write_matches,
)
from ludometer.exceptions import DomainError, IngestError
from ludometer.model import MatchSet, Population
from ludometer.synth import SynthSpec, generate


def _write(tmp_path, text, name="games.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# X=0 plays Y=1 four times, Z=2 twice, then Y four more times
WINDOW_FIXTURE = MatchSet([0] * 10, [1, 1, 1, 1, 2, 2, 1, 1, 1, 1], [1, -1, 0, 1, 1, 1, -1, 0, 1, 1])


class TestLoadMatches:
    def test_three_rows(self, tmp_path):
        path = _write(tmp_path, "player_a,player_b,outcome\nann,bob,1\nbob,cy,0\ncy,ann,-1\n")
        pop, m, report = load_matches(path)
        assert pop.labels == ("ann", "bob", "cy")
        assert len(m) == 3 and report.n_players == 3 and report.n_matches == 3
        assert m.outcome.tolist() == [1, 0, -1]
        assert report.tie_rate == pytest.approx(1 / 3)
        assert report.connectivity.K == 1
        assert report.undated

    def test_self_match_rejected(self, tmp_path):
        path = _write(tmp_path, "player_a,player_b,outcome\nann,ann,1\nann,bob,1\n")
        _, m, report = load_matches(path)
        assert len(m) == 1
        assert [(r.line, r.reason) for r in report.rejected] == [(2, "self-match")]
        assert report.rows_read == report.rows_accepted + report.rows_rejected

    @pytest.mark.parametrize("alias, code", [("draw", 0), ("Tie", 0), ("A", 1), ("b", -1), ("+1", 1), ("−1", -1)])
    def test_outcome_aliases(self, alias, code):
        assert parse_outcome(alias) == code

    def test_draw_alias_in_file(self, tmp_path):
        _, m, _ = load_matches(_write(tmp_path, "player_a,player_b,outcome\nx,y,draw\n"))
        assert m.outcome.tolist() == [0]

    def test_rejection_reasons(self, tmp_path):
        text = "player_a,player_b,outcome,date\nx,y,1,2020-01-01\nx,,1,2020-01-02\nx,y,win,2020-01-03\nx,y,1\nx,y,1,someday\n"
        _, m, report = load_matches(_write(tmp_path, text))
        assert len(m) == 1
        assert report.rejection_reasons() == {"bad date": 1, "bad outcome": 1, "field count": 1, "missing player": 1}
        assert report.rows_read == 5
        assert not report.undated

    def test_missing_column(self, tmp_path):
        with pytest.raises(IngestError, match="outcome"):
            load_matches(_write(tmp_path, "player_a,player_b,result\nx,y,1\n"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_matches(_write(tmp_path, ""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_matches(tmp_path / "absent.csv")

    def test_unknown_columns_noted(self, tmp_path):
        _, _, report = load_matches(_write(tmp_path, "player_a,player_b,outcome,venue\nx,y,1,home\n"))
        assert report.unknown_columns == ["venue"]

    def test_tab_separated(self, tmp_path):
        pop, m, _ = load_matches(_write(tmp_path, "player_a\tplayer_b\toutcome\nx\ty\t-1\n", "games.tsv"))
        assert pop.labels == ("x", "y") and m.outcome.tolist() == [-1]

    def test_gzip(self, tmp_path):
        path = tmp_path / "games.csv.gz"
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write("player_a,player_b,outcome\nx,y,1\ny,z,0\n")
        pop, m, _ = load_matches(path)
        assert pop.size == 3 and len(m) == 2

    def test_dates_and_offsets(self, tmp_path):
        text = "player_a,player_b,outcome,date\nx,y,1,2020-03-01T23:30:00-02:00\ny,x,1,2020-03-01\n"
        _, m, _ = load_matches(_write(tmp_path, text))
        assert m.order.dtype == np.dtype("datetime64[s]")
        assert str(m.order[0]) == "2020-03-02T01:30:00"

    def test_deterministic(self, tmp_path):
        path = _write(tmp_path, "player_a,player_b,outcome\nq,r,1\nr,s,0\ns,q,1\n")
        a, b = load_matches(path), load_matches(path)
        assert a[0] == b[0]
        assert np.array_equal(a[1].first, b[1].first)
        assert a[2].as_dict() == b[2].as_dict()

    def test_player_order_hint(self, tmp_path):
        pop, m, _ = load_matches(_write(tmp_path, "player_a,player_b,outcome\nx,y,1\n"), players=["y", "x"])
        assert pop.labels == ("y", "x")
        assert m.first.tolist() == [1]


class TestRoundTrip:
    @pytest.mark.parametrize("suffix", [".csv", ".csv.gz"])
    def test_synthetic_round_trip(self, tmp_path, suffix):
        pop, _, m = generate(SynthSpec(12, 1.0, 0.3, "random:200", seed=3))
        path = tmp_path / f"league{suffix}"
        write_matches(path, m, pop, game_ids=True)
        pop2, m2, report = load_matches(path, players=pop.labels)
        assert pop2.labels == pop.labels
        for name in ("first", "second", "outcome"):
            assert np.array_equal(getattr(m, name), getattr(m2, name))
        assert report.rows_rejected == 0

    def test_gzip_output_is_reproducible(self, tmp_path):
        pop, _, m = generate(SynthSpec(5, 1.0, 0.0, "random:20", seed=1))
        write_matches(tmp_path / "a.csv.gz", m, pop)
        write_matches(tmp_path / "b.csv.gz", m, pop)
        assert (tmp_path / "a.csv.gz").read_bytes() == (tmp_path / "b.csv.gz").read_bytes()

    def test_dates_written_back(self, tmp_path):
        m = MatchSet([0, 1], [1, 0], [1, 0], np.array(["2021-05-01", "2021-05-02T10:00:00"], dtype="datetime64[s]"))
        write_matches(tmp_path / "d.csv", m, Population(["a", "b"]))
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines == ["player_a,player_b,outcome,date", "a,b,1,2021-05-01", "b,a,0,2021-05-02T10:00:00"]


class TestExperienceWindow:
    def test_identity(self):
        assert experience_window_filter(WINDOW_FIXTURE).all()

    def test_hand_count_both(self):
        assert np.flatnonzero(experience_window_filter(WINDOW_FIXTURE, 3, 6)).tolist() == [2, 3]

    def test_hand_count_either(self):
        mask = experience_window_filter(WINDOW_FIXTURE, 3, 6, mode="either")
        assert np.flatnonzero(mask).tolist() == [2, 3, 4, 5, 6, 7]

    def test_hand_count_prior_basis(self):
        mask = experience_window_filter(WINDOW_FIXTURE, 3, 6, basis="prior")
        assert np.flatnonzero(mask).tolist() == [3, 6]

    def test_long_career(self):
        # one player with 300 games against fresh opponents
        m = MatchSet(np.zeros(300, int), np.arange(1, 301), np.ones(300, int))
        mask = experience_window_filter(m, 150, 250, mode="either")
        assert np.flatnonzero(mask).tolist() == list(range(149, 250))

    def test_uses_play_order(self):
        m = MatchSet([0, 0, 0], [1, 1, 1], [1, 1, 1], np.array([30, 10, 20]))
        assert np.flatnonzero(experience_window_filter(m, 2, 2)).tolist() == [2]

    def test_bad_bounds(self):
        with pytest.raises(DomainError):
            experience_window_filter(WINDOW_FIXTURE, 5, 2)
        with pytest.raises(DomainError):
            experience_window_filter(WINDOW_FIXTURE, mode="neither")

    @settings(max_examples=50)
    @given(st.integers(0, 10_000), st.integers(0, 30), st.integers(0, 30))
    def test_subsequence(self, seed, lo, width):
        rng = np.random.default_rng(seed)
        first = rng.integers(6, size=80)
        second = (first + rng.integers(1, 6, size=80)) % 6
        m = MatchSet(first, second, rng.integers(-1, 2, size=80))
        mask = experience_window_filter(m, lo, lo + width)
        kept = m.subset(mask)
        idx = np.flatnonzero(mask)
        assert np.array_equal(kept.first, m.first[idx])
        assert np.array_equal(kept.outcome, m.outcome[idx])
        # widening the window never drops a match
        assert np.all(experience_window_filter(m, max(lo - 1, 0), lo + width + 1)[mask])


class TestDateFilter:
    def _dated(self):
        when = np.array(["2020-01-01T12:00:00", "2020-01-02T23:59:59", "2020-01-03T00:00:00"], dtype="datetime64[s]")
        return MatchSet([0, 0, 0], [1, 1, 1], [1, 1, 1], when)

    def test_inclusive_day(self):
        assert date_filter(self._dated(), "2020-01-02", "2020-01-02").tolist() == [False, True, False]

    def test_open_ends(self):
        assert date_filter(self._dated(), date_from="2020-01-02").tolist() == [False, True, True]
        assert date_filter(self._dated()).all()

    def test_needs_dates(self):
        with pytest.raises(DomainError):
            date_filter(WINDOW_FIXTURE, "2020-01-01")

    def test_reversed(self):
        with pytest.raises(DomainError):
            date_filter(self._dated(), "2020-02-01", "2020-01-01")


class TestBalance:
    def test_round_robin(self):
        pop, _, m = generate(SynthSpec(8, 1.0, 0.0, "round-robin:7", seed=0))
        report = balance_report(m, pop)
        assert report.pair_coverage == 1.0
        assert report.gini == 0.0

    def test_star(self):
        size = 9
        m = MatchSet(np.zeros(size - 1, int), np.arange(1, size), np.ones(size - 1, int))
        report = balance_report(m, Population([f"p{i}" for i in range(size)]))
        assert report.pair_coverage == pytest.approx((size - 1) / (size * (size - 1) / 2))
        assert report.gini > 0.3

    def test_nhl_shaped(self):
        pop, _, m = generate(SynthSpec(30, 0.15, 0.0, "round-robin:41", seed=2016))
        report = balance_report(m, pop)
        assert report.mean_games == 2 * 1230 / 30 == 82
        assert report.as_dict()["min_games"] == 82

    def test_gini_values(self):
        assert gini([1, 1, 1]) == 0.0
        assert gini([0, 0, 0, 4]) == pytest.approx(0.75)

    def test_histogram_counts(self):
        assert count_histogram([3, 1, 1, 9]) == {1: 2, 3: 1, 9: 1}


def test_reindex_drops_idle_players():
    pop = Population(["a", "b", "c", "d"])
    sub, m = reindex(MatchSet([0, 3], [3, 0], [1, -1]), pop)
    assert sub.labels == ("a", "d")
    assert m.second.tolist() == [1, 0]
    assert sub.match_counts.tolist() == [2, 2]
