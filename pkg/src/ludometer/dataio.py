"""Reading, filtering and describing match-record files.

File format
-----------
UTF-8 delimited text (comma by default, tab for ``.tsv``), optionally
gzip-compressed (``.gz``), with a header row. Column names are matched
case-insensitively after stripping whitespace.

``player_a``, ``player_b`` (required)
    Non-empty player labels; a row whose two labels are equal is rejected.
``outcome`` (required)
    From ``player_a``'s point of view: ``1``/``+1``/``A`` (a wins),
    ``0``/``draw``/``tie``/``D`` (tie), ``-1``/``B`` (b wins).
``date`` (optional)
    ISO-8601 date or date-time. If the column exists every row must carry a
    parsable date. Undated files are ordered by row position.
``game_id`` (optional)
    Free text, kept for reference.

Other columns are ignored and listed in :attr:`IngestReport.unknown_columns`.
"""

from __future__ import annotations

import csv
import datetime as _dt
import gzip
import io
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, IngestError
from .model import MatchSet, Population
from .newton import ConnectivityReport, connectivity

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("player_a", "player_b", "outcome")
OPTIONAL_COLUMNS = ("date", "game_id")

OUTCOME_ALIASES = {
    "1": 1, "+1": 1, "a": 1,
    "0": 0, "draw": 0, "tie": 0, "d": 0,
    "-1": -1, "−1": -1, "b": -1,
}


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass
class IngestReport:
    """What happened while reading a match file.

    ``rows_read`` counts data rows (the header excluded) and always equals
    ``rows_accepted + len(rejected)``.
    """

    rows_read: int
    rows_accepted: int
    rejected: list
    n_players: int
    n_matches: int
    tie_rate: float
    count_histogram: dict
    connectivity: ConnectivityReport | None
    unknown_columns: list = field(default_factory=list)
    undated: bool = True

    @property
    def rows_rejected(self) -> int:
        return len(self.rejected)

    def rejection_reasons(self) -> dict:
        out: dict[str, int] = {}
        for row in self.rejected:
            key = row.reason.split(":")[0]
            out[key] = out.get(key, 0) + 1
        return dict(sorted(out.items()))

    def as_dict(self, max_rejected: int = 50) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_rejected": self.rows_rejected,
            "rejection_reasons": self.rejection_reasons(),
            "rejected_examples": [{"line": r.line, "reason": r.reason} for r in self.rejected[:max_rejected]],
            "n_players": self.n_players,
            "n_matches": self.n_matches,
            "tie_rate": self.tie_rate,
            "count_histogram": {str(k): v for k, v in self.count_histogram.items()},
            "connectivity": None if self.connectivity is None else self.connectivity.as_dict(),
            "unknown_columns": list(self.unknown_columns),
            "undated": self.undated,
        }


def _open_text(path):
    path = os.fspath(path)
    try:
        if path.endswith(".gz"):
            return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
        return open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc


def _default_delimiter(path) -> str:
    name = os.fspath(path)
    if name.endswith(".gz"):
        name = name[:-3]
    return "\t" if name.endswith((".tsv", ".tab")) else ","


def parse_outcome(text: str) -> int:
    key = text.strip().lower()
    if key not in OUTCOME_ALIASES:
        raise ValueError(text)
    return OUTCOME_ALIASES[key]


def parse_date(text: str) -> np.datetime64:
    """ISO-8601 date or date-time to ``datetime64[s]`` (UTC if an offset is given)."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    value = _dt.datetime.fromisoformat(text)
    if value.tzinfo is not None:
        value = value.astimezone(_dt.timezone.utc).replace(tzinfo=None)
    return np.datetime64(value, "s")


def load_matches(path, delimiter: str | None = None, players=None) -> tuple[Population, MatchSet, IngestReport]:
    """Parse a match file.

    Parameters
    ----------
    path
        File to read; ``.gz`` files are decompressed on the fly.
    delimiter
        Field separator. Defaults to tab for ``.tsv`` files and comma otherwise.
    players
        Optional labels to register first, in this order. Labels that are
        not listed get indices after them in order of first appearance.

    Returns
    -------
    pop, matches, report
        ``matches.order`` holds ``datetime64[s]`` dates for dated files and
        row positions otherwise.

    Raises
    ------
    IngestError
        Unreadable or empty file, or missing required columns.
    """
    delimiter = delimiter or _default_delimiter(path)
    index: dict[str, int] = {}
    for label in players or ():
        index.setdefault(str(label), len(index))
    first, second, outcome, order = [], [], [], []
    rejected: list[RejectedRow] = []
    rows_read = 0
    with _open_text(path) as fh:
        try:
            reader = csv.reader(fh, delimiter=delimiter)
            header = next(reader, None)
            if header is None:
                raise IngestError(f"{path}: empty file")
            names = [h.strip().lower() for h in header]
            missing = [c for c in REQUIRED_COLUMNS if c not in names]
            if missing:
                raise IngestError(f"{path}: missing required column(s) {', '.join(missing)}")
            unknown = [h for h in names if h not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS]
            if unknown:
                logger.info("ignoring unknown column(s): %s", ", ".join(unknown))
            col = {name: names.index(name) for name in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if name in names}
            dated = "date" in col
            width = len(names)
            for row in reader:
                line = reader.line_num
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                rows_read += 1
                if len(row) != width:
                    rejected.append(RejectedRow(line, f"field count: expected {width}, got {len(row)}"))
                    continue
                a = row[col["player_a"]].strip()
                b = row[col["player_b"]].strip()
                if not a or not b:
                    rejected.append(RejectedRow(line, "missing player"))
                    continue
                if a == b:
                    rejected.append(RejectedRow(line, "self-match"))
                    continue
                try:
                    code = parse_outcome(row[col["outcome"]])
                except ValueError:
                    rejected.append(RejectedRow(line, f"bad outcome: {row[col['outcome']]!r}"))
                    continue
                if dated:
                    try:
                        when = parse_date(row[col["date"]])
                    except ValueError:
                        rejected.append(RejectedRow(line, f"bad date: {row[col['date']]!r}"))
                        continue
                    order.append(when)
                first.append(index.setdefault(a, len(index)))
                second.append(index.setdefault(b, len(index)))
                outcome.append(code)
        except (csv.Error, UnicodeDecodeError, OSError, EOFError) as exc:
            raise IngestError(f"{path}: {exc}") from exc
    if dated:
        order_arr = np.array(order, dtype="datetime64[s]")
    else:
        order_arr = np.arange(len(first), dtype=np.int64)
    matches = MatchSet(first, second, outcome, order_arr)
    pop = Population(index.keys(), matches.counts(len(index)))
    report = IngestReport(
        rows_read=rows_read,
        rows_accepted=len(matches),
        rejected=rejected,
        n_players=pop.size,
        n_matches=len(matches),
        tie_rate=matches.n_ties / len(matches) if len(matches) else 0.0,
        count_histogram=count_histogram(pop.match_counts),
        connectivity=connectivity(matches, pop) if pop.size else None,
        unknown_columns=unknown,
        undated=not dated,
    )
    return pop, matches, report


def count_histogram(counts) -> dict:
    """``games played -> number of players``, sorted by games."""
    values, freq = np.unique(np.asarray(counts, dtype=np.int64), return_counts=True)
    return {int(v): int(f) for v, f in zip(values, freq)}


def write_matches(path, matches: MatchSet, pop: Population, game_ids: bool = False):
    """Write ``matches`` in the format read by :func:`load_matches`.

    A ``date`` column is written when ``matches.order`` holds datetimes and
    ``game_ids=True`` adds the row position as ``game_id``.
    ``.gz`` output is gzip-compressed with a zero timestamp so the bytes
    depend only on the content.
    """
    dated = matches.order is not None and np.issubdtype(np.asarray(matches.order).dtype, np.datetime64)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["player_a", "player_b", "outcome"]
    if dated:
        header.append("date")
    if game_ids:
        header.append("game_id")
    writer.writerow(header)
    labels = pop.labels
    for i in range(len(matches)):
        row = [labels[matches.first[i]], labels[matches.second[i]], int(matches.outcome[i])]
        if dated:
            row.append(_format_date(matches.order[i]))
        if game_ids:
            row.append(i)
        writer.writerow(row)
    data = buf.getvalue().encode("utf-8")
    path = os.fspath(path)
    if path.endswith(".gz"):
        with open(path, "wb") as raw:
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                gz.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _format_date(value) -> str:
    text = str(np.datetime64(value, "s"))
    return text[:10] if text.endswith("T00:00:00") else text


# ---------------------------------------------------------------------------
# filters


def _play_order(matches: MatchSet) -> np.ndarray:
    if matches.order is None:
        return np.arange(len(matches))
    return np.argsort(matches.order, kind="stable")


def experience_window_filter(
    matches: MatchSet,
    lo: int = 0,
    hi: float = float("inf"),
    mode: str = "both",
    basis: str = "ordinal",
) -> np.ndarray:
    """Boolean mask of matches played inside an experience window.

    Every player's games are numbered in play order (``matches.order``,
    stable for equal keys) over the whole input, filtered-out games
    included. With ``basis="ordinal"`` a game is the player's 1st, 2nd, ...
    game, so ``lo=150, hi=250`` keeps a player's 150th through 250th games;
    ``basis="prior"`` uses the number of earlier games instead (one less).
    ``mode="both"`` requires both players to be inside the window,
    ``"either"`` at least one.
    """
    if lo > hi:
        raise DomainError(f"window lower bound {lo} exceeds upper bound {hi}")
    if mode not in ("both", "either"):
        raise DomainError("mode must be 'both' or 'either'")
    if basis not in ("ordinal", "prior"):
        raise DomainError("basis must be 'ordinal' or 'prior'")
    n = len(matches)
    if n == 0:
        return np.zeros(0, dtype=bool)
    size = matches.max_index + 1
    seen = np.zeros(size, dtype=np.int64)
    count_a = np.empty(n, dtype=np.int64)
    count_b = np.empty(n, dtype=np.int64)
    first, second = matches.first, matches.second
    for i in _play_order(matches).tolist():
        a, b = first[i], second[i]
        count_a[i] = seen[a]
        count_b[i] = seen[b]
        seen[a] += 1
        seen[b] += 1
    if basis == "ordinal":
        count_a += 1
        count_b += 1
    in_a = (count_a >= lo) & (count_a <= hi)
    in_b = (count_b >= lo) & (count_b <= hi)
    return in_a & in_b if mode == "both" else in_a | in_b


def date_filter(matches: MatchSet, date_from=None, date_to=None) -> np.ndarray:
    """Mask of matches dated within ``[date_from, date_to]`` (either end optional).

    Bounds are ISO-8601 strings or datetimes; a bare ``date_to`` day includes
    the whole day.
    """
    n = len(matches)
    if date_from is None and date_to is None:
        return np.ones(n, dtype=bool)
    if matches.order is None or not np.issubdtype(np.asarray(matches.order).dtype, np.datetime64):
        raise DomainError("date filters need a dated match file")
    when = np.asarray(matches.order, dtype="datetime64[s]")
    keep = np.ones(n, dtype=bool)
    if date_from is not None:
        keep &= when >= _bound(date_from)
    if date_to is not None:
        upper = _bound(date_to)
        if isinstance(date_to, str) and len(date_to.strip()) == 10:
            upper = upper + np.timedelta64(1, "D") - np.timedelta64(1, "s")
        keep &= when <= upper
    if date_from is not None and date_to is not None and _bound(date_from) > _bound(date_to):
        raise DomainError("date_from is after date_to")
    return keep


def _bound(value) -> np.datetime64:
    if isinstance(value, str):
        try:
            return parse_date(value)
        except ValueError as exc:
            raise DomainError(f"bad date bound {value!r}") from exc
    return np.datetime64(value, "s")


def reindex(matches: MatchSet, pop: Population) -> tuple[Population, MatchSet]:
    """Drop players without matches and renumber the rest densely.

    Relative order of the surviving players is preserved.
    """
    counts = matches.counts(pop.size)
    keep = np.flatnonzero(counts > 0)
    new_index = np.full(pop.size, -1, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    sub = MatchSet(new_index[matches.first], new_index[matches.second], matches.outcome, matches.order)
    return Population([pop.labels[i] for i in keep], counts[keep]), sub


# ---------------------------------------------------------------------------
# schedule balance


@dataclass(frozen=True)
class BalanceReport:
    games: np.ndarray
    mean_games: float
    observed_pairs: int
    possible_pairs: int
    pair_coverage: float
    gini: float

    def as_dict(self) -> dict:
        games = self.games
        return {
            "mean_games": self.mean_games,
            "min_games": int(games.min()) if games.size else 0,
            "median_games": float(np.median(games)) if games.size else 0.0,
            "max_games": int(games.max()) if games.size else 0,
            "observed_pairs": self.observed_pairs,
            "possible_pairs": self.possible_pairs,
            "pair_coverage": self.pair_coverage,
            "gini": self.gini,
        }


def gini(values) -> float:
    """Gini coefficient of non-negative values (0 = perfectly even)."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0 or x.sum() == 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    return float(np.sum((2 * ranks - n - 1) * x) / (n * x.sum()))


def balance_report(matches: MatchSet, pop: Population) -> BalanceReport:
    """Games per player, fraction of player pairs that met, and count inequality."""
    games = matches.counts(pop.size)
    lo = np.minimum(matches.first, matches.second)
    hi = np.maximum(matches.first, matches.second)
    observed = int(np.unique(lo * pop.size + hi).size) if len(matches) else 0
    possible = pop.size * (pop.size - 1) // 2
    return BalanceReport(
        games=games,
        mean_games=float(games.mean()) if pop.size else 0.0,
        observed_pairs=observed,
        possible_pairs=possible,
        pair_coverage=observed / possible if possible else 0.0,
        gini=gini(games),
    )
