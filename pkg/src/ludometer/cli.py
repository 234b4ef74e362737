"""Command-line interface: ``ludometer {fit-mle,fit-bayes,simulate,report}``.

Every run writes its outputs plus ``manifest.json`` into ``--out``. The
manifest records the configuration, seed, input digest and package
version, and the SHA-256 of each output file. It carries no timestamps or
host details, so repeating a run reproduces every byte. ``--out`` and
``--threads`` are left out of the recorded configuration because they do
not affect results.

Exit codes
----------
0 success; 2 invalid configuration; 3 unreadable or malformed input;
4 fit did not converge or diverged; 5 perfect separation with ``--lambda 0``;
6 disconnected comparison graph with ``--lambda 0``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, fixture_path
from .dataio import (
    balance_report,
    date_filter,
    experience_window_filter,
    load_matches,
    reindex,
    write_matches,
)
from .exceptions import (
    ConnectivityError,
    DomainError,
    FitDivergenceError,
    IngestError,
    SamplerError,
    SeparationError,
)
from .gibbs import SCHEMES, GibbsConfig, multi_chain_diagnostics, run_chains
from .luck import luck_from_fit
from .newton import LAMBDA_CONVENTIONS, connectivity, cv_lambda, detect_separation, lambda_sweep, newton_fit
from .synth import SynthSpec, generate

logger = logging.getLogger("ludometer")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_DIVERGENCE = 4
EXIT_SEPARATION = 5
EXIT_DISCONNECTED = 6

FORMATS = ("table", "csv", "json")
MANIFEST_SCHEMA = "ludometer-manifest/1"
OUTPUT_SCHEMA = "ludometer-output/1"
BUILTIN_PREFIX = "builtin:"
DEFAULT_CV_GRID = "0.01:10:logspace:13"


class ConfigError(DomainError):
    """A command-line setting is invalid."""


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _finite(text):
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text}")
    return value


def parse_formats(text: str) -> list:
    formats = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"--format takes a comma list of {', '.join(FORMATS)}; got {text!r}")
    return sorted(set(formats), key=FORMATS.index)


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:logspace[:n]``, ``lo:hi:linspace[:n]`` or a comma list of values."""
    parts = text.split(":")
    try:
        if len(parts) in (3, 4) and parts[2] in ("logspace", "linspace"):
            lo, hi = float(parts[0]), float(parts[1])
            n = int(parts[3]) if len(parts) == 4 else 25
            if n < 1 or not 0 < lo < hi or not math.isfinite(hi):
                raise ValueError
            grid = np.geomspace(lo, hi, n) if parts[2] == "logspace" else np.linspace(lo, hi, n)
        else:
            grid = np.array(sorted(float(v) for v in text.split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad lambda grid {text!r}; use lo:hi:logspace[:n] or a comma list") from exc
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0) or not np.all(np.isfinite(grid)):
        raise ConfigError(f"lambda grid {text!r} must be positive and strictly increasing")
    return grid


def resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get("LUDOMETER_THREADS", "1")
    try:
        threads = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"thread count must be an integer, got {value!r}") from exc
    if threads < 1:
        raise ConfigError(f"thread count must be positive, got {threads}")
    return threads


def _common(p: argparse.ArgumentParser, needs_input: bool = True):
    if needs_input:
        p.add_argument("--input", required=True,
                       help=f"match file (CSV, TSV or .gz), or {BUILTIN_PREFIX}nhl-synthetic")
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--format", default="table,csv,json", help="comma list of table, csv, json")
    p.add_argument("--threads", default=None,
                   help="worker threads for chains and CV folds (default: $LUDOMETER_THREADS or 1)")
    p.add_argument("--quiet", action="store_true", help="do not echo the result table")


def _filters(p: argparse.ArgumentParser):
    g = p.add_argument_group("filters")
    g.add_argument("--min-games", type=_nonneg_int, default=None,
                   help="keep games that are at least a player's n-th game")
    g.add_argument("--max-games", type=_nonneg_int, default=None,
                   help="keep games that are at most a player's n-th game")
    g.add_argument("--window-mode", choices=("both", "either"), default="both",
                   help="whether both or either player must be inside the game window")
    g.add_argument("--date-from", default=None, help="ISO-8601 lower date bound (inclusive)")
    g.add_argument("--date-to", default=None, help="ISO-8601 upper date bound (inclusive)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ludometer", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-mle", help="ridge-penalized maximum likelihood skills, luck and ell2")
    _common(p)
    _filters(p)
    p.add_argument("--lambda", dest="lam", type=_finite, default=0.3, help="ridge coefficient (default 0.3)")
    p.add_argument("--lambda-convention", choices=sorted(LAMBDA_CONVENTIONS), default="objective")
    p.add_argument("--sweep", default=None, help="lambda grid, e.g. .05:2:logspace or .1,.3,1")
    p.add_argument("--cv-folds", type=int, default=None,
                   help="choose lambda by k-fold CV over --sweep (or a default grid)")
    p.add_argument("--tol", type=_finite, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=100)
    p.set_defaults(func=cmd_fit_mle)

    p = sub.add_parser("fit-bayes", help="Gibbs sampler for the population skill variance")
    _common(p)
    _filters(p)
    p.add_argument("--a-sigma", type=_finite, default=2.0)
    p.add_argument("--b-sigma", type=_finite, default=1.0)
    p.add_argument("--a-p", type=_finite, default=2.0)
    p.add_argument("--b-p", type=_finite, default=5.0)
    p.add_argument("--burn-in", type=_nonneg_int, default=100)
    p.add_argument("--samples", type=_positive_int, default=250)
    p.add_argument("--thin", type=_positive_int, default=1)
    p.add_argument("--chains", type=_positive_int, default=1)
    p.add_argument("--scheme", choices=SCHEMES, default="exact")
    p.set_defaults(func=cmd_fit_bayes)

    p = sub.add_parser("simulate", help="generate a synthetic league")
    _common(p, needs_input=False)
    p.add_argument("--players", "--teams", dest="players", type=int, default=None)
    p.add_argument("--sigma-sq", type=_finite, default=1.0)
    p.add_argument("--tie-p", type=_finite, default=0.0)
    p.add_argument("--schedule", default=None, help="round-robin:R, random:N or adjacent:N:W")
    p.add_argument("--round-robin", type=_positive_int, default=None, metavar="R",
                   help="shorthand for --schedule round-robin:R")
    p.add_argument("--skill-file", default=None,
                   help="explicit skills: one number per line, or CSV with a 'skill' column")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="ingestion, balance, connectivity and separation diagnostics")
    _common(p)
    _filters(p)
    p.set_defaults(func=cmd_report)
    return parser


# ---------------------------------------------------------------------------
# run context: output files and manifest


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _fmt(value, digits=3) -> str:
    if isinstance(value, (float, np.floating)):
        return "nan" if not math.isfinite(value) else f"{value:.{digits}f}"
    return str(value)


def format_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


class Run:
    """Collects output files for one invocation and writes the manifest."""

    def __init__(self, args, formats):
        self.args = args
        self.formats = formats
        self.out = args.out
        self.outputs: dict[str, str] = {}
        self.input_info = None
        self.filters = None
        os.makedirs(self.out, exist_ok=True)

    def write(self, name: str, data):
        raw = data.encode("utf-8") if isinstance(data, str) else data
        with open(os.path.join(self.out, name), "wb") as fh:
            fh.write(raw)
        self.outputs[name] = hashlib.sha256(raw).hexdigest()

    def write_file(self, name: str):
        """Register a file that was written directly into the output directory."""
        with open(os.path.join(self.out, name), "rb") as fh:
            self.outputs[name] = hashlib.sha256(fh.read()).hexdigest()

    def emit_table(self, stem: str, header, rows, payload: dict):
        """Write ``stem`` as text table, CSV and/or JSON according to ``--format``."""
        text = format_table(header, rows)
        if "table" in self.formats:
            self.write(f"{stem}.txt", text)
        if "csv" in self.formats:
            self.write(f"{stem}.csv", _csv_text(header, rows))
        if "json" in self.formats:
            self.write(f"{stem}.json", dump_json({"schema": OUTPUT_SCHEMA, **payload}))
        if not self.args.quiet:
            sys.stdout.write(text)

    def config(self) -> dict:
        skip = {"out", "threads", "func", "quiet"}
        return {k: v for k, v in sorted(vars(self.args).items()) if k not in skip}

    def finish(self, status: str = "ok", error: str | None = None):
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "tool": "ludometer",
            "version": __version__,
            "command": self.args.command,
            "config": self.config(),
            "seed": self.args.seed,
            "input": self.input_info,
            "filters": self.filters,
            "outputs": dict(sorted(self.outputs.items())),
            "status": status,
            "error": error,
        }
        raw = dump_json(manifest).encode("utf-8")
        with open(os.path.join(self.out, "manifest.json"), "wb") as fh:
            fh.write(raw)


def _file_digest(path: str) -> tuple[str, int]:
    h = hashlib.sha256()
    size = 0
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
                size += len(chunk)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    return h.hexdigest(), size


def load_input(run: Run):
    """Read ``--input``, apply date and game-window filters, renumber players."""
    args = run.args
    path = args.input
    if path.startswith(BUILTIN_PREFIX):
        path = fixture_path(path[len(BUILTIN_PREFIX):])
    digest, size = _file_digest(path)
    run.input_info = {"path": args.input, "sha256": digest, "bytes": size}
    pop, matches, report = load_matches(path)
    if not len(matches):
        raise IngestError(f"{args.input}: no usable matches ({report.rows_rejected} rows rejected)")
    if args.min_games is not None and args.max_games is not None and args.min_games > args.max_games:
        raise ConfigError("--min-games exceeds --max-games")
    keep = date_filter(matches, args.date_from, args.date_to)
    if args.min_games is not None or args.max_games is not None:
        lo = args.min_games if args.min_games is not None else 0
        hi = args.max_games if args.max_games is not None else math.inf
        keep &= experience_window_filter(matches, lo, hi, mode=args.window_mode)
    run.filters = {
        "date_from": args.date_from,
        "date_to": args.date_to,
        "min_games": args.min_games,
        "max_games": args.max_games,
        "window_mode": args.window_mode,
        "matches_before": len(matches),
        "matches_after": int(keep.sum()),
        "undated_play_order": report.undated,
    }
    if not keep.all():
        pop, matches = reindex(matches.subset(keep), pop)
    if len(matches) == 0:
        raise ConfigError("filters removed every match")
    if pop.size < 2:
        raise ConfigError("fewer than two players remain after filtering")
    return pop, matches, report


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit_mle(run: Run) -> int:
    args = run.args
    if args.lam < 0:
        raise ConfigError("--lambda must be non-negative")
    if args.tol <= 0:
        raise ConfigError("--tol must be positive")
    if args.cv_folds is not None and args.cv_folds < 2:
        raise ConfigError("--cv-folds must be at least 2")
    grid = parse_grid(args.sweep) if args.sweep else None
    threads = resolve_threads(args.threads)
    pop, matches, _ = load_input(run)
    fit_opts = {"tol": args.tol, "max_iter": args.max_iter, "lambda_convention": args.lambda_convention}

    lam = args.lam
    cv_payload = None
    if args.cv_folds is not None:
        cv_grid = grid if grid is not None else parse_grid(DEFAULT_CV_GRID)
        lam, scores = cv_lambda(matches, pop, cv_grid, folds=args.cv_folds, seed=args.seed,
                                threads=threads, **fit_opts)
        run.write("cv.csv", _csv_text(["lambda", "heldout_loglik"], sorted(scores.items())))
        cv_payload = {"folds": args.cv_folds, "best_lambda": lam, "scores": [[k, v] for k, v in sorted(scores.items())]}

    res = newton_fit(matches, pop, lam, **fit_opts)
    diagnostics = {
        "converged": res.converged,
        "iterations": res.iterations,
        "grad_norm": res.grad_norm,
        "loglik": res.loglik,
        "penalized_loglik": res.penalized_loglik,
        "tie_free": res.tie_free,
        "connectivity": res.connectivity.as_dict() if res.connectivity is not None else None,
        "separation": [{"player": p.raw, "kind": kind} for p, kind in res.separation],
        "warnings": list(res.warnings),
    }
    if not res.converged:
        run.write("diagnostics.json", dump_json(diagnostics))
        raise FitDivergenceError(
            f"Newton iterations did not converge in {res.iterations} steps "
            f"(gradient max-norm {res.grad_norm:.3g} > tol {args.tol:g})",
            diagnostics,
        )
    luck = luck_from_fit(res.skills, pop)
    header = ["Players", "Matches", "L_hat", "ell2_hat"]
    rows = [[pop.size, len(matches), luck.L, res.ell2]]
    payload = {
        "players": pop.size,
        "matches": len(matches),
        "lambda": lam,
        "lambda_convention": args.lambda_convention,
        "L": luck.L,
        "S": luck.S,
        "ell2": res.ell2,
        "t": res.skills.t,
        "luck": luck.as_dict(),
        "diagnostics": diagnostics,
        "cv": cv_payload,
    }
    run.emit_table("summary", header, rows, payload)
    games = matches.counts(pop.size)
    run.write("skills.csv", _csv_text(
        ["player", "skill", "games"],
        [(label, float(s), int(g)) for label, s, g in zip(pop.labels, res.skills.s, games)],
    ))
    if grid is not None:
        sweep = lambda_sweep(matches, pop, grid, **fit_opts)
        run.write("sweep.csv", _csv_text(
            ["lambda", "ell2", "L", "converged", "error"],
            [
                (pt.lam, pt.ell2, pt.L, "" if pt.result is None else int(pt.result.converged), pt.error or "")
                for pt in sweep.points
            ],
        ))
    return EXIT_OK


def cmd_fit_bayes(run: Run) -> int:
    args = run.args
    config = GibbsConfig(
        a_sigma=args.a_sigma, b_sigma=args.b_sigma, a_p=args.a_p, b_p=args.b_p,
        burn_in=args.burn_in, samples=args.samples, thin=args.thin, seed=args.seed,
        scheme=args.scheme,
    )
    threads = resolve_threads(args.threads)
    pop, matches, _ = load_input(run)
    traces, summary = run_chains(matches, pop, config, chains=args.chains, threads=threads)
    diagnostics = multi_chain_diagnostics(traces, warn=False) if args.chains > 1 else None
    buf = io.StringIO()
    for k, tr in enumerate(traces):
        text = io.StringIO()
        tr.to_csv(text, include_chain=True)
        lines = text.getvalue()
        buf.write(lines if k == 0 else lines.split("\n", 1)[1])
    run.write("trace.csv", buf.getvalue())
    header = ["Players", "Matches", "E_ell2", "sd_ell2", "E_t", "sd_t"]
    rows = [[pop.size, len(matches), summary.ell2_mean, summary.ell2_sd, summary.t_mean, summary.t_sd]]
    payload = {
        "players": pop.size,
        "matches": len(matches),
        "ties": matches.n_ties,
        "posterior": summary.as_dict(),
        "chains": args.chains,
        "chain_diagnostics": diagnostics,
        "config": {
            "a_sigma": config.a_sigma, "b_sigma": config.b_sigma, "a_p": config.a_p, "b_p": config.b_p,
            "burn_in": config.burn_in, "samples": config.samples, "thin": config.thin,
            "seed": config.seed, "scheme": config.scheme,
        },
    }
    run.emit_table("summary", header, rows, payload)
    if diagnostics and any(v["rhat"] > 1.05 for v in diagnostics.values()):
        logger.warning("split R-hat above 1.05; run longer chains")
    return EXIT_OK


def read_skill_file(path: str) -> list:
    """Skills from a file with one number per line, or a CSV with a ``skill`` column."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise IngestError(f"cannot read skill file {path}: {exc}") from exc
    if not rows:
        raise IngestError(f"skill file {path} is empty")
    column = -1
    header = [c.strip().lower() for c in rows[0]]
    if "skill" in header:
        column = header.index("skill")
        rows = rows[1:]
    try:
        return [float(r[column]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise IngestError(f"skill file {path}: {exc}") from exc


def cmd_simulate(run: Run) -> int:
    args = run.args
    if args.schedule and args.round_robin:
        raise ConfigError("give either --schedule or --round-robin, not both")
    schedule = f"round-robin:{args.round_robin}" if args.round_robin else (args.schedule or "random:1000")
    skills = read_skill_file(args.skill_file) if args.skill_file else None
    if skills is None and args.players is None:
        raise ConfigError("--players (or --skill-file) is required")
    if skills is not None and args.players is not None and args.players != len(skills):
        raise ConfigError(f"--players {args.players} disagrees with {len(skills)} skills in --skill-file")
    n_players = len(skills) if skills is not None else args.players
    spec = SynthSpec(n_players, args.sigma_sq, args.tie_p, schedule, args.seed, skills)
    pop, truth, matches = generate(spec)
    write_matches(os.path.join(run.out, "matches.csv"), matches, pop, game_ids=True)
    run.write_file("matches.csv")
    truth_payload = {
        "schema": OUTPUT_SCHEMA,
        "players": list(pop.labels),
        "skills": truth.s.tolist(),
        "sigma_sq": spec.sigma_sq,
        "tie_p": spec.tie_p,
        "t": truth.t,
        "schedule": schedule,
        "seed": spec.seed,
        "explicit_skills": skills is not None,
    }
    run.write("truth.json", dump_json(truth_payload))
    run.write("truth.csv", _csv_text(["player", "skill"], zip(pop.labels, truth.s.tolist())))
    header = ["Players", "Matches", "Ties", "sigma_sq", "t"]
    rows = [[pop.size, len(matches), matches.n_ties, spec.sigma_sq, truth.t]]
    if not args.quiet:
        sys.stdout.write(format_table(header, rows))
    return EXIT_OK


def cmd_report(run: Run) -> int:
    pop, matches, ingest = load_input(run)
    conn = connectivity(matches, pop)
    balance = balance_report(matches, pop)
    separation = detect_separation(matches, pop)
    payload = {
        "schema": OUTPUT_SCHEMA,
        "ingest": ingest.as_dict(),
        "players": pop.size,
        "matches": len(matches),
        "ties": matches.n_ties,
        "balance": balance.as_dict(),
        "connectivity": conn.as_dict(),
        "separation": [{"player": p.raw, "kind": kind} for p, kind in separation],
        "games_histogram": {str(k): v for k, v in _histogram(balance.games).items()},
    }
    lines = []
    if conn.K > 1:
        lines.append(f"WARNING: comparison graph has K={conn.K} components; "
                     f"skills are only comparable within a component (sizes {conn.component_sizes().tolist()})")
        lines.append("")
    lines += [
        f"rows read        {ingest.rows_read}",
        f"rows rejected    {ingest.rows_rejected}",
        f"players          {pop.size}",
        f"matches          {len(matches)}",
        f"tie rate         {matches.n_ties / len(matches):.4f}",
        f"components (K)   {conn.K}",
        f"mean games       {balance.mean_games:.2f}",
        f"pair coverage    {balance.pair_coverage:.4f}",
        f"gini of games    {balance.gini:.4f}",
        f"separated        {len(separation)}",
    ]
    for reason, count in ingest.rejection_reasons().items():
        lines.append(f"  rejected ({reason}): {count}")
    for p, kind in separation[:20]:
        lines.append(f"  {p.raw}: {kind}")
    if len(separation) > 20:
        lines.append(f"  ... {len(separation) - 20} more")
    lines.append("")
    lines.append("games played   players")
    for bucket, count in _histogram(balance.games).items():
        lines.append(f"{bucket:>12}   {count}")
    text = "\n".join(lines) + "\n"
    if "table" in run.formats:
        run.write("report.txt", text)
    if "json" in run.formats:
        run.write("report.json", dump_json(payload))
    if "csv" in run.formats:
        run.write("games.csv", _csv_text(["player", "games"], zip(pop.labels, balance.games.tolist())))
    if not run.args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def _histogram(games: np.ndarray) -> dict:
    """Player counts in power-of-two buckets of games played."""
    out: dict[str, int] = {}
    if games.size == 0:
        return out
    top = int(games.max())
    lo = 1
    if np.any(games == 0):
        out["0"] = int(np.sum(games == 0))
    while lo <= top:
        hi = 2 * lo - 1
        out[f"{lo}-{hi}" if hi > lo else str(lo)] = int(np.sum((games >= lo) & (games <= hi)))
        lo *= 2
    return out


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        formats = parse_formats(args.format)
        resolve_threads(args.threads)
        run = Run(args, formats)
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, status, message = EXIT_OK, "ok", None
    try:
        code = args.func(run)
    except SeparationError as exc:
        code, status, message = EXIT_SEPARATION, "separation", str(exc)
    except ConnectivityError as exc:
        code, status, message = EXIT_DISCONNECTED, "disconnected", str(exc)
    except (FitDivergenceError, SamplerError) as exc:
        code, status, message = EXIT_DIVERGENCE, "divergence", str(exc)
    except IngestError as exc:
        code, status, message = EXIT_PARSE, "parse-error", str(exc)
    except DomainError as exc:
        code, status, message = EXIT_CONFIG, "invalid-config", str(exc)
    if message is not None:
        print(f"error: {message}", file=sys.stderr)
    run.finish(status, message)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
