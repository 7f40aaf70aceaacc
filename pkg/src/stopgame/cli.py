"""Command-line front end.

Subcommands
    solve      thresholds and exact values of the regular profile
    bounds     critical discount bound for the game's horizon
    verify     one-shot deviation report for a profile
    simulate   seeded Monte Carlo payoff estimates
    sweep      table of thresholds/values/bounds/verdicts over T or delta
    transform  uniform-state equivalent of a non-uniform game
    report     figures (threshold map, convergence) next to the sweep CSV

Game specs are JSON files (or inline JSON) of the form
``{"horizon": 5 | "infinite", "delta": 0.8, "f": {...}, "g": {...},
"distribution": {...}}``; ``--horizon``/``--delta`` override fields in
place.  Every output document embeds a run manifest (inputs, numeric
settings, tool version, wall time) so results are reproducible from the
artifact alone.

Exit codes: 0 success, 2 invalid input, 3 a verified profile is not an
equilibrium (scriptable regime checks).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .equilibrium import (
    GameSpec,
    GameSpecError,
    RegularProfile,
    classify,
    critical_discount_finite,
    critical_discount_infinite,
    threshold_convergence,
)
from .fnspace import ConstructionError, DomainError, RangeError
from .profiles import ProfileError, StrategyProfile, from_regular, simulate, trace_playout
from .transform import solve_general, to_uniform
from .verifier import verify_pbe

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_PBE = 3

_INPUT_ERRORS = (
    GameSpecError,
    ProfileError,
    ConstructionError,
    DomainError,
    RangeError,
)


class InputError(ValueError):
    """CLI-level input problem (bad file, bad JSON, bad flag combination)."""


@dataclass
class RunManifest:
    """Provenance block embedded in every output document."""

    subcommand: str
    game_source: str
    settings: dict
    outputs: list[str]
    tool_version: str
    wall_time_s: float
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "game_source": self.game_source,
            "settings": self.settings,
            "outputs": self.outputs,
            "tool_version": self.tool_version,
            "wall_time_s": self.wall_time_s,
            "timestamp": self.timestamp,
        }


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------

def _load_json(source: str, what: str) -> tuple[dict, str]:
    """Parse ``source`` as inline JSON or as a file path; (data, provenance)."""
    text = source
    provenance = "inline"
    if not source.lstrip().startswith("{"):
        path = Path(source)
        if not path.exists():
            raise InputError(f"{what} file not found: {source}")
        text = path.read_text()
        provenance = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"invalid JSON in {what} ({provenance}): line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return data, provenance


def _load_game(args) -> tuple[GameSpec, str]:
    data, provenance = _load_json(args.game, "game spec")
    game = GameSpec.from_dict(data)
    if getattr(args, "horizon", None) is not None:
        h = args.horizon
        if h in ("inf", "infinite"):
            game = replace(game, horizon=None)
        else:
            try:
                game = replace(game, horizon=int(h))
            except ValueError as exc:
                raise InputError(f"--horizon must be a positive integer or 'inf', got {h!r}") from exc
    if getattr(args, "delta", None) is not None:
        game = replace(game, delta=args.delta)
    return game, provenance


def _load_profile(args, game: GameSpec) -> tuple[StrategyProfile, str]:
    if args.profile == "regular":
        return from_regular(solve_general(game)), "regular"
    data, provenance = _load_json(args.profile, "profile")
    return StrategyProfile.from_dict(data), provenance


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _fmt5(x) -> str:
    return format(float(x), ".5f")


def _manifest(args, subcommand: str, game_source: str, settings: dict, outputs: list[str], t0: float) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        game_source=game_source,
        settings=settings,
        outputs=outputs,
        tool_version=__version__,
        wall_time_s=time.perf_counter() - t0,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def _csv_text(header: list[str], rows: list[list[str]], manifest: RunManifest) -> str:
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest.to_dict()) + "\n")
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: str, text: str):
    Path(path).write_text(text)


def _emit_json(doc: dict, out: str | None):
    text = json.dumps(doc, indent=2)
    if out:
        _write(out, text + "\n")
    else:
        print(text)


def _json_and_csv_paths(out: str) -> tuple[str, str]:
    p = Path(out)
    if p.suffix == ".json":
        return str(p), str(p.with_suffix(".csv"))
    if p.suffix == ".csv":
        return str(p.with_suffix(".json")), str(p)
    return f"{out}.json", f"{out}.csv"


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _cmd_solve(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    profile = solve_general(game)
    json_path, csv_path = _json_and_csv_paths(args.out) if args.out else (None, None)
    outputs = [p for p in (json_path, csv_path) if p]
    manifest = _manifest(args, "solve", source, {"format": args.format}, outputs, t0)
    doc = profile.to_dict()
    doc["manifest"] = manifest.to_dict()

    header = ["period", "threshold", "threshold_5dp"]
    if profile.is_stationary:
        rows = [["stationary", _fmt(profile.thresholds[0]), _fmt5(profile.thresholds[0])]]
    else:
        rows = [[str(t + 1), _fmt(b), _fmt5(b)] for t, b in enumerate(profile.thresholds)]
    csv_doc = _csv_text(header, rows, manifest)

    if profile.warning:
        print(f"warning: {profile.warning}", file=sys.stderr)
    if args.out:
        _write(json_path, json.dumps(doc, indent=2) + "\n")
        _write(csv_path, csv_doc)
        print(f"wrote {json_path} and {csv_path}")
    elif args.format == "csv":
        print(csv_doc, end="")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    if game.is_finite:
        bound = critical_discount_finite(game)
        label = "finite-horizon critical discount"
    else:
        bound = critical_discount_infinite(game)
        label = "stationary critical discount"
    outputs = [args.out] if args.out else []
    manifest = _manifest(args, "bounds", source, {"horizon": game.to_dict()["horizon"]}, outputs, t0)
    doc = {"bound": label, "horizon": game.to_dict()["horizon"], **bound.to_dict(),
           "manifest": manifest.to_dict()}
    _emit_json(doc, args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    profile, profile_source = _load_profile(args, game)
    report = verify_pbe(game, profile, bins=args.bins, tol=args.tol)
    outputs = [args.out] if args.out else []
    manifest = _manifest(
        args,
        "verify",
        source,
        {"profile": profile_source, "bins": args.bins, "tol": args.tol},
        outputs,
        t0,
    )
    doc = report.to_dict(include_grids=bool(args.out))
    doc["manifest"] = manifest.to_dict()
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    if args.format == "json" and not args.out:
        print(json.dumps(doc, indent=2))
    else:
        print(report.table())
    return EXIT_OK if report.is_pbe else EXIT_NOT_PBE


def _cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    profile, profile_source = _load_profile(args, game)
    result = simulate(game, profile, replications=args.reps, seed=args.seed, t_max=args.t_max)
    json_path, csv_path = _json_and_csv_paths(args.out) if args.out else (None, None)
    outputs = [p for p in (json_path, csv_path) if p]
    manifest = _manifest(
        args,
        "simulate",
        source,
        {"profile": profile_source, "reps": args.reps, "seed": args.seed, "t_max": result.t_max},
        outputs,
        t0,
    )
    doc = result.to_dict()
    if args.reps == 1:
        doc["playout"] = trace_playout(game, profile, seed=args.seed, replication=0, total=1,
                                       t_max=args.t_max).to_dict()
    doc["manifest"] = manifest.to_dict()
    rows = [[str(t), str(c)] for t, c in sorted(result.stop_time_counts.items())]
    if result.truncated_count:
        rows.append(["truncated", str(result.truncated_count)])
    csv_doc = _csv_text(["stop_time", "count"], rows, manifest)
    if args.out:
        _write(json_path, json.dumps(doc, indent=2) + "\n")
        _write(csv_path, csv_doc)
        print(f"wrote {json_path} and {csv_path}")
    elif args.format == "csv":
        print(csv_doc, end="")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def _parse_sweep_values(args) -> list:
    if args.values:
        raw = [v for v in args.values.split(",") if v.strip()]
    elif args.range:
        parts = args.range.split(":")
        if len(parts) not in (2, 3):
            raise InputError(f"--range must be lo:hi[:step], got {args.range!r}")
        lo, hi = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else (1.0 if args.param == "T" else 0.1)
        if step <= 0 or hi < lo:
            raise InputError(f"empty sweep range {args.range!r}")
        raw = []
        v = lo
        while v <= hi + 1e-12:
            raw.append(v)
            v += step
    else:
        raise InputError("sweep needs --values or --range")
    if not raw:
        raise InputError("sweep range produced no grid points")
    if args.param == "T":
        try:
            vals = [int(float(v)) for v in raw]
        except ValueError as exc:
            raise InputError(f"horizon sweep values must be integers: {args.values!r}") from exc
        if any(v < 1 for v in vals):
            raise InputError("horizon sweep values must be >= 1")
        return vals
    try:
        vals = [float(v) for v in raw]
    except ValueError as exc:
        raise InputError(f"delta sweep values must be numbers: {args.values!r}") from exc
    if any(not (0.0 < v <= 1.0) for v in vals):
        raise InputError("delta sweep values must lie in (0, 1]")
    return vals


def _sweep_row(game: GameSpec, label: str):
    profile = solve_general(game)
    verdict = classify(game)
    threshold = profile.thresholds[0]
    if (not game.is_finite) and game.delta == 1.0:
        pbe = "n/a"
    else:
        pbe = verify_pbe(game, from_regular(profile)).verdict
    return [
        label,
        _fmt(threshold),
        _fmt5(threshold),
        _fmt(profile.sender_value),
        _fmt(profile.receiver_value),
        _fmt(verdict.bound_used),
        verdict.regime,
        pbe,
    ]


SWEEP_HEADER = [
    "param",
    "threshold",
    "threshold_5dp",
    "sender_value",
    "receiver_value",
    "critical_discount",
    "regime",
    "pbe_verdict",
]


def _sweep_rows(game: GameSpec, args) -> list[list[str]]:
    values = _parse_sweep_values(args)
    rows = []
    if args.param == "T":
        for T in values:
            rows.append(_sweep_row(replace(game, horizon=T), str(T)))
        if not args.no_infinite:
            rows.append(_sweep_row(replace(game, horizon=None), "inf"))
    else:
        for d in values:
            rows.append(_sweep_row(replace(game, delta=d), _fmt(d)))
    return rows


def _cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    rows = _sweep_rows(game, args)
    outputs = [args.out] if args.out else []
    manifest = _manifest(
        args,
        "sweep",
        source,
        {"param": args.param, "values": args.values, "range": args.range},
        outputs,
        t0,
    )
    if args.format == "json":
        doc = {
            "header": SWEEP_HEADER,
            "rows": rows,
            "manifest": manifest.to_dict(),
        }
        _emit_json(doc, args.out)
        return EXIT_OK
    csv_doc = _csv_text(SWEEP_HEADER, rows, manifest)
    if args.out:
        _write(args.out, csv_doc)
        print(f"wrote {args.out}")
    else:
        print(csv_doc, end="")
    return EXIT_OK


def _cmd_transform(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    tg = to_uniform(game)
    json_path, csv_path = _json_and_csv_paths(args.out) if args.out else (None, None)
    outputs = [p for p in (json_path, csv_path) if p]
    manifest = _manifest(args, "transform", source, {}, outputs, t0)
    doc = {"uniform_game": tg.uniform_game.to_dict(), "manifest": manifest.to_dict()}
    steps = 101
    rows = []
    for i in range(steps):
        a = i / (steps - 1)
        rows.append([_fmt(a), _fmt(tg.threshold_to_uniform(a))])
    csv_doc = _csv_text(["original_threshold", "uniform_threshold"], rows, manifest)
    if args.out:
        _write(json_path, json.dumps(doc, indent=2) + "\n")
        _write(csv_path, csv_doc)
        print(f"wrote {json_path} and {csv_path}")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_report(args) -> int:
    t0 = time.perf_counter()
    game, source = _load_game(args)
    if not args.out:
        raise InputError("report needs --out BASE for its figure and CSV files")
    from .report import render_figures

    base = args.out
    conv = threshold_convergence(game, period=1, max_horizon=args.max_horizon)
    figures = render_figures(game, base, max_horizon=args.max_horizon)
    csv_path = f"{base}_sweep.csv"
    outputs = figures + [csv_path]
    manifest = _manifest(args, "report", source, {"max_horizon": args.max_horizon}, outputs, t0)
    rows = [
        [str(T), _fmt(b), _fmt5(b)]
        for T, b in zip(conv.horizons, conv.thresholds)
    ]
    rows.append(["inf", _fmt(conv.limit), _fmt5(conv.limit)])
    _write(csv_path, _csv_text(["horizon", "threshold", "threshold_5dp"], rows, manifest))
    for path in outputs:
        print(f"wrote {path}")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_game_flags(sp):
    sp.add_argument("--game", required=True,
                    help="path to a game spec JSON file, or inline JSON")
    sp.add_argument("--horizon", default=None, help="override horizon: positive integer or 'inf'")
    sp.add_argument("--delta", type=float, default=None, help="override discount factor")
    sp.add_argument("--out", default=None, help="output path (or base path for multi-file output)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stopgame",
        description="Solve, verify and simulate sender-receiver stopping games.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="regular profile thresholds and values")
    _add_game_flags(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("bounds", help="critical discount bound for the game's horizon")
    _add_game_flags(sp)
    sp.set_defaults(func=_cmd_bounds)

    sp = sub.add_parser("verify", help="one-shot deviation report for a profile")
    _add_game_flags(sp)
    sp.add_argument("--profile", default="regular",
                    help="'regular', a profile JSON file, or inline JSON")
    sp.add_argument("--bins", type=int, default=1000, help="sender grid resolution")
    sp.add_argument("--tol", type=float, default=1e-7, help="gap tolerance for the verdict")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo payoff estimates")
    _add_game_flags(sp)
    sp.add_argument("--profile", default="regular",
                    help="'regular', a profile JSON file, or inline JSON")
    sp.add_argument("--reps", type=int, default=10_000, help="number of replications")
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--t-max", type=int, default=None,
                    help="truncation horizon for infinite games")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("sweep", help="table over a horizon or discount grid")
    _add_game_flags(sp)
    sp.add_argument("--param", choices=("T", "delta"), default="T")
    sp.add_argument("--values", default=None, help="comma-separated grid, e.g. 1,2,3,4,5,10")
    sp.add_argument("--range", default=None, help="lo:hi[:step] grid")
    sp.add_argument("--no-infinite", action="store_true",
                    help="omit the stationary row from a horizon sweep")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("transform", help="uniform-state equivalent game")
    _add_game_flags(sp)
    sp.set_defaults(func=_cmd_transform)

    sp = sub.add_parser("report", help="figures plus sweep CSV")
    _add_game_flags(sp)
    sp.add_argument("--max-horizon", type=int, default=10)
    sp.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, *_INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
