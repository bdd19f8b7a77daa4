"""Command-line entry point.

Subcommands:
  genmap    generate a treasure map JSON and print a validation summary
  solve     print the theory report (protected fixed point, bounds, abstract)
  sweep     Monte Carlo threshold-grid sweep, CSV + manifest to a directory
  analyze   label a decision log and emit fits, rate curves and efficiency
  serve     run the live session service

Every subcommand is deterministic under a fixed --seed. Flags beat the
optional --config JSON file, which beats built-in defaults. Each output
directory receives a manifest recording exactly what produced it. Relative
output paths resolve under $TREASUREHUNT_OUT_ROOT when that is set.
Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .engine import Condition, GameConfig, LogParseError, read_log
from .hexmap import (
    MapGenerationError,
    generate_map,
    serialize_map,
    validate_map,
)
from .theory import TheoryError, theory_report, two_stage_deterministic

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

DEFAULTS = {
    "genmap": {"seed": 0, "width": 70, "height": 30, "mines": 35, "out": "map.json"},
    "solve": {"model": "game", "Rr": 16.0, "Ra": 26.0, "n": 4, "alpha": 0.5,
              "beta": 2.0, "R": 100.0, "A": 100.0},
    "sweep": {"condition": "protection", "reps": 2000, "grid": "5:35:5", "seed": 0,
              "out": "sweep_out", "jobs": 1, "map_policy": "fresh",
              "equilibrium": False},
    "analyze": {"log": None, "exclude_last": 12, "out": "analysis_out",
                "condition": None, "width": 70, "height": 30,
                "paper_candidates": False, "no_continuation": False},
    "serve": {"addr": "127.0.0.1:8000", "static_dir": None, "log_dir": "sessions",
              "seed": 0},
}


class UsageError(Exception):
    pass


def out_path(value) -> Path:
    """Resolve an output path, honoring the TREASUREHUNT_OUT_ROOT default
    root for relative paths."""
    path = Path(value)
    root = os.environ.get("TREASUREHUNT_OUT_ROOT")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def parse_grid(text: str) -> tuple:
    """Either 'lo:hi:step' or a comma list; '5:35:5' gives the 7 multiples."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid spec {text!r}, want lo:hi:step")
        lo, hi, step = (int(p) for p in parts)
        if step <= 0 or hi < lo:
            raise UsageError(f"bad grid spec {text!r}")
        return tuple(range(lo, hi + 1, step))
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad grid spec {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treasurehunt",
        description="Competitive Treasure Hunt: simulator, solvers, sweeps, analysis, server",
    )
    parser.add_argument("--config", help="JSON file with option defaults")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("genmap", help="generate a treasure map")
    g.add_argument("--seed", type=int)
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--mines", type=int)
    g.add_argument("--out")

    s = sub.add_parser("solve", help="print the theory report as JSON")
    s.add_argument("--model", choices=["abstract", "game", "bounds", "two-stage"])
    s.add_argument("--Rr", type=float)
    s.add_argument("--Ra", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--R", type=float, help="two-stage reward")
    s.add_argument("--A", type=float, help="two-stage cost ceiling")

    w = sub.add_parser("sweep", help="Monte Carlo threshold sweep")
    w.add_argument("--condition", choices=[c.value for c in Condition])
    w.add_argument("--reps", type=int)
    w.add_argument("--grid", help="lo:hi:step or comma list")
    w.add_argument("--seed", type=int)
    w.add_argument("--out")
    w.add_argument("--jobs", type=int)
    w.add_argument("--map-policy", dest="map_policy", choices=["fresh", "fixed"])
    w.add_argument("--equilibrium", action="store_true", default=None,
                   help="also run the iterated-best-response candidate search")

    a = sub.add_parser("analyze", help="analyze a decision log")
    a.add_argument("--log")
    a.add_argument("--exclude-last", dest="exclude_last", type=int)
    a.add_argument("--out")
    a.add_argument("--condition", choices=[c.value for c in Condition],
                   help="only analyze rows from this condition")
    a.add_argument("--width", type=int)
    a.add_argument("--height", type=int)
    a.add_argument("--paper-candidates", dest="paper_candidates", action="store_true",
                   default=None, help="fit without the always-search sentinel")
    a.add_argument("--no-continuation", dest="no_continuation", action="store_true",
                   default=None,
                   help="label Sequential only immediately after a discovery")

    v = sub.add_parser("serve", help="run the session server")
    v.add_argument("--addr")
    v.add_argument("--static-dir", dest="static_dir")
    v.add_argument("--log-dir", dest="log_dir")
    v.add_argument("--seed", type=int)
    return parser


def effective_options(args: argparse.Namespace) -> dict:
    """flags > config file > defaults."""
    command = args.command
    options = dict(DEFAULTS[command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        section = loaded.get(command, loaded)
        for key, value in section.items():
            if key in options:
                options[key] = value
    for key in options:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


def write_manifest(out_dir: Path, command: str, options: dict, outputs: list[str],
                   started: float) -> None:
    manifest = {
        "tool": "treasurehunt",
        "version": __version__,
        "command": command,
        "options": {k: v for k, v in options.items()},
        "outputs": outputs,
        "wall_clock_s": round(time.time() - started, 3),
        "started_unix": round(started, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


# -- subcommands ----------------------------------------------------------------


def cmd_genmap(options: dict) -> int:
    started = time.time()
    try:
        tmap = generate_map(
            options["seed"], options["width"], options["height"], options["mines"]
        )
    except MapGenerationError as exc:
        print(f"map generation failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = out_path(options["out"])
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_map(tmap))
    violations = validate_map(tmap)
    print(
        f"map seed={tmap.seed} {tmap.width}x{tmap.height} mines={len(tmap.mines)} "
        f"treasures={3 * len(tmap.mines)} density={tmap.density:.4f} "
        f"violations={len(violations)}"
    )
    if out.parent.is_dir() and out.parent != Path("."):
        write_manifest(out.parent, "genmap", options, [out.name], started)
    return EXIT_OK


def cmd_solve(options: dict) -> int:
    model = options["model"]
    try:
        if model == "two-stage":
            c1, c2, x = two_stage_deterministic(options["R"], options["A"])
            report = {"two_stage": {"c1": c1, "c2": c2, "x": x}}
        else:
            full = theory_report(
                R_r=options["Rr"],
                R_a=options["Ra"],
                n=options["n"],
                alpha=options["alpha"],
                beta=options["beta"],
            )
            if model == "game":
                report = {"protection": full["protection"]}
            elif model == "bounds":
                report = {"no_protection": full["no_protection"]}
            else:
                report = {"abstract": full["abstract"]}
    except TheoryError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_sweep(options: dict) -> int:
    from .montecarlo import (
        SweepSpec,
        best_symmetric,
        efficiency_report,
        equilibrium_candidate,
        run_sweep,
        sweep_to_csv,
    )

    started = time.time()
    grid_values = parse_grid(str(options["grid"]))
    spec = SweepSpec(
        condition=Condition(options["condition"]),
        threshold_grid=grid_values,
        reps=options["reps"],
        seed=options["seed"],
        map_policy=options["map_policy"],
        jobs=options["jobs"],
        config=GameConfig(),
    )
    try:
        spec.validate()
    except ValueError as exc:
        print(f"invalid sweep spec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = out_path(options["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = run_sweep(spec)
    sweep_to_csv(grid, out_dir / "sweep.csv")
    outputs = ["sweep.csv"]
    argmax = best_symmetric(grid)
    report = efficiency_report(grid)
    summary = {
        "argmax": list(argmax),
        "duplication_vs_sequential_spearman": report["duplication_vs_sequential_spearman"],
    }
    if options["equilibrium"]:
        candidate = equilibrium_candidate(spec, start=argmax)
        summary["equilibrium_candidate"] = list(candidate["candidate"])
        summary["equilibrium_path"] = [list(p) for p in candidate["path"]]
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    outputs.append("summary.json")
    write_manifest(out_dir, "sweep", options, outputs, started)
    print(
        f"{spec.condition.value}: argmax symmetric profile = {argmax}, "
        f"{len(grid)} cells x {spec.reps} reps"
    )
    return EXIT_OK


def cmd_analyze(options: dict) -> int:
    import csv as csv_mod

    from .analysis import (
        PAPER_CANDIDATES,
        THRESHOLD_CANDIDATES,
        efficiency_metrics,
        fit_all_thresholds,
        forgone_effect,
        label_contexts,
        search_rate_curves,
        threshold_summary,
    )

    started = time.time()
    if not options["log"]:
        print("analyze needs --log", file=sys.stderr)
        return EXIT_USAGE
    try:
        records = read_log(options["log"])
    except OSError as exc:
        print(f"cannot read log: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LogParseError as exc:
        print(f"malformed log: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if options["condition"]:
        records = [r for r in records if r.condition == options["condition"]]
    out_dir = out_path(options["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    labeled = label_contexts(
        records,
        exclude_last=options["exclude_last"],
        width=options["width"],
        height=options["height"],
        continuation=not options["no_continuation"],
    )
    candidates = PAPER_CANDIDATES if options["paper_candidates"] else THRESHOLD_CANDIDATES

    with open(out_dir / "labeled.csv", "w", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(list(labeled[0]._fields) if labeled else ["context"])
        for rec in labeled:
            writer.writerow(list(rec))

    fits = fit_all_thresholds(labeled, candidates)
    with open(out_dir / "threshold_fits.csv", "w", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(["player", "context", "threshold", "quality", "n_obs"])
        for f in fits:
            writer.writerow([f.player, f.context, f.threshold, f.quality, f.n_obs])

    curves = search_rate_curves(labeled)
    with open(out_dir / "rate_curves.csv", "w", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(["condition", "context", "cost", "n", "searches", "rate"])
        for row in curves:
            writer.writerow([row[k] for k in ("condition", "context", "cost", "n", "searches", "rate")])

    summary = {
        "records": len(records),
        "efficiency": efficiency_metrics(records),
        "thresholds": threshold_summary(fits),
        "forgone": forgone_effect(labeled),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    write_manifest(
        out_dir,
        "analyze",
        options,
        ["labeled.csv", "threshold_fits.csv", "rate_curves.csv", "summary.json"],
        started,
    )
    print(
        f"analyzed {len(records)} records -> {out_dir} "
        f"({len(fits)} player-context threshold fits)"
    )
    return EXIT_OK


def cmd_serve(options: dict) -> int:
    import uvicorn

    from .server import create_app

    addr = options["addr"]
    host, _, port_text = addr.partition(":")
    try:
        port = int(port_text or "8000")
    except ValueError:
        print(f"bad --addr {addr!r}", file=sys.stderr)
        return EXIT_USAGE
    app = create_app(log_dir=options["log_dir"], static_dir=options["static_dir"],
                     seed=options["seed"])
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=port, log_level="warning")
    except OSError as exc:
        print(f"server failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:  # uvicorn signals startup failure (port in use)
        if exc.code not in (0, None):
            print("server failed to start (is the port in use?)", file=sys.stderr)
            return EXIT_RUNTIME
    return EXIT_OK


COMMANDS = {
    "genmap": cmd_genmap,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        options = effective_options(args)
        return COMMANDS[args.command](options)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
