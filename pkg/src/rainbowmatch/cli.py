"""Command-line front end.

Subcommands: gen, count, solve, trace, threshold, mean-count, hamilton, plot.
Run `rainbowmatch <subcommand> --help` for the per-command flags.  Exit codes:
0 on success (for `solve`: a witness was found), 1 when `solve` proves
absence, 2 for configuration or input errors, 3 when a search budget ran out.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .count import (
    BudgetExceededError,
    DEFAULT_NODE_BUDGET,
    count_rainbow_pm,
    find_rainbow_pm,
    latin_transversal,
)
from .hamilton import DEFAULT_HC_BUDGET
from .model import (
    RandomnessSpec,
    complete_colored,
    dumps_instance,
    load_instance,
    loads_instance,
    sample_colored_graph,
    sample_partite_m,
    sample_partite_p,
)
from .process import LemmaPreconditionError

__all__ = ["main", "build_parser"]


def _int_grid(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty grid")
    return values


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_run_flags(sub, hc_budget: bool = False) -> None:
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET,
                     help="node budget per exact search")
    if hc_budget:
        sub.add_argument("--hc-budget", type=int, default=DEFAULT_HC_BUDGET)
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--raw-out", default=None,
                     help="append one JSON line per completed trial (progress stream)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainbowmatch",
        description="Samplers, exact rainbow-matching solvers, deletion traces, "
        "and Hamilton-cycle pipelines for edge-colored instances.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="sample an instance and write its JSON")
    gen.add_argument("--mode", choices=("partite", "graph"), default="partite")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, default=2)
    gen.add_argument("--colors", type=int, default=None, help="default: n")
    group = gen.add_mutually_exclusive_group()
    group.add_argument("--m", type=int, default=None, help="sample exactly m edges")
    group.add_argument("--p", type=float, default=None, help="keep each edge with probability p")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)

    count = subs.add_parser("count", help="exactly count rainbow perfect matchings")
    count.add_argument("instance", help="instance JSON path, or - for stdin")
    count.add_argument("--method", choices=("brute", "ie"), default="brute")
    count.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    count.add_argument("--out", default=None)

    solve = subs.add_parser("solve", help="find one rainbow perfect matching or "
                            "one latin transversal")
    solve.add_argument("instance", nargs="?", default=None,
                       help="instance JSON path, or - for stdin")
    solve.add_argument("--latin", default=None,
                       help="integer-matrix CSV; 0 marks an unavailable cell")
    solve.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    solve.add_argument("--out", default=None)

    trace = subs.add_parser("trace", help="run the edge-deletion process and "
                            "emit per-step statistics")
    trace.add_argument("--n", type=int, required=True)
    trace.add_argument("--k", type=int, default=2)
    trace.add_argument("--colors", type=int, default=None)
    trace.add_argument("--steps", type=int, default=None, help="stop after this many deletions")
    trace.add_argument("--event-k", type=float, default=100.0,
                       help="abundance scale for the flag thresholds")
    trace.add_argument("--summary-out", default=None,
                       help="also write the per-step aggregate CSV here")
    _add_run_flags(trace)

    threshold = subs.add_parser("threshold", help="success probability over an (n, m) grid")
    threshold.add_argument("--n", type=_int_grid, required=True, help="comma-separated n grid")
    threshold.add_argument("--k", type=int, default=2)
    threshold.add_argument("--colors", type=int, default=None)
    threshold.add_argument("--m", type=_int_grid, required=True, help="comma-separated m grid")
    _add_run_flags(threshold)

    mean = subs.add_parser("mean-count", help="sample means of exact counts vs closed forms")
    mean.add_argument("--n", type=_int_grid, required=True)
    mean.add_argument("--k", type=int, default=2)
    mean.add_argument("--colors", type=int, default=None)
    _add_run_flags(mean)

    ham = subs.add_parser("hamilton", help="rainbow Hamilton cycle pipelines")
    ham.add_argument("--n", type=_int_grid, required=True)
    ham.add_argument("--m", type=_int_grid, required=True)
    ham.add_argument("--colors", type=int, default=None)
    ham.add_argument("--retries", type=int, default=0,
                     help="independent attempts per trial (required for odd n)")
    _add_run_flags(ham, hc_budget=True)

    plot = subs.add_parser("plot", help="render a CSV column pair as an SVG plot")
    plot.add_argument("csv", help="CSV file produced by this tool")
    plot.add_argument("--x", required=True)
    plot.add_argument("--y", required=True)
    plot.add_argument("--yerr", default=None)
    plot.add_argument("--title", default="")
    plot.add_argument("--width", type=int, default=640)
    plot.add_argument("--height", type=int, default=440)
    plot.add_argument("--out", default=None)

    return parser


def _read_instance(arg: str):
    if arg == "-":
        return loads_instance(sys.stdin.read())
    return load_instance(arg)


def _cmd_gen(args) -> int:
    rnd = RandomnessSpec(args.seed).rng()
    kappa = args.colors if args.colors is not None else args.n
    if args.mode == "partite":
        if args.p is not None:
            H = sample_partite_p(args.n, args.k, kappa, args.p, rnd)
        elif args.m is not None:
            H = sample_partite_m(args.n, args.k, kappa, args.m, rnd)
        else:
            H = complete_colored(args.n, args.k, kappa, rnd)
    else:
        if args.p is not None:
            raise ValueError("the binomial model is partite-only; use --m for graphs")
        m = args.m if args.m is not None else args.n * (args.n - 1) // 2
        H = sample_colored_graph(args.n, m, kappa, rnd)
    _write_text(dumps_instance(H) + "\n", args.out)
    return 0


def _cmd_count(args) -> int:
    H = _read_instance(args.instance)
    try:
        report = count_rainbow_pm(H, method=args.method, budget=args.budget)
    except BudgetExceededError as exc:
        _write_text(
            json.dumps({"outcome": "budget", "nodes": exc.nodes}) + "\n", args.out
        )
        return 3
    payload = {
        "outcome": "counted",
        "value": report.value,
        "method": report.method,
        "nodes": report.nodes,
        "elapsed": report.elapsed,
    }
    _write_text(json.dumps(payload) + "\n", args.out)
    return 0


def _parse_matrix(path: str) -> list[list[int]]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rows.append([int(cell) for cell in line.split(",")])
    if not rows:
        raise ValueError("matrix CSV has no rows")
    return rows


def _cmd_solve(args) -> int:
    if (args.instance is None) == (args.latin is None):
        raise ValueError("give exactly one of an instance path or --latin")
    if args.latin is not None:
        matrix = _parse_matrix(args.latin)
        try:
            cells = latin_transversal(matrix, budget=args.budget)
        except BudgetExceededError as exc:
            _write_text(json.dumps({"outcome": "budget", "nodes": exc.nodes}) + "\n", args.out)
            return 3
        if cells is None:
            _write_text(json.dumps({"outcome": "absent", "cells": None}) + "\n", args.out)
            return 1
        _write_text(
            json.dumps({"outcome": "found", "cells": [list(c) for c in cells]}) + "\n",
            args.out,
        )
        return 0
    H = _read_instance(args.instance)
    try:
        M = find_rainbow_pm(H, budget=args.budget)
    except BudgetExceededError as exc:
        _write_text(json.dumps({"outcome": "budget", "nodes": exc.nodes}) + "\n", args.out)
        return 3
    if M is None:
        _write_text(json.dumps({"outcome": "absent", "matching": None}) + "\n", args.out)
        return 1
    payload = {
        "outcome": "found",
        "matching": [{"verts": list(e.verts), "color": e.color} for e in M.edges],
    }
    _write_text(json.dumps(payload) + "\n", args.out)
    return 0


def _open_raw(path: str | None):
    if path is None:
        return None
    return open(path, "a", encoding="utf-8")


def _cmd_trace(args) -> int:
    config = experiments.ExperimentConfig(
        kind="trace",
        ns=(args.n,),
        k=args.k,
        kappa=args.colors,
        trials=args.trials,
        master_seed=args.seed,
        jobs=args.jobs,
        node_budget=args.budget,
        t_max=args.steps,
        event_abundance=args.event_k,
    )
    raw = _open_raw(args.raw_out)
    try:
        result = experiments.trace_experiment(config, raw_sink=raw)
    finally:
        if raw is not None:
            raw.close()
    if args.format == "csv":
        _write_text(experiments.trace_steps_csv(result), args.out)
    else:
        _write_text(
            experiments.table_json("trace", *experiments.trace_steps_table(result)), args.out
        )
    if args.summary_out is not None:
        _write_text(experiments.trace_summary_csv(result), args.summary_out)
    return 0


def _grid_experiment(args, kind: str):
    return experiments.ExperimentConfig(
        kind=kind,
        ns=args.n,
        k=getattr(args, "k", 2),
        kappa=args.colors,
        ms=getattr(args, "m", ()),
        trials=args.trials,
        master_seed=args.seed,
        jobs=args.jobs,
        node_budget=args.budget,
        hc_budget=getattr(args, "hc_budget", DEFAULT_HC_BUDGET),
        retries=getattr(args, "retries", 0),
    )


def _cmd_threshold(args) -> int:
    config = _grid_experiment(args, "threshold")
    raw = _open_raw(args.raw_out)
    try:
        result = experiments.threshold_scan(config, raw_sink=raw)
    finally:
        if raw is not None:
            raw.close()
    if args.format == "csv":
        _write_text(experiments.threshold_csv(result), args.out)
    else:
        _write_text(
            experiments.table_json("threshold", *experiments.threshold_table(result)), args.out
        )
    return 0


def _cmd_mean_count(args) -> int:
    config = _grid_experiment(args, "mean-count")
    raw = _open_raw(args.raw_out)
    try:
        result = experiments.mean_count_experiment(config, raw_sink=raw)
    finally:
        if raw is not None:
            raw.close()
    if args.format == "csv":
        _write_text(experiments.mean_count_csv(result), args.out)
    else:
        _write_text(
            experiments.table_json("mean-count", *experiments.mean_count_table(result)), args.out
        )
    return 0


def _cmd_hamilton(args) -> int:
    config = _grid_experiment(args, "hamilton")
    raw = _open_raw(args.raw_out)
    try:
        result = experiments.hamilton_experiment(config, raw_sink=raw)
    finally:
        if raw is not None:
            raw.close()
    if args.format == "csv":
        _write_text(experiments.hamilton_csv(result), args.out)
    else:
        _write_text(experiments.hamilton_trials_json(result), args.out)
    return 0


def _cmd_plot(args) -> int:
    text = Path(args.csv).read_text(encoding="utf-8")
    spec = experiments.PlotSpec(
        x=args.x, y=args.y, yerr=args.yerr, title=args.title,
        width=args.width, height=args.height,
    )
    _write_text(experiments.emit_plot(text, spec), args.out)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "count": _cmd_count,
    "solve": _cmd_solve,
    "trace": _cmd_trace,
    "threshold": _cmd_threshold,
    "mean-count": _cmd_mean_count,
    "hamilton": _cmd_hamilton,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, LemmaPreconditionError, OSError, json.JSONDecodeError) as exc:
        print(f"rainbowmatch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
