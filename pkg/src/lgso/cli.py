"""Command line entry points: run, compare, bias, sweep, list-problems."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .diagnostics import estimate_bias_variance, run_sweep
from .figures import render_bias, render_objective_curves, render_sweep_heatmap
from .problems import list_problems
from .runconfig import (
    ConfigError,
    Run,
    apply_overrides,
    config_hash,
    load_config_file,
    parse_value,
    section,
)
from .traceio import (
    fmt,
    merge_traces,
    read_trace,
    write_plot_data,
    write_summary,
    write_table,
    write_trace,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_BUDGET = 3


def _load_config(args):
    cfg = load_config_file(args.config)
    cfg = apply_overrides(cfg, args.set)
    if getattr(args, "output_dir", None):
        cfg["output_dir"] = args.output_dir
    return cfg


def _echo_config(raw):
    return {f"config.{k}": json.dumps(raw[k]) for k in sorted(raw)}


def cmd_run(args):
    run = Run(_load_config(args))
    os.makedirs(run.output_dir, exist_ok=True)
    started = time.perf_counter()
    trace = run.execute()
    wall = time.perf_counter() - started

    base = os.path.join(run.output_dir, run.label)
    write_trace(base + "_trace.tsv", trace, run.hash)
    write_plot_data(base + "_objective_vs_calls.tsv", trace, run.hash)
    calls = [e.cum_calls for e in trace.entries]
    objs = [e.objective_sim for e in trace.entries]
    render_objective_curves(base + "_objective_vs_calls.png", [(run.label, calls, objs)],
                            title=f"{run.problem.name} ({run.method})")
    summary = {
        "problem": run.problem.name,
        "method": run.method,
        "stop_reason": trace.stop_reason,
        "iterations": len(trace.entries),
        "final_psi": json.dumps([float(v) for v in trace.final_psi]) if trace.entries else "[]",
        "final_objective": fmt(trace.final_objective) if trace.entries else "nan",
        "total_calls": fmt(trace.total_calls),
        "wall_time_s": f"{wall:.3f}",
        "artifact_version": __version__,
        "config_hash": run.hash,
    }
    if trace.aborted:
        summary["aborted"] = trace.aborted
    summary.update(_echo_config(run.raw))
    write_summary(base + "_summary.txt", summary, run.hash)

    print(f"{run.label}: stop={trace.stop_reason} iterations={len(trace.entries)} "
          f"calls={trace.total_calls:g} final_objective="
          f"{trace.final_objective if trace.entries else float('nan'):g}")
    print(f"wrote {base}_trace.tsv")
    if trace.aborted:
        print(f"aborted: {trace.aborted}", file=sys.stderr)
        return EXIT_RUNTIME
    if trace.stop_reason == "budget":
        return EXIT_BUDGET
    return EXIT_OK


def _label_for(path):
    name = os.path.basename(path)
    for suffix in ("_trace.tsv", ".tsv", ".txt"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def cmd_compare(args):
    traces = []
    labels = []
    for path in args.traces:
        trace, _ = read_trace(path)
        if traces and trace.columns() != traces[0].columns():
            raise ConfigError(
                f"trace schema mismatch: {path} has columns {trace.columns()}, "
                f"expected {traces[0].columns()}")
        traces.append(trace)
        labels.append(_label_for(path))
    columns, rows = merge_traces(traces, labels)
    out_dir = os.environ.get("LGSO_OUTPUT_DIR") or args.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash({"inputs": labels})
    table_path = os.path.join(out_dir, args.out)
    write_table(table_path, "compare", columns, rows, chash)
    curves = [(label, [e.cum_calls for e in t.entries], [e.objective_sim for e in t.entries])
              for label, t in zip(labels, traces)]
    png_path = os.path.splitext(table_path)[0] + ".png"
    render_objective_curves(png_path, curves, title="objective vs simulator calls")
    print(f"wrote {table_path} ({len(rows)} checkpoints) and {png_path}")
    return EXIT_OK


def cmd_bias(args):
    cfg = _load_config(args)
    cfg.setdefault("method", "lgso")
    if cfg["method"] != "lgso":
        raise ConfigError("bias estimation runs on the surrogate method; set method = lgso")
    run = Run(cfg)
    os.makedirs(run.output_dir, exist_ok=True)
    opts = section(cfg, "bias")
    repeats = opts.get("repeats", 10)
    if not isinstance(repeats, int) or repeats < 2:
        raise ConfigError(f"bias.repeats must be an integer >= 2, got {repeats!r}")
    if "psi_file" in opts:
        points = np.atleast_2d(np.loadtxt(opts["psi_file"], ndmin=2))
    elif "psi" in opts:
        points = np.atleast_2d(np.asarray(opts["psi"], dtype=float))
    else:
        points = np.atleast_2d(np.asarray(run.problem.psi_init, dtype=float))

    rows = []
    entries = []
    for t, psi_t in enumerate(points):
        entry = estimate_bias_variance(run.problem, psi_t, repeats, run.config,
                                       np.random.default_rng([run.seed, t]))
        entries.append(entry)
        std = np.sqrt(entry.variance)
        for i in range(psi_t.size):
            rows.append((str(t), str(i), entry.true_gradient[i], entry.bias[i],
                         entry.variance[i], std[i],
                         str(int(abs(entry.bias[i]) < std[i]))))
    base = os.path.join(run.output_dir, f"bias_{run.problem.name}_seed{run.seed}")
    write_table(base + ".tsv", "bias",
                ["point", "component", "true_gradient", "bias", "variance", "std", "within_one_std"],
                rows, run.hash, problem=run.problem.name, repeats=repeats)
    render_bias(base + ".png", entries[0],
                title=f"{run.problem.name}: surrogate gradient bias (R={repeats})")
    within = sum(int(r[-1]) for r in rows)
    print(f"{within}/{len(rows)} components within one std; wrote {base}.tsv")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load_config(args)
    run = Run(cfg)
    os.makedirs(run.output_dir, exist_ok=True)
    grid = {}
    for key, value in section(cfg, "sweep").items():
        grid[key] = value if isinstance(value, list) else [value]
    for item in args.grid or []:
        if "=" not in item:
            raise ConfigError(f"--grid {item!r} is not of the form key=v1,v2,...")
        key, _, values = item.partition("=")
        grid[key.strip()] = [parse_value(v) for v in values.split(",")]
    if not grid:
        raise ConfigError("sweep needs at least one --grid key=v1,v2 or sweep.* config entry")
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else (run.seed,)
    try:
        cells = run_sweep(run.problem, grid, run.config, method=run.method,
                          seeds=seeds, parallelism=run.parallelism)
    except ValueError as err:
        raise ConfigError(str(err)) from err

    keys = sorted(grid)
    rows = [tuple(str(c.coords[k]) for k in keys)
            + (c.final_objective, c.calls_to_converge, str(int(c.converged)), c.status)
            for c in cells]
    base = os.path.join(run.output_dir, f"sweep_{run.problem.name}_{run.method}")
    write_table(base + ".tsv", "sweep",
                keys + ["final_objective", "calls_to_converge", "converged", "status"],
                rows, run.hash, problem=run.problem.name, method=run.method)
    if len(keys) == 2:
        render_sweep_heatmap(base + ".png", cells, keys[0], keys[1],
                             title=f"{run.problem.name} sweep")
    ok = [c for c in cells if c.status == "ok"]
    if ok:
        best = min(ok, key=lambda c: c.final_objective)
        print(f"best cell: {best.coords} final_objective={best.final_objective:g}")
    failed = [c for c in cells if c.status != "ok"]
    if failed:
        print(f"{len(failed)}/{len(cells)} cells failed", file=sys.stderr)
    print(f"wrote {base}.tsv")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_list_problems(args):
    for name in list_problems():
        print(name)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lgso",
        description="Optimize stochastic black-box simulators through local generative surrogates.",
    )
    parser.add_argument("--version", action="version", version=f"lgso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("-c", "--config", required=True, help="run config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("-o", "--output-dir", help="output directory override")

    p = sub.add_parser("run", help="run one optimizer and write trace, summary, plot files")
    add_config_opts(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("compare", help="merge traces onto one call grid")
    p.add_argument("traces", nargs="+", help="trace files from `lgso run`")
    p.add_argument("-o", "--output-dir", help="output directory")
    p.add_argument("--out", default="compare.tsv", help="merged table file name")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("bias", help="surrogate gradient bias/variance against the oracle")
    add_config_opts(p)
    p.set_defaults(handler=cmd_bias)

    p = sub.add_parser("sweep", help="grid sweep over config fields")
    add_config_opts(p)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                   help="grid axis over a method config field (repeatable)")
    p.add_argument("--seeds", help="comma-separated seed list per cell")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("list-problems", help="print available problem ids")
    p.set_defaults(handler=cmd_list_problems)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as err:  # noqa: BLE001  (runtime failures map to exit 2)
        print(f"runtime failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
