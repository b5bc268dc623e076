"""Tab-separated artifact files: traces, summaries, tables, plot data.

Every file starts with one `#` header line carrying the file kind, the
artifact version, and the config hash, so outputs can be traced back to
the exact configuration that produced them.
"""

from __future__ import annotations

import math

import numpy as np

from . import __version__
from .loop import OptTrace, TraceEntry
from .surrogate.monitor import MONITOR_KEYS

DELIMITER = "\t"


def fmt(value):
    """Full-precision text for a float; round-trips float64 exactly."""
    return "%.17g" % float(value)


def header_line(kind, config_hash, **extra):
    parts = [f"# lgso-{kind}", "v1", f"artifact={__version__}", f"config={config_hash}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def parse_header(line, kind):
    prefix = f"# lgso-{kind} v1 "
    if not line.startswith(prefix):
        raise ValueError(f"not a lgso-{kind} file: header is {line!r}")
    meta = {}
    for token in line[len(prefix):].split():
        key, _, value = token.partition("=")
        meta[key] = value
    return meta


def write_trace(path, trace: OptTrace, config_hash):
    cols = trace.columns()
    lines = [
        header_line("trace", config_hash, problem=trace.problem, method=trace.method,
                    stop=trace.stop_reason),
        DELIMITER.join(cols),
    ]
    for e in trace.entries:
        row = ([str(e.iteration), fmt(e.cum_calls), fmt(e.objective_sim),
                fmt(e.objective_surr), fmt(e.grad_norm)]
               + [fmt(v) for v in e.psi] + [fmt(v) for v in e.monitor_values()])
        lines.append(DELIMITER.join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path):
    """Returns (OptTrace, header meta dict)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if len(lines) < 2:
        raise ValueError(f"{path}: truncated trace file")
    meta = parse_header(lines[0], "trace")
    cols = lines[1].split(DELIMITER)
    psi_cols = [c for c in cols if c.startswith("psi_")]
    expected = (["iteration", "cum_calls", "objective_sim", "objective_surr", "grad_norm"]
                + psi_cols + list(MONITOR_KEYS))
    if cols != expected:
        raise ValueError(f"{path}: unexpected trace columns {cols}")
    dim = len(psi_cols)
    trace = OptTrace(problem=meta.get("problem", ""), method=meta.get("method", ""),
                     psi_dim=dim, stop_reason=meta.get("stop", ""))
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(DELIMITER)
        if len(parts) != len(cols):
            raise ValueError(f"{path}:{lineno}: {len(parts)} fields, expected {len(cols)}")
        values = [float(p) for p in parts[1:]]
        trace.entries.append(TraceEntry(
            iteration=int(parts[0]),
            cum_calls=values[0],
            objective_sim=values[1],
            objective_surr=values[2],
            grad_norm=values[3],
            psi=np.array(values[4:4 + dim]),
            monitor=dict(zip(MONITOR_KEYS, values[4 + dim:])),
        ))
    return trace, meta


def write_summary(path, summary, config_hash):
    lines = [header_line("summary", config_hash)]
    for key, value in summary.items():
        lines.append(f"{key} = {value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_table(path, kind, columns, rows, config_hash, **extra):
    """Generic delimited table; rows are sequences aligned with columns."""
    lines = [header_line(kind, config_hash, **extra), DELIMITER.join(columns)]
    for row in rows:
        lines.append(DELIMITER.join(
            item if isinstance(item, str) else fmt(item) for item in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_plot_data(path, trace: OptTrace, config_hash):
    rows = [(e.cum_calls, e.objective_sim) for e in trace.entries]
    write_table(path, "plot", ["cum_calls", "objective_sim"], rows, config_hash,
                problem=trace.problem, method=trace.method)


def merge_traces(traces, labels):
    """Align traces on the union of their call checkpoints.

    Objectives are stepped: at a grid point each trace reports its last
    entry at or below that call count, nan before its first entry.
    """
    if len(traces) != len(labels):
        raise ValueError("one label per trace required")
    if not traces:
        raise ValueError("need at least one trace")
    grid = sorted({e.cum_calls for t in traces for e in t.entries})
    columns = ["cum_calls"] + [f"objective_sim:{label}" for label in labels]
    rows = []
    for g in grid:
        row = [g]
        for t in traces:
            value = math.nan
            for e in t.entries:
                if e.cum_calls <= g + 1e-9:
                    value = e.objective_sim
                else:
                    break
            row.append(value)
        rows.append(row)
    return columns, rows
