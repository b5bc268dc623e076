"""Figure rendering next to the delimited data files."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_objective_curves(path, curves, title=""):
    """curves: list of (label, cum_calls array, objective array)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    max_calls = 0.0
    for label, calls, objs in curves:
        calls = np.asarray(calls, dtype=float)
        objs = np.asarray(objs, dtype=float)
        keep = np.isfinite(objs)
        ax.plot(calls[keep], objs[keep], label=label, linewidth=1.4)
        if calls.size:
            max_calls = max(max_calls, float(calls.max()))
    if max_calls > 1e4:
        ax.set_xscale("log")
    ax.set_xlabel("simulator calls")
    ax.set_ylabel("objective")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_bias(path, entry, title=""):
    """Componentwise bias with one-standard-deviation bars."""
    comps = np.arange(entry.bias.size)
    std = np.sqrt(entry.variance)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(comps, entry.bias, yerr=std, fmt="o", capsize=3, linewidth=1.2)
    ax.axhline(0.0, color="gray", linestyle="--", linewidth=1.0)
    ax.set_xlabel("component")
    ax.set_ylabel("bias (true - surrogate)")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep_heatmap(path, cells, row_key, col_key, metric="final_objective", title=""):
    """Heatmap for a two-axis sweep; cells come from run_sweep."""
    rows = sorted({c.coords[row_key] for c in cells})
    cols = sorted({c.coords[col_key] for c in cells})
    grid = np.full((len(rows), len(cols)), math.nan)
    for c in cells:
        i = rows.index(c.coords[row_key])
        j = cols.index(c.coords[col_key])
        grid[i, j] = getattr(c, metric)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, aspect="auto", origin="lower")
    ax.set_xticks(range(len(cols)), [str(c) for c in cols])
    ax.set_yticks(range(len(rows)), [str(r) for r in rows])
    ax.set_xlabel(col_key)
    ax.set_ylabel(row_key)
    for i in range(len(rows)):
        for j in range(len(cols)):
            if math.isfinite(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3g}", ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, label=metric)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
