"""Entry point: fit a surrogate to simulation records."""

from __future__ import annotations

import numpy as np

from .config import SurrogateConfig
from .cramer import train_cramer_gan
from .flow import train_coupling_flow
from .model import Standardizer, SurrogateModel, build_nets
from .monitor import monitor_stats

MONITOR_SAMPLE_CAP = 4096


def train_surrogate(records, config, rng):
    """Train a fresh surrogate on (psis, xs, ys) record arrays.

    Records are put in a canonical order before the seeded shuffle, so the
    trained weights depend on the record set and seed, not insertion order.
    """
    psis, xs, ys = (np.atleast_2d(np.asarray(a, dtype=float)) for a in records[:3])
    if psis.shape[0] == 0:
        raise ValueError("cannot train a surrogate on zero records")
    if not (psis.shape[0] == xs.shape[0] == ys.shape[0]):
        raise ValueError(
            f"record count mismatch: {psis.shape[0]} psis, {xs.shape[0]} xs, {ys.shape[0]} ys"
        )

    order = np.lexsort(np.hstack([psis, xs, ys]).T[::-1])
    psis, xs, ys = psis[order], xs[order], ys[order]

    std = Standardizer.from_records(psis, xs, ys)
    p32 = std.psi_np(psis).astype(np.float32)
    x32 = std.x_np(xs).astype(np.float32)
    y32 = std.y_np(ys).astype(np.float32)

    nets = build_nets(config, psis.shape[1], xs.shape[1], ys.shape[1], rng)
    model = SurrogateModel(config, psis.shape[1], xs.shape[1], ys.shape[1], std, nets)

    if config.kind == "cramer_gan":
        train_meta = train_cramer_gan(nets, y32, x32, p32, config, rng)
    else:
        train_meta = train_coupling_flow(model, y32, x32, p32, config, rng)

    n_check = min(psis.shape[0], MONITOR_SAMPLE_CAP)
    sel = np.sort(rng.choice(psis.shape[0], size=n_check, replace=False))
    z = rng.standard_normal((n_check, model.noise_dim))
    fake = model.sample_rows(z, xs[sel], psis[sel])
    stats = monitor_stats(ys[sel], fake)

    model.meta = {
        "n_records": int(psis.shape[0]),
        "epochs": int(config.epochs),
        "train": train_meta,
        "monitor": stats,
    }
    return model
