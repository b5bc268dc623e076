"""Distribution-match statistics between simulator and surrogate samples."""

from __future__ import annotations

import numpy as np
from scipy.special import rel_entr
from scipy.stats import ks_2samp

MONITOR_KEYS = ("js_divergence", "ks_statistic", "moment1_diff", "moment2_diff", "moment3_diff")


def monitor_stats(real, generated, bins=50):
    """JS divergence on a shared histogram, two-sample KS statistic, and
    absolute differences of mean, variance, and third central moment."""
    real = np.asarray(real, dtype=float).reshape(-1)
    generated = np.asarray(generated, dtype=float).reshape(-1)
    if real.size == 0 or generated.size == 0:
        raise ValueError("monitor_stats needs non-empty batches")

    lo = min(real.min(), generated.min())
    hi = max(real.max(), generated.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    p = np.histogram(real, bins=edges)[0] / real.size
    q = np.histogram(generated, bins=edges)[0] / generated.size
    mid = 0.5 * (p + q)
    js = 0.5 * float(rel_entr(p, mid).sum() + rel_entr(q, mid).sum())

    ks = float(ks_2samp(real, generated).statistic)

    def central(v, k):
        return float(np.mean((v - v.mean()) ** k))

    return {
        "js_divergence": js,
        "ks_statistic": ks,
        "moment1_diff": abs(float(real.mean() - generated.mean())),
        "moment2_diff": abs(central(real, 2) - central(generated, 2)),
        "moment3_diff": abs(central(real, 3) - central(generated, 3)),
    }
