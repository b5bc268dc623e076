"""Latin hypercube neighborhood sampling and the simulation history store."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NeighborhoodSpec", "lhs_sample", "History"]


@dataclass(frozen=True)
class NeighborhoodSpec:
    """L-infinity box of half-width epsilon around center, with a point count."""

    center: np.ndarray
    epsilon: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not np.all(np.isfinite(self.center)):
            raise ValueError("neighborhood center must be finite")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


def lhs_sample(spec, rng):
    """N points in the box, one per equal-width stratum in every dimension.

    Strata are coupled across dimensions by an independent random
    permutation per dimension.
    """
    n, d = spec.count, spec.center.size
    u = rng.random((n, d))
    pos = (np.arange(n)[:, None] + u) / n  # one point per stratum, in [0, 1)
    for j in range(d):
        pos[:, j] = pos[rng.permutation(n), j]
    return spec.center + spec.epsilon * (2.0 * pos - 1.0)


class History:
    """Append-only store of (psi, x, y, iteration) simulation records.

    Records arrive in groups sharing one psi (the M x-draws of a single
    sampled parameter point); storing psi once per group keeps 100-D
    histories small. Queries return flat per-record arrays.
    """

    def __init__(self, psi_dim, x_dim, y_dim):
        self.psi_dim = psi_dim
        self.x_dim = x_dim
        self.y_dim = y_dim
        self._groups = []  # (psi (D,), xs (m, x_dim), ys (m, y_dim), iteration)

    def __len__(self):
        return sum(g[1].shape[0] for g in self._groups)

    def append_group(self, psi, xs, ys, iteration):
        psi = np.asarray(psi, dtype=float).reshape(-1)
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if psi.size != self.psi_dim:
            raise ValueError(f"psi has {psi.size} components, history expects {self.psi_dim}")
        if xs.shape[1] != self.x_dim or ys.shape[1] != self.y_dim:
            raise ValueError(
                f"record shape mismatch: x {xs.shape} vs dim {self.x_dim}, y {ys.shape} vs dim {self.y_dim}"
            )
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(f"{xs.shape[0]} inputs but {ys.shape[0]} outcomes")
        if xs.shape[0] == 0:
            return
        self._groups.append((psi.copy(), xs.copy(), ys.copy(), int(iteration)))

    def append(self, psis, xs, ys, iteration):
        """Record-level append; consecutive rows with equal psi share a group."""
        psis = np.atleast_2d(np.asarray(psis, dtype=float))
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if not (psis.shape[0] == xs.shape[0] == ys.shape[0]):
            raise ValueError("psis, xs, ys must have equal record counts")
        start = 0
        for i in range(1, psis.shape[0] + 1):
            if i == psis.shape[0] or not np.array_equal(psis[i], psis[start]):
                self.append_group(psis[start], xs[start:i], ys[start:i], iteration)
                start = i

    def query_ball(self, center, epsilon):
        """All records with componentwise |psi - center| <= epsilon.

        Returns (psis, xs, ys, iterations) as flat per-record arrays;
        includes matches from every past iteration.
        """
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        center = np.asarray(center, dtype=float).reshape(-1)
        psis, xs, ys, its = [], [], [], []
        for psi, gx, gy, it in self._groups:
            if np.max(np.abs(psi - center)) <= epsilon:
                m = gx.shape[0]
                psis.append(np.broadcast_to(psi, (m, psi.size)))
                xs.append(gx)
                ys.append(gy)
                its.append(np.full(m, it, dtype=int))
        if not psis:
            empty = lambda d: np.empty((0, d))
            return empty(self.psi_dim), empty(self.x_dim), empty(self.y_dim), np.empty(0, dtype=int)
        return np.concatenate(psis), np.concatenate(xs), np.concatenate(ys), np.concatenate(its)

    # -- flat-file round trip ------------------------------------------------

    def export_records(self, path):
        """One record per line: iteration, psi, x, y components."""
        with open(path, "w") as fh:
            cols = (
                ["iteration"]
                + [f"psi_{i}" for i in range(self.psi_dim)]
                + [f"x_{i}" for i in range(self.x_dim)]
                + [f"y_{i}" for i in range(self.y_dim)]
            )
            fh.write("\t".join(cols) + "\n")
            for psi, gx, gy, it in self._groups:
                psi_txt = "\t".join(f"{v:.17g}" for v in psi)
                for j in range(gx.shape[0]):
                    row = [str(it), psi_txt]
                    row += [f"{v:.17g}" for v in gx[j]]
                    row += [f"{v:.17g}" for v in gy[j]]
                    fh.write("\t".join(row) + "\n")

    @classmethod
    def import_records(cls, path, psi_dim, x_dim, y_dim):
        hist = cls(psi_dim, x_dim, y_dim)
        with open(path) as fh:
            header = fh.readline()
            expected_cols = 1 + psi_dim + x_dim + y_dim
            if len(header.rstrip("\n").split("\t")) != expected_cols:
                raise ValueError(f"{path}: header has wrong column count for dims ({psi_dim}, {x_dim}, {y_dim})")
            psis, xs, ys = [], [], []
            current_it = None
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                if len(parts) != expected_cols:
                    raise ValueError(f"{path}: record with {len(parts)} fields, expected {expected_cols}")
                it = int(parts[0])
                vals = [float(v) for v in parts[1:]]
                if current_it is not None and it != current_it:
                    hist.append(np.array(psis), np.array(xs), np.array(ys), current_it)
                    psis, xs, ys = [], [], []
                current_it = it
                psis.append(vals[:psi_dim])
                xs.append(vals[psi_dim : psi_dim + x_dim])
                ys.append(vals[psi_dim + x_dim :])
            if psis:
                hist.append(np.array(psis), np.array(xs), np.array(ys), current_it)
        return hist
