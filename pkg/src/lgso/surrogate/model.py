"""Trained surrogate container: standardization, sampling, snapshots."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..engine import MLP, ShapeError, Tensor, concat, const, exp, no_grad, tanh
from .config import SurrogateConfig

GEN_ACTIVATIONS = ["tanh", "tanh", "leaky_relu", "identity"]
CRITIC_ACTIVATIONS = ["tanh", "leaky_relu", "identity"]
COND_ACTIVATIONS = ["tanh", "tanh", "identity"]

SNAPSHOT_FORMAT = "lgso-surrogate"
SNAPSHOT_VERSION = 1


@dataclass
class Standardizer:
    """Affine maps taking psi and x into [-1, 1] over the training box and
    y to zero mean, unit variance. Constant dimensions map to zero."""

    psi_center: np.ndarray
    psi_half: np.ndarray
    x_center: np.ndarray
    x_half: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    @classmethod
    def from_records(cls, psis, xs, ys):
        def box(arr):
            lo, hi = arr.min(axis=0), arr.max(axis=0)
            half = (hi - lo) / 2.0
            half[half == 0.0] = 1.0
            return (hi + lo) / 2.0, half

        pc, ph = box(psis)
        xc, xh = box(xs)
        ym = ys.mean(axis=0)
        ystd = ys.std(axis=0)
        ystd[ystd == 0.0] = 1.0
        return cls(pc, ph, xc, xh, ym, ystd)

    def psi_np(self, psi):
        return (psi - self.psi_center) / self.psi_half

    def x_np(self, x):
        return (x - self.x_center) / self.x_half

    def y_np(self, y):
        return (y - self.y_mean) / self.y_std

    def y_inv_np(self, y):
        return y * self.y_std + self.y_mean

    def psi_t(self, psi):
        return (psi - const(self.psi_center)) / const(self.psi_half)

    def y_inv_t(self, y):
        return y * const(self.y_std) + const(self.y_mean)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("psi_center", "psi_half", "x_center", "x_half", "y_mean", "y_std")}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: np.asarray(v, dtype=float) for k, v in d.items()})


def flow_masks(y_dim, n_layers):
    """Passthrough masks, alternating halves; all-transform when y_dim == 1."""
    masks = []
    for i in range(n_layers):
        if y_dim == 1:
            m = np.zeros(1)
        else:
            m = np.array([(d + i) % 2 for d in range(y_dim)], dtype=float)
        masks.append(m.astype(np.float32))
    return masks


def build_nets(config, psi_dim, x_dim, y_dim, rng, dtype=np.float32):
    """Freshly initialized networks for the requested surrogate kind."""
    cond_dim = x_dim + psi_dim
    if config.kind == "cramer_gan":
        gen = MLP([config.noise_dim + cond_dim, *config.gen_hidden, y_dim], GEN_ACTIVATIONS, rng=rng, dtype=dtype)
        critic = MLP([y_dim + cond_dim, *config.critic_hidden, config.critic_out_dim],
                     CRITIC_ACTIVATIONS, rng=rng, dtype=dtype)
        return {"generator": gen, "critic": critic}
    nets = {}
    for i in range(config.flow_layers):
        for role in ("scale", "shift"):
            net = MLP([y_dim + cond_dim, *config.flow_hidden, y_dim], COND_ACTIVATIONS, rng=rng, dtype=dtype)
            # identity-initialized coupling: zero final layer
            net.layers[-1].w.data = np.zeros_like(net.layers[-1].w.data)
            net.layers[-1].b.data = np.zeros_like(net.layers[-1].b.data)
            nets[f"{role}_{i}"] = net
    return nets


class SurrogateModel:
    """A frozen conditional generative surrogate y = S(z, x; psi)."""

    def __init__(self, config, psi_dim, x_dim, y_dim, std, nets, meta=None):
        self.config = config
        self.kind = config.kind
        self.psi_dim = psi_dim
        self.x_dim = x_dim
        self.y_dim = y_dim
        self.noise_dim = config.noise_dim if config.kind == "cramer_gan" else y_dim
        self.std = std
        self.nets = nets
        self.meta = meta or {}
        if config.kind == "coupling_flow":
            self.masks = flow_masks(y_dim, config.flow_layers)

    # -- sampling ------------------------------------------------------------

    def _check_dims(self, z, x):
        if z.ndim != 2 or z.shape[1] != self.noise_dim:
            raise ShapeError(f"z must be (k, {self.noise_dim}), got {z.shape}")
        if x.ndim != 2 or x.shape[1] != self.x_dim:
            raise ShapeError(f"x must be (k, {self.x_dim}), got {x.shape}")
        if z.shape[0] != x.shape[0]:
            raise ShapeError(f"z rows {z.shape[0]} != x rows {x.shape[0]}")

    def _psi_batch(self, psi, k):
        """Standardized psi broadcast to k rows, keeping the graph to psi."""
        if not isinstance(psi, Tensor):
            psi = Tensor(np.asarray(psi, dtype=float))
        if psi.data.size != self.psi_dim:
            raise ShapeError(f"psi must have {self.psi_dim} components, got {psi.data.size}")
        row = self.std.psi_t(psi).reshape((1, self.psi_dim))
        return const(np.ones((k, 1), dtype=row.data.dtype)) @ row

    def sample_t(self, z, x, psi):
        """Differentiable sampling; psi may be a graph leaf."""
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        self._check_dims(z, x)
        k = z.shape[0]
        x_std = const(self.std.x_np(x))
        psi_b = self._psi_batch(psi, k)
        if self.kind == "cramer_gan":
            inp = concat([const(z), x_std, psi_b], axis=1)
            out = self.nets["generator"](inp)
        else:
            out = self._flow_forward(const(z), x_std, psi_b)
        return self.std.y_inv_t(out)

    def sample(self, z, x, psi, rng=None):
        """Plain-array sampling (no graph)."""
        with no_grad():
            return self.sample_t(z, x, psi).data

    def sample_rows(self, z, x, psis):
        """Plain-array sampling with one psi per row (no broadcast, no graph)."""
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        psis = np.asarray(psis, dtype=float)
        self._check_dims(z, x)
        if psis.shape != (z.shape[0], self.psi_dim):
            raise ShapeError(f"psis must be ({z.shape[0]}, {self.psi_dim}), got {psis.shape}")
        with no_grad():
            x_std = const(self.std.x_np(x))
            psi_b = const((psis - self.std.psi_center) / self.std.psi_half)
            if self.kind == "cramer_gan":
                out = self.nets["generator"](concat([const(z), x_std, psi_b], axis=1))
            else:
                out = self._flow_forward(const(z), x_std, psi_b)
            return self.std.y_inv_t(out).data

    def _coupling_terms(self, y, x_std, psi_b, layer_idx):
        mask = self.masks[layer_idx]
        m = const(mask)
        keep = const(1.0 - mask)
        cond = concat([y * m, x_std, psi_b], axis=1)
        cap = self.config.flow_scale_cap
        s = tanh(self.nets[f"scale_{layer_idx}"](cond) * (1.0 / cap)) * cap * keep
        t = self.nets[f"shift_{layer_idx}"](cond) * keep
        return m, keep, s, t

    def _flow_forward(self, y, x_std, psi_b):
        for i in range(self.config.flow_layers):
            m, keep, s, t = self._coupling_terms(y, x_std, psi_b, i)
            y = y * m + (y * exp(s) + t) * keep
        return y

    def flow_forward_logdet(self, y, x_std, psi_b):
        """Forward transform plus log|det dy_out/dy_in| = sum of scale outputs."""
        logdet = None
        for i in range(self.config.flow_layers):
            m, keep, s, t = self._coupling_terms(y, x_std, psi_b, i)
            y = y * m + (y * exp(s) + t) * keep
            contrib = s.sum(axis=1)
            logdet = contrib if logdet is None else logdet + contrib
        return y, logdet

    def flow_inverse_logdet(self, y, x_std, psi_b):
        """Inverse transform plus the sum of scale outputs met on the way."""
        scale_sum = None
        for i in reversed(range(self.config.flow_layers)):
            m, keep, s, t = self._coupling_terms(y, x_std, psi_b, i)
            y = y * m + ((y - t) * exp(-s)) * keep
            contrib = s.sum(axis=1)
            scale_sum = contrib if scale_sum is None else scale_sum + contrib
        return y, scale_sum

    # -- persistence ---------------------------------------------------------

    def save(self, path):
        weights = {
            name: {k: {"shape": list(v.shape), "data": v.reshape(-1).astype(float).tolist()}
                   for k, v in net.state_dict().items()}
            for name, net in self.nets.items()
        }
        doc = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "kind": self.kind,
            "dims": {"psi": self.psi_dim, "x": self.x_dim, "y": self.y_dim},
            "config": {
                "kind": self.config.kind,
                "noise_dim": self.config.noise_dim,
                "gen_hidden": list(self.config.gen_hidden),
                "critic_hidden": list(self.config.critic_hidden),
                "critic_out_dim": self.config.critic_out_dim,
                "learning_rate": self.config.learning_rate,
                "batch_size": self.config.batch_size,
                "epochs": self.config.epochs,
                "n_critic": self.config.n_critic,
                "gp_weight": self.config.gp_weight,
                "beta1": self.config.beta1,
                "beta2": self.config.beta2,
                "flow_layers": self.config.flow_layers,
                "flow_hidden": list(self.config.flow_hidden),
                "flow_scale_cap": self.config.flow_scale_cap,
            },
            "standardizer": self.std.to_dict(),
            "meta": self.meta,
            "weights": weights,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"{path} is not a surrogate snapshot")
        if doc.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {doc.get('version')}")
        config = SurrogateConfig(**doc["config"])
        dims = doc["dims"]
        nets = build_nets(config, dims["psi"], dims["x"], dims["y"], np.random.default_rng(0))
        for name, net in nets.items():
            stored = doc["weights"][name]
            net.load_state_dict({
                k: np.asarray(v["data"], dtype=np.float32).reshape(v["shape"]) for k, v in stored.items()
            })
        std = Standardizer.from_dict(doc["standardizer"])
        return cls(config, dims["psi"], dims["x"], dims["y"], std, nets, meta=doc.get("meta", {}))
