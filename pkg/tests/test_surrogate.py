"""Surrogate training, sampling, snapshots, and gradient estimation."""

import json

import numpy as np
import pytest

from lgso.engine import ShapeError, const
from lgso.surrogate import (
    SurrogateConfig,
    SurrogateModel,
    SurrogateTrainingError,
    monitor_stats,
    surrogate_grad,
    train_surrogate,
)
from lgso.surrogate.model import Standardizer, build_nets, flow_masks


def linear_records(n, seed, slope=(2.0, 0.5), noise=0.1):
    """y = slope . psi + x + noise, the stock sanity target."""
    rng = np.random.default_rng(seed)
    psis = rng.uniform(-1.0, 1.0, size=(n, 2))
    xs = rng.uniform(0.0, 1.0, size=(n, 1))
    ys = psis @ np.asarray(slope)[:, None] + xs + noise * rng.standard_normal((n, 1))
    return psis, xs, ys


def uniform_x(rng, k):
    return rng.uniform(0.0, 1.0, size=(k, 1))


def mean_objective(y, xs):
    return y.mean()


# -- GAN training ------------------------------------------------------------


def test_gan_learns_constant_target():
    rng = np.random.default_rng(0)
    psis = rng.uniform(-1.0, 1.0, size=(1000, 2))
    xs = rng.uniform(0.0, 1.0, size=(1000, 1))
    ys = np.full((1000, 1), 3.0)
    cfg = SurrogateConfig(epochs=8)
    model = train_surrogate((psis, xs, ys), cfg, np.random.default_rng(1))
    z = np.random.default_rng(2).standard_normal((2000, model.noise_dim))
    out = model.sample(z, uniform_x(np.random.default_rng(3), 2000), np.array([0.2, -0.4]))
    assert abs(out.mean() - 3.0) < 0.05 * (1.0 + 3.0)


def test_gan_gradient_matches_linear_target():
    # y = 2 psi_0 + 0.5 psi_1 + x + eps, so dE[y]/dpsi = (2, 0.5)
    model = train_surrogate(linear_records(4000, 7), SurrogateConfig(), np.random.default_rng(11))
    est = surrogate_grad(model, np.array([0.3, -0.2]), 2048, uniform_x,
                         mean_objective, np.random.default_rng(3))
    assert abs(est.gradient[0] - 2.0) < 0.15
    assert abs(est.gradient[1] - 0.5) < 0.15
    assert est.k == 2048


def test_training_is_reproducible():
    records = linear_records(600, 4)
    cfg = SurrogateConfig(epochs=2)
    a = train_surrogate(records, cfg, np.random.default_rng(5))
    b = train_surrogate(records, cfg, np.random.default_rng(5))
    for name in a.nets:
        for key, arr in a.nets[name].state_dict().items():
            assert np.array_equal(arr, b.nets[name].state_dict()[key]), (name, key)


def test_training_ignores_record_order():
    psis, xs, ys = linear_records(600, 4)
    cfg = SurrogateConfig(epochs=2)
    a = train_surrogate((psis, xs, ys), cfg, np.random.default_rng(5))
    perm = np.random.default_rng(9).permutation(len(psis))
    b = train_surrogate((psis[perm], xs[perm], ys[perm]), cfg, np.random.default_rng(5))
    for name in a.nets:
        for key, arr in a.nets[name].state_dict().items():
            assert np.array_equal(arr, b.nets[name].state_dict()[key]), (name, key)
    assert a.meta["monitor"] == b.meta["monitor"]


def test_nan_records_raise_with_snapshot():
    psis, xs, ys = linear_records(600, 4)
    ys = ys.copy()
    ys[5, 0] = np.nan
    with pytest.raises(SurrogateTrainingError) as err:
        train_surrogate((psis, xs, ys), SurrogateConfig(epochs=1), np.random.default_rng(5))
    assert "epoch" in err.value.snapshot and "step" in err.value.snapshot


def test_empty_records_rejected():
    empty = (np.zeros((0, 2)), np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        train_surrogate(empty, SurrogateConfig(), np.random.default_rng(0))


def test_mismatched_record_counts_rejected():
    psis, xs, ys = linear_records(10, 0)
    with pytest.raises(ValueError):
        train_surrogate((psis, xs[:-1], ys), SurrogateConfig(), np.random.default_rng(0))


# -- coupling flow -----------------------------------------------------------


def flow_model(y_dim, seed, psi_dim=2, x_dim=1, y_mean=5.0, y_std=2.0):
    cfg = SurrogateConfig(kind="coupling_flow")
    nets = build_nets(cfg, psi_dim, x_dim, y_dim, np.random.default_rng(seed))
    std = Standardizer(
        psi_center=np.zeros(psi_dim), psi_half=np.ones(psi_dim),
        x_center=np.zeros(x_dim), x_half=np.ones(x_dim),
        y_mean=np.full(y_dim, y_mean), y_std=np.full(y_dim, y_std),
    )
    return SurrogateModel(cfg, psi_dim, x_dim, y_dim, std, nets)


def test_flow_masks_shape():
    assert [m.tolist() for m in flow_masks(1, 2)] == [[0.0], [0.0]]
    assert flow_masks(3, 2)[0].tolist() == [0.0, 1.0, 0.0]
    assert flow_masks(3, 2)[1].tolist() == [1.0, 0.0, 1.0]


def test_flow_identity_at_init():
    # zero-initialized conditioners make every coupling the identity
    model = flow_model(y_dim=1, seed=0)
    z = np.random.default_rng(1).standard_normal((16, 1))
    x = np.random.default_rng(2).uniform(size=(16, 1))
    out = model.sample(z, x, np.array([0.3, -0.7]))
    assert np.allclose(out, z * 2.0 + 5.0, atol=1e-12)


def test_flow_inverse_roundtrip_and_logdet():
    model = flow_model(y_dim=2, seed=3)
    # non-trivial couplings: overwrite the zeroed final layers
    rng = np.random.default_rng(4)
    for name, net in model.nets.items():
        net.layers[-1].w.data = 0.5 * rng.standard_normal(net.layers[-1].w.data.shape).astype(np.float32)
        net.layers[-1].b.data = 0.1 * rng.standard_normal(net.layers[-1].b.data.shape).astype(np.float32)
    z = rng.standard_normal((16, 2))
    x_std = const(rng.uniform(size=(16, 1)))
    psi_b = const(np.tile([0.2, -0.3], (16, 1)))
    y, logdet = model.flow_forward_logdet(const(z), x_std, psi_b)
    z_back, scale_sum = model.flow_inverse_logdet(y, x_std, psi_b)
    assert np.max(np.abs(z_back.data - z)) < 1e-9
    assert np.allclose(logdet.data, scale_sum.data, rtol=1e-9)


def test_flow_training_fits_conditional_gaussian():
    # y = psi_0 + 0.3 eps: the flow must reproduce mean and spread
    rng = np.random.default_rng(6)
    psis = rng.uniform(-1.0, 1.0, size=(2000, 2))
    xs = rng.uniform(0.0, 1.0, size=(2000, 1))
    ys = psis[:, :1] + 0.3 * rng.standard_normal((2000, 1))
    cfg = SurrogateConfig(kind="coupling_flow", epochs=20)
    model = train_surrogate((psis, xs, ys), cfg, np.random.default_rng(7))
    z = np.random.default_rng(8).standard_normal((4000, model.noise_dim))
    out = model.sample(z, uniform_x(np.random.default_rng(9), 4000), np.array([0.5, 0.0]))
    assert abs(out.mean() - 0.5) < 0.1
    assert abs(out.std() - 0.3) < 0.15


# -- sampling and dim checks -------------------------------------------------


def test_sample_rejects_bad_shapes():
    model = flow_model(y_dim=1, seed=0)
    z = np.zeros((4, 1))
    x = np.zeros((4, 1))
    with pytest.raises(ShapeError):
        model.sample(np.zeros((4, 2)), x, np.zeros(2))
    with pytest.raises(ShapeError):
        model.sample(z, np.zeros((4, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        model.sample(z, np.zeros((5, 1)), np.zeros(2))
    with pytest.raises(ShapeError):
        model.sample(z, x, np.zeros(3))


# -- snapshots ---------------------------------------------------------------


def test_snapshot_roundtrip(tmp_path):
    model = train_surrogate(linear_records(300, 2), SurrogateConfig(epochs=1),
                            np.random.default_rng(3))
    path = tmp_path / "surrogate.json"
    model.save(path)
    clone = SurrogateModel.load(path)
    z = np.random.default_rng(0).standard_normal((64, model.noise_dim))
    x = uniform_x(np.random.default_rng(1), 64)
    psi = np.array([0.1, 0.9])
    assert np.array_equal(model.sample(z, x, psi), clone.sample(z, x, psi))


def test_snapshot_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ValueError):
        SurrogateModel.load(path)


# -- gradient estimation -----------------------------------------------------


def test_surrogate_grad_matches_finite_differences():
    model = train_surrogate(linear_records(1000, 7), SurrogateConfig(epochs=3),
                            np.random.default_rng(11))
    psi = np.array([0.3, -0.2])

    def seeded_objective(p):
        # same seed gives the same z and x draws, so this is a smooth
        # deterministic function of psi
        return surrogate_grad(model, p, 512, uniform_x, mean_objective,
                              np.random.default_rng(5)).objective

    est = surrogate_grad(model, psi, 512, uniform_x, mean_objective,
                         np.random.default_rng(5))
    h = 1e-4
    for i in range(psi.size):
        hi, lo = psi.copy(), psi.copy()
        hi[i] += h
        lo[i] -= h
        fd = (seeded_objective(hi) - seeded_objective(lo)) / (2.0 * h)
        denom = max(abs(fd), abs(est.gradient[i]), 1e-8)
        assert abs(est.gradient[i] - fd) / denom < 1e-3


def test_surrogate_grad_variance_shrinks_with_k():
    model = train_surrogate(linear_records(1000, 7), SurrogateConfig(epochs=3),
                            np.random.default_rng(11))
    psi = np.array([0.3, -0.2])

    def spread(k, base_seed):
        g0 = [surrogate_grad(model, psi, k, uniform_x, mean_objective,
                             np.random.default_rng(base_seed + r)).gradient[0]
              for r in range(16)]
        return np.std(g0)

    ratio = spread(64, 100) / spread(1024, 200)
    # expect sqrt(1024 / 64) = 4
    assert 2.0 < ratio < 8.0


def test_surrogate_grad_rejects_bad_k():
    model = flow_model(y_dim=1, seed=0)
    with pytest.raises(ValueError):
        surrogate_grad(model, np.zeros(2), 0, uniform_x, mean_objective,
                       np.random.default_rng(0))


def test_surrogate_grad_flags_nonfinite():
    model = flow_model(y_dim=1, seed=0)
    model.nets["shift_0"].layers[0].w.data[0, 0] = np.nan
    with pytest.raises(FloatingPointError, match="non-finite surrogate gradient"):
        surrogate_grad(model, np.zeros(2), 8, uniform_x, mean_objective,
                       np.random.default_rng(0))


# -- distribution monitor ----------------------------------------------------


def test_monitor_identical_batches_report_zero():
    y = np.random.default_rng(0).standard_normal((500, 1))
    stats = monitor_stats(y, y.copy())
    assert all(v == 0.0 for v in stats.values())


def test_monitor_detects_mean_shift():
    y = 0.01 * np.random.default_rng(0).standard_normal((500, 1))
    stats = monitor_stats(y, y + 1.0)
    assert stats["moment1_diff"] == pytest.approx(1.0, rel=1e-9)
    assert stats["ks_statistic"] == 1.0
    assert stats["js_divergence"] == pytest.approx(np.log(2.0), rel=1e-6)


def test_monitor_close_distributions_score_low():
    rng = np.random.default_rng(1)
    stats = monitor_stats(rng.standard_normal((10000, 1)), rng.standard_normal((10000, 1)))
    assert stats["ks_statistic"] < 0.03
    assert stats["js_divergence"] < 0.02


def test_monitor_rejects_empty():
    with pytest.raises(ValueError):
        monitor_stats(np.zeros((0, 1)), np.zeros((3, 1)))
