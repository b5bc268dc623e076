"""Adversarial surrogate training with an energy-distance critic."""

from __future__ import annotations

import numpy as np

from ..engine import AdamState, Tensor, adam_update, concat, const, grad, no_grad, sqrt, square


class SurrogateTrainingError(RuntimeError):
    """Training produced a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, message, snapshot):
        super().__init__(message)
        self.snapshot = snapshot


def _rownorm(t):
    # small floor keeps sqrt differentiable at coincident points
    return sqrt(square(t).sum(axis=1) + 1e-12)


def _adam_step(net, loss, state):
    params = net.parameters()
    names = list(params)
    gs = grad(loss, [params[n] for n in names])
    updated, _ = adam_update(
        {n: params[n].data for n in names},
        {n: g.data for n, g in zip(names, gs)},
        state,
    )
    for n in names:
        params[n].data = updated[n]


def train_cramer_gan(nets, y, x, p, config, rng):
    """Train generator/critic on standardized records (float32 arrays).

    Per step: two independent generator batches at the real conditions, an
    energy-distance generator loss, and a critic maximizing the witness
    f(v) = ||h(v) - h(g2)|| - ||h(v)|| with a unit-norm gradient penalty on
    an interpolate between real and generated samples. The four critic
    applications per step run as one stacked batch.
    """
    gen, critic = nets["generator"], nets["critic"]
    m = y.shape[0]
    cond_all = np.concatenate([x, p], axis=1)
    dz = config.noise_dim
    g_state = AdamState(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2)
    c_state = AdamState(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2)

    def fail(message, epoch, step):
        raise SurrogateTrainingError(message, {"epoch": epoch, "step": step, **last})

    last = {"critic_loss": None, "gen_loss": None}
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(m)
        for start in range(0, m, config.batch_size):
            idx = order[start : start + config.batch_size]
            b = idx.size
            y_b = y[idx]
            cond_b = cond_all[idx]
            cond2 = np.concatenate([cond_b, cond_b])

            for _ in range(config.n_critic):
                z = rng.standard_normal((2 * b, dz), dtype=np.float32)
                with no_grad():
                    fakes = gen(concat([const(z), const(cond2)], axis=1)).data
                g1, g2 = fakes[:b], fakes[b:]
                u = rng.random((b, 1), dtype=np.float32)
                v_hat = Tensor(u * y_b + (1.0 - u) * g1, requires_grad=True)

                # y, g1, g2 go through the critic as one constant-input batch;
                # v_hat gets its own pass so the penalty's double backward
                # stays on a b-row graph
                h3 = critic(concat([const(np.concatenate([y_b, g1, g2])), const(np.concatenate([cond2, cond_b]))], axis=1))
                h_y, h_g1, h_g2 = h3[0:b], h3[b : 2 * b], h3[2 * b : 3 * b]
                h_v = critic(concat([v_hat, const(cond_b)], axis=1))
                f_y = _rownorm(h_y - h_g2) - _rownorm(h_y)
                f_g1 = _rownorm(h_g1 - h_g2) - _rownorm(h_g1)
                f_v = _rownorm(h_v - h_g2) - _rownorm(h_v)

                gv = grad(f_v.sum(), [v_hat], create_graph=True)[0]
                penalty = square(_rownorm(gv) - 1.0).mean()
                critic_loss = f_g1.mean() - f_y.mean() + config.gp_weight * penalty
                if not np.isfinite(critic_loss.data):
                    fail("non-finite critic loss", epoch, step)
                _adam_step(critic, critic_loss, c_state)
                last["critic_loss"] = float(critic_loss.data)

            z = rng.standard_normal((2 * b, dz), dtype=np.float32)
            fakes = gen(concat([const(z), const(cond2)], axis=1))
            with no_grad():
                h_y = critic(concat([const(y_b), const(cond_b)], axis=1)).data
            h_fake = critic(concat([fakes, const(cond2)], axis=1))
            h_g1, h_g2 = h_fake[0:b], h_fake[b : 2 * b]
            h_y_c = const(h_y)
            gen_loss = (_rownorm(h_y_c - h_g1) + _rownorm(h_y_c - h_g2) - _rownorm(h_g1 - h_g2)).mean()
            if not np.isfinite(gen_loss.data):
                fail("non-finite generator loss", epoch, step)
            _adam_step(gen, gen_loss, g_state)
            last["gen_loss"] = float(gen_loss.data)
            step += 1

    return {"steps": step, **last}
