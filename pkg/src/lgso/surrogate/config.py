"""Surrogate hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SurrogateConfig:
    """Training settings for the conditional generative surrogate.

    The adversarial defaults (architecture, lr 8e-4, batch 512, 15 epochs,
    n_critic=1, penalty weight 10, betas (0.5, 0.999)) are fixed by the
    experiment setup this reproduces; change them knowingly.
    """

    kind: str = "cramer_gan"
    noise_dim: int = 10
    gen_hidden: tuple = (100, 100, 100)
    critic_hidden: tuple = (100, 100)
    critic_out_dim: int = 256
    learning_rate: float = 8e-4
    batch_size: int = 512
    epochs: int = 15
    n_critic: int = 1
    gp_weight: float = 10.0
    beta1: float = 0.5
    beta2: float = 0.999
    flow_layers: int = 4
    flow_hidden: tuple = (100, 100)
    flow_scale_cap: float = 3.0

    def __post_init__(self):
        if self.kind not in ("cramer_gan", "coupling_flow"):
            raise ValueError(f"unknown surrogate kind {self.kind!r}")
        positive = {
            "noise_dim": self.noise_dim,
            "critic_out_dim": self.critic_out_dim,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "n_critic": self.n_critic,
            "gp_weight": self.gp_weight,
            "flow_layers": self.flow_layers,
            "flow_scale_cap": self.flow_scale_cap,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ValueError("Adam betas must lie in (0, 1)")
        self.gen_hidden = tuple(self.gen_hidden)
        self.critic_hidden = tuple(self.critic_hidden)
        self.flow_hidden = tuple(self.flow_hidden)
