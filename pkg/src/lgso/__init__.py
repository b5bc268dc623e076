"""Local generative surrogate optimization of stochastic black-box simulators."""

__version__ = "0.1.0"
