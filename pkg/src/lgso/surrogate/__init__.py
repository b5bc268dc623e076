from .config import SurrogateConfig
from .cramer import SurrogateTrainingError
from .gradient import GradEstimate, surrogate_grad, surrogate_sample
from .model import Standardizer, SurrogateModel
from .monitor import MONITOR_KEYS, monitor_stats
from .train import train_surrogate

__all__ = [
    "SurrogateConfig",
    "SurrogateTrainingError",
    "GradEstimate",
    "surrogate_grad",
    "surrogate_sample",
    "Standardizer",
    "SurrogateModel",
    "MONITOR_KEYS",
    "monitor_stats",
    "train_surrogate",
]
