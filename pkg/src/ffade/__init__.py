from .engine import Engine, RunSummary, checkpoint, restore, run
from .config import HyperParams, OptimizerConfig, resolve_params

__all__ = [
    "Engine",
    "RunSummary",
    "HyperParams",
    "OptimizerConfig",
    "checkpoint",
    "resolve_params",
    "restore",
    "run",
]
