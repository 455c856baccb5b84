from .checkpoint import checkpoint, load_checkpoint, restore, save_checkpoint
from .pipeline import Engine, RunSummary, run

__all__ = [
    "Engine",
    "RunSummary",
    "checkpoint",
    "load_checkpoint",
    "restore",
    "run",
    "save_checkpoint",
]
