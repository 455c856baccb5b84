from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ffade import settings
from ffade.errors import ConfigError

log = logging.getLogger("ffade.config")

_UNBOUNDED = {"inf", "infinity", "none", "unbounded", "∞"}


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=settings.DEFAULT_EPOCHS, ge=1)
    # passes of the global fit at t_setup; None reuses `epochs`
    setup_epochs: int | None = Field(default=None, ge=1)
    step_size: float = Field(default=settings.DEFAULT_STEP_SIZE, gt=0)
    batch_pos: int = Field(default=settings.DEFAULT_BATCH_POS, ge=1)
    batch_outside: int = Field(default=settings.DEFAULT_BATCH_OUTSIDE, ge=0)
    neg_per_node: int = Field(default=settings.DEFAULT_NEG_PER_NODE, ge=0)
    clip_norm: float | None = Field(default=settings.DEFAULT_CLIP_NORM, gt=0)

    def epochs_for(self, mode: str) -> int:
        if mode == "global" and self.setup_epochs is not None:
            return self.setup_epochs
        return self.epochs


class HyperParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_setup: int = Field(ge=1)
    w_upd: int = Field(default=settings.DEFAULT_W_UPD, ge=1)
    alpha: float = Field(default=settings.DEFAULT_ALPHA, ge=0.0, lt=1.0)
    # None means unbounded (M = inf)
    mem_limit: int | None = Field(default=settings.DEFAULT_MEM_LIMIT, ge=1)
    dim: int = Field(default=settings.DEFAULT_DIM, ge=1)
    f_th_init: float = Field(default=settings.DEFAULT_F_TH, ge=0.0)
    undirected: bool = False
    group_channels: bool = True
    seed: int = 0
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)

    @field_validator("mem_limit", mode="before")
    @classmethod
    def _parse_mem_limit(cls, v: Any) -> Any:
        if v is None:
            return None
        if isinstance(v, str) and v.strip().lower() in _UNBOUNDED:
            return None
        if isinstance(v, float) and math.isinf(v):
            return None
        return v

    @field_validator("f_th_init")
    @classmethod
    def _finite_f_th(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("f_th_init must be finite")
        return v

    def header_items(self) -> list[tuple[str, str]]:
        """Flat key/value view used for output headers and config files."""
        items: list[tuple[str, str]] = []
        for k, v in self.model_dump(exclude={"optimizer"}).items():
            if k == "mem_limit" and v is None:
                v = "inf"
            items.append((k, _fmt(v)))
        for k, v in self.optimizer.model_dump().items():
            items.append((k, _fmt(v)))
        return items


def _fmt(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# Hyper-parameter rows from the reference experiments; f_th in events per time unit.
PRESETS: dict[str, dict[str, Any]] = {
    "darpa": {"alpha": 0.999, "mem_limit": 200, "dim": 100, "f_th_init": 16.7e-3, "w_upd": 60},
    "enron": {
        "alpha": 0.999,
        "mem_limit": None,
        "dim": 100,
        "f_th_init": 0.0,
        "w_upd": 10080,
        "t_setup": 692000,
    },
    "dblp": {
        "alpha": 0.999,
        "mem_limit": None,
        "dim": 100,
        "f_th_init": 0.0,
        "w_upd": 1,
        "t_setup": 10,
        "undirected": True,
    },
    "barra1": {"alpha": 0.999, "mem_limit": 100, "dim": 200, "f_th_init": 2.6e-3, "w_upd": 10080},
    "barra2": {"alpha": 0.999, "mem_limit": 400, "dim": 200, "f_th_init": 0.93e-3, "w_upd": 10080},
    "barra3": {"alpha": 0.999, "mem_limit": 400, "dim": 200, "f_th_init": 1.2e-3, "w_upd": 10080},
    "barra4": {"alpha": 0.999, "mem_limit": 400, "dim": 200, "f_th_init": 1.1e-3, "w_upd": 10080},
    "rtm-s": {"alpha": 0.999, "mem_limit": 500, "dim": 50, "f_th_init": 0.77e-3, "w_upd": 10},
    "rtm-w": {"alpha": 0.999, "mem_limit": 500, "dim": 50, "f_th_init": 3.13e-3, "w_upd": 10},
}

_OPTIMIZER_KEYS = frozenset(OptimizerConfig.model_fields)
_PARAM_KEYS = frozenset(HyperParams.model_fields) - {"optimizer"}


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read a `key = value` file; keys are HyperParams / OptimizerConfig field names."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    raw = dotenv_values(p)
    out: dict[str, str] = {}
    for k, v in raw.items():
        key = k.strip().lower().replace("-", "_")
        if key not in _PARAM_KEYS and key not in _OPTIMIZER_KEYS:
            raise ConfigError(f"{p}: unknown config key {k!r}")
        if v is None:
            raise ConfigError(f"{p}: key {k!r} has no value")
        out[key] = v
    return out


def _apply(layer: dict[str, Any], params: dict[str, Any], optimizer: dict[str, Any]) -> None:
    for k, v in layer.items():
        if k in _OPTIMIZER_KEYS:
            optimizer[k] = v
        elif k in _PARAM_KEYS:
            params[k] = v
        else:
            raise ConfigError(f"unknown parameter {k!r}")


def resolve_params(
    *,
    preset: str | None = None,
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    t_setup: int | None = None,
) -> HyperParams:
    """Merge defaults < preset < config file < overrides into HyperParams.

    `t_setup` is a fallback used only when no layer sets it (the CLI derives
    it from the input's time span). Override values of None are ignored.
    """
    params: dict[str, Any] = {"seed": settings.default_seed()}
    optimizer: dict[str, Any] = {}

    if preset:
        key = preset.strip().lower()
        if key not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (known: {', '.join(sorted(PRESETS))})")
        _apply(PRESETS[key], params, optimizer)

    if config_path is not None:
        _apply(load_config_file(config_path), params, optimizer)

    if overrides:
        _apply({k: v for k, v in overrides.items() if v is not None}, params, optimizer)

    if "t_setup" not in params:
        if t_setup is None:
            raise ConfigError("t_setup is required (flag, config file or preset)")
        params["t_setup"] = t_setup

    hp = HyperParams(**params, optimizer=OptimizerConfig(**optimizer))
    log.debug("resolved params: %s", " ".join(f"{k}={v}" for k, v in hp.header_items()))
    return hp


def suggest_params(t_setup: int, alpha: float = settings.DEFAULT_ALPHA) -> dict[str, Any]:
    """Rule-of-thumb starting point: f_th ~ (1-alpha)*alpha^t_setup, M ~ log(0.01)/log(alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if t_setup < 1:
        raise ValueError(f"t_setup must be >= 1, got {t_setup}")
    horizon = math.log(0.01) / math.log(alpha)
    return {
        "alpha": alpha,
        "t_setup": t_setup,
        "f_th_init": (1.0 - alpha) * alpha**t_setup,
        "mem_limit": max(1, int(min(horizon, t_setup))),
    }
