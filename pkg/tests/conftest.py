from collections.abc import Callable

import numpy as np
import pytest

from ffade.config import HyperParams, OptimizerConfig
from ffade.models import InteractionType, Tick


def T(s: str, d: str) -> InteractionType:
    return InteractionType(s, d)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def make_params() -> Callable[..., HyperParams]:
    """Small, fast HyperParams; keyword overrides go to HyperParams or OptimizerConfig."""

    def _make(**kw) -> HyperParams:
        opt_keys = set(OptimizerConfig.model_fields)
        opt = {"epochs": 2, "step_size": 0.01, "neg_per_node": 2}
        opt.update({k: kw.pop(k) for k in list(kw) if k in opt_keys})
        base = {"t_setup": 10, "w_upd": 5, "alpha": 0.9, "mem_limit": None, "dim": 4, "f_th_init": 0.01, "seed": 7}
        base.update(kw)
        return HyperParams(**base, optimizer=OptimizerConfig(**opt))

    return _make


@pytest.fixture
def make_tick() -> Callable[..., Tick]:
    def _make(time: int, *pairs: tuple[str, str, int]) -> Tick:
        return Tick(time, {T(s, d): w for s, d, w in pairs})

    return _make
