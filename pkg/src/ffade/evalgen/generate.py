from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ffade.fileio import atomic_write_lines
from ffade.models import Edge

log = logging.getLogger("ffade.evalgen")


class SyntheticConfig(BaseModel):
    """Community skeleton plus injected anomalies.

    Every ordered in-group pair emits a Poisson process at `base_freq` events
    per tick. Injections land at distinct random ticks after the first
    `inject_after` fraction of the horizon.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_groups: int = Field(default=2, ge=1)
    nodes_per_group: int = Field(default=10, ge=1)
    base_freq: float = Field(default=0.05, gt=0)
    horizon: int = Field(default=5000, ge=1)
    n_injections: int = Field(default=20, ge=0)
    injection_kind: Literal["S", "W"] = "W"
    clique_size: int = Field(default=8, ge=2)
    burst_size: int = Field(default=70, ge=1)
    inject_after: float = Field(default=0.1, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_sizes(self) -> SyntheticConfig:
        total = self.n_groups * self.nodes_per_group
        if self.injection_kind == "S" and self.clique_size > total:
            raise ValueError(f"clique_size={self.clique_size} exceeds node count {total}")
        if self.injection_kind == "W" and total < 2:
            raise ValueError("burst injections need at least 2 nodes")
        first = int(self.inject_after * self.horizon) + 1
        if self.n_injections > self.horizon - first + 1:
            raise ValueError(
                f"n_injections={self.n_injections} exceeds available ticks {self.horizon - first + 1}"
            )
        return self

    @property
    def nodes(self) -> list[str]:
        return [node_name(g, i) for g in range(self.n_groups) for i in range(self.nodes_per_group)]


def node_name(group: int, i: int) -> str:
    return f"g{group}v{i}"


@dataclass(frozen=True)
class LabeledStream:
    edges: tuple[Edge, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.labels):
            raise ValueError(f"{len(self.edges)} edges but {len(self.labels)} labels")

    def copy_labels(self) -> list[int]:
        out: list[int] = []
        for e, y in zip(self.edges, self.labels):
            out.extend([y] * e.weight)
        return out

    @property
    def anomalous_copies(self) -> int:
        return sum(e.weight for e, y in zip(self.edges, self.labels) if y)


def _poisson_times(rng: np.random.Generator, rate: float, horizon: int) -> np.ndarray:
    n = rng.poisson(rate * horizon)
    t = np.ceil(rng.uniform(0.0, horizon, size=n)).astype(np.int64)
    return np.clip(t, 1, horizon)


def _regular_traffic(cfg: SyntheticConfig, rng: np.random.Generator) -> list[Edge]:
    edges: list[Edge] = []
    for g in range(cfg.n_groups):
        members = [node_name(g, i) for i in range(cfg.nodes_per_group)]
        for s in members:
            for d in members:
                if s == d:
                    continue
                for t in _poisson_times(rng, cfg.base_freq, cfg.horizon):
                    edges.append(Edge(s, d, int(t), 1))
    return edges


def generate(cfg: SyntheticConfig) -> LabeledStream:
    rng = np.random.default_rng(cfg.seed)
    nodes = cfg.nodes
    regular = _regular_traffic(cfg, rng)

    first = int(cfg.inject_after * cfg.horizon) + 1
    slots = np.arange(first, cfg.horizon + 1)
    times = np.sort(rng.choice(slots, size=cfg.n_injections, replace=False)) if cfg.n_injections else []

    injected: list[Edge] = []
    for t in times:
        t = int(t)
        if cfg.injection_kind == "W":
            s, d = (nodes[i] for i in rng.choice(len(nodes), size=2, replace=False))
            injected.extend(Edge(s, d, t, 1) for _ in range(cfg.burst_size))
        else:
            members = [nodes[i] for i in sorted(rng.choice(len(nodes), size=cfg.clique_size, replace=False))]
            injected.extend(Edge(s, d, t, 1) for s in members for d in members if s != d)

    tagged = [(e, 0) for e in regular] + [(e, 1) for e in injected]
    tagged.sort(key=lambda p: p[0].time)
    log.info(
        "generate: kind=%s regular=%s injected=%s injections=%s seed=%s",
        cfg.injection_kind, len(regular), len(injected), cfg.n_injections, cfg.seed,
    )
    return LabeledStream(tuple(e for e, _ in tagged), tuple(y for _, y in tagged))


PATTERNS = ("i", "ii", "iii", "iv", "v")


def generate_pattern(
    pattern: str,
    *,
    nodes_per_group: int = 6,
    base_freq: float = 0.05,
    horizon: int = 2000,
    burst_size: int = 20,
    group_contacts: int = 4,
    seed: int = 0,
) -> LabeledStream:
    """Two communities plus an outside node `u` that regularly talks to g0v0.

    At the final tick `u` makes one probe (labeled 1):
      i   u -> g0v0 again, once
      ii  u -> another node of the same community
      iii u -> a node of the other community
      iv  u -> g0v0, `burst_size` times at once
      v   u -> `group_contacts` nodes of the same community at once
    """
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r} (expected one of {', '.join(PATTERNS)})")
    if nodes_per_group < 2 or group_contacts > nodes_per_group - 1:
        raise ValueError("need nodes_per_group >= 2 and group_contacts <= nodes_per_group - 1")

    cfg = SyntheticConfig(
        n_groups=2,
        nodes_per_group=nodes_per_group,
        base_freq=base_freq,
        horizon=horizon - 1,
        n_injections=0,
        seed=seed,
    )
    rng = np.random.default_rng(seed)
    regular = _regular_traffic(cfg, rng)
    regular.extend(Edge("u", node_name(0, 0), int(t), 1) for t in _poisson_times(rng, base_freq, horizon - 1))

    t = horizon
    if pattern == "i":
        probe = [Edge("u", node_name(0, 0), t, 1)]
    elif pattern == "ii":
        probe = [Edge("u", node_name(0, 1), t, 1)]
    elif pattern == "iii":
        probe = [Edge("u", node_name(1, 0), t, 1)]
    elif pattern == "iv":
        probe = [Edge("u", node_name(0, 0), t, 1) for _ in range(burst_size)]
    else:
        probe = [Edge("u", node_name(0, i), t, 1) for i in range(1, group_contacts + 1)]

    regular.sort(key=lambda e: e.time)
    return LabeledStream(tuple(regular + probe), tuple([0] * len(regular) + [1] * len(probe)))


def labels_path(stream_path: str | Path) -> Path:
    return Path(stream_path).with_suffix(".labels")


def write_stream(path: str | Path, stream: LabeledStream, delimiter: str = ",") -> Path:
    """Write edges as `src,dst,t,w` plus a sibling `.labels` file; returns the labels path."""
    lp = labels_path(path)
    if lp == Path(path):
        raise ValueError(f"stream path {path} would collide with its labels file")
    atomic_write_lines(
        path, (delimiter.join((e.source, e.destination, str(e.time), str(e.weight))) for e in stream.edges)
    )
    atomic_write_lines(lp, (str(y) for y in stream.labels))
    return lp
