from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple


class InteractionType(NamedTuple):
    """Ordered (source, destination) pair; tuple order is the canonical order."""

    source: str
    destination: str


@dataclass(frozen=True)
class Edge:
    source: str
    destination: str
    time: int
    weight: int = 1

    @property
    def type(self) -> InteractionType:
        return InteractionType(self.source, self.destination)


@dataclass(frozen=True)
class Tick:
    time: int
    typed_counts: dict[InteractionType, int]
    # per-copy labels, aligned with typed_counts weights; None for unlabeled streams
    labels: dict[InteractionType, tuple[int, ...]] | None = None

    @property
    def total_weight(self) -> int:
        return sum(self.typed_counts.values())

    def copy_labels(self, t: InteractionType) -> tuple[int, ...] | None:
        if self.labels is None:
            return None
        return self.labels.get(t)


CHANNELS = ("pair", "group_out", "group_in")


@dataclass(frozen=True)
class ScoreRecord:
    time: int
    source: str
    destination: str
    score: float
    channel: str
    sub_index: int = 0
    label: int | None = None
    channel_scores: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0), compare=False)

    @property
    def type(self) -> InteractionType:
        return InteractionType(self.source, self.destination)
