from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ffade.factorizer import EmbeddingTable, MixMatrix, intensity
from ffade.models import CHANNELS, InteractionType, ScoreRecord, Tick
from ffade.skeleton import SkeletonMap


@dataclass
class LastSeenIndex:
    """Last event time per type, per source (any out-edge) and per destination (any in-edge)."""

    per_type: dict[InteractionType, int] = field(default_factory=dict)
    per_source_out: dict[str, int] = field(default_factory=dict)
    per_dest_in: dict[str, int] = field(default_factory=dict)

    def refresh(self, tick: Tick) -> None:
        for t in tick.typed_counts:
            self.per_type[t] = tick.time
            self.per_source_out[t.source] = tick.time
            self.per_dest_in[t.destination] = tick.time

    def prune(self, skeleton: SkeletonMap, tick: Tick) -> None:
        """Drop types no longer tracked and nodes outside V(F) and the current tick."""
        self.per_type = {t: v for t, v in self.per_type.items() if t in skeleton}
        keep = skeleton.node_set()
        for t in tick.typed_counts:
            keep.add(t.source)
            keep.add(t.destination)
        self.per_source_out = {v: x for v, x in self.per_source_out.items() if v in keep}
        self.per_dest_in = {v: x for v, x in self.per_dest_in.items() if v in keep}

    def __len__(self) -> int:
        return len(self.per_type)


def observed_freqs(t: int, t_prev: int | None, w: int, f_th: float) -> list[float]:
    """Per-copy observed frequencies of `w` simultaneous events at time t.

    The first copy sees the gap to the previous event, shrunk as if the w copies
    were spread evenly over the last time slot; the remaining copies arrive 1/w
    apart.
    """
    if w < 1:
        raise ValueError(f"weight must be >= 1, got {w}")
    if t_prev is not None and t_prev >= t:
        raise ValueError(f"previous time {t_prev} is not before {t}")
    if w == 1:
        return [1.0 / (t - t_prev) if t_prev is not None else f_th]
    first = 1.0 / (t - t_prev - 1 + 1.0 / w) if t_prev is not None else f_th
    return [first] + [float(w)] * (w - 1)


def anomaly_score(f_obs: float, lam: float) -> float:
    if f_obs < 0:
        raise ValueError(f"observed frequency must be >= 0, got {f_obs}")
    if lam <= 0:
        return math.inf
    return f_obs / lam


def _lambda(s: str, d: str, emb: EmbeddingTable, q: MixMatrix | np.ndarray, f_th: float) -> float:
    hs = emb.get(s)
    hd = emb.get(d)
    if hs is None or hd is None:
        return f_th
    return intensity(hs, hd, q)


def pair_score(
    f_obs: float, s: str, d: str, emb: EmbeddingTable, q: MixMatrix | np.ndarray, f_th: float
) -> float:
    return anomaly_score(f_obs, _lambda(s, d, emb, q, f_th))


def group_score(
    f_obs: float,
    group: Iterable[InteractionType],
    emb: EmbeddingTable,
    q: MixMatrix | np.ndarray,
    f_th: float,
) -> float:
    members = list(group)
    if not members:
        raise ValueError("group must not be empty")
    return anomaly_score(f_obs, sum(_lambda(s, d, emb, q, f_th) for s, d in members))


def _pick(scores: Sequence[float]) -> tuple[float, str]:
    # strict > keeps the earlier channel on ties
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return scores[best], CHANNELS[best]


def _group_copies(
    t: InteractionType,
    members: Sequence[InteractionType],
    counts: dict[InteractionType, int],
    t_prev: int | None,
    time: int,
    f_th: float,
) -> list[float]:
    """Observed frequencies of t's copies inside a multi-member simultaneous group."""
    total = sum(counts[m] for m in members)
    freqs = observed_freqs(time, t_prev, total, f_th)
    offset = 0
    for m in members:
        if m == t:
            break
        offset += counts[m]
    return freqs[offset : offset + counts[t]]


def detect_tick(
    tick: Tick,
    idx: LastSeenIndex,
    emb: EmbeddingTable,
    q: MixMatrix | np.ndarray,
    f_th: float,
    t_setup: int,
    group_channels: bool = True,
) -> list[ScoreRecord]:
    """Score every event copy of `tick` against the state before the tick.

    Three channels per copy: the pair itself, all simultaneous edges leaving the
    same source, and all simultaneous edges entering the same destination. The
    reported score is the largest. `idx` must describe the stream strictly
    before this tick (its per-type times mirror the skeleton). No argument is
    mutated.
    """
    if tick.time <= t_setup:
        return []

    counts = tick.typed_counts
    types = sorted(counts)
    by_src: dict[str, list[InteractionType]] = {}
    by_dst: dict[str, list[InteractionType]] = {}
    for t in types:
        by_src.setdefault(t.source, []).append(t)
        by_dst.setdefault(t.destination, []).append(t)

    lam_cache: dict[InteractionType, float] = {}

    def lam(m: InteractionType) -> float:
        v = lam_cache.get(m)
        if v is None:
            v = lam_cache[m] = _lambda(m.source, m.destination, emb, q, f_th)
        return v

    records: list[ScoreRecord] = []
    for t in types:
        w = counts[t]
        pair_f = observed_freqs(tick.time, idx.per_type.get(t), w, f_th)
        pair_sc = [anomaly_score(f, lam(t)) for f in pair_f]

        out_sc = pair_sc
        in_sc = pair_sc
        if group_channels:
            out_members = by_src[t.source]
            if len(out_members) > 1:
                fs = _group_copies(t, out_members, counts, idx.per_source_out.get(t.source), tick.time, f_th)
                lam_sum = sum(lam(m) for m in out_members)
                out_sc = [anomaly_score(f, lam_sum) for f in fs]
            in_members = by_dst[t.destination]
            if len(in_members) > 1:
                fs = _group_copies(t, in_members, counts, idx.per_dest_in.get(t.destination), tick.time, f_th)
                lam_sum = sum(lam(m) for m in in_members)
                in_sc = [anomaly_score(f, lam_sum) for f in fs]
        else:
            out_sc = in_sc = [0.0] * w

        labels = tick.copy_labels(t)
        for i in range(w):
            channel_scores = (pair_sc[i], out_sc[i], in_sc[i])
            score, channel = _pick(channel_scores)
            records.append(
                ScoreRecord(
                    time=tick.time,
                    source=t.source,
                    destination=t.destination,
                    score=score,
                    channel=channel,
                    sub_index=i,
                    label=labels[i] if labels is not None else None,
                    channel_scores=channel_scores,
                )
            )
    return records
