from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from ffade.models import ScoreRecord


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: P(anomaly scored above a regular event), ties count 1/2.

    +inf scores rank above every finite score.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.shape[0]} vs {y.shape[0]}")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int(s.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s, method="average")
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auc_summary(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float]:
    """Mean and normal-approximation half-width over repeated runs."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    mean = float(v.mean())
    if v.size == 1:
        return mean, 0.0
    z = float(norm.ppf(0.5 + confidence / 2.0))
    return mean, z * float(v.std(ddof=1)) / math.sqrt(v.size)


def aggregate_events(
    records: Iterable[ScoreRecord | tuple[int, float]], period: int
) -> list[tuple[int, float]]:
    """Max score per `time // period` bucket, ascending; empty buckets are omitted."""
    if period <= 0:
        raise ValueError(f"period must be > 0, got {period}")
    best: dict[int, float] = {}
    for r in records:
        if isinstance(r, ScoreRecord):
            time, score = r.time, r.score
        else:
            time, score = r
        b = int(time) // period
        prev = best.get(b)
        if prev is None or score > prev:
            best[b] = float(score)
    return sorted(best.items())
