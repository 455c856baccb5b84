from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ffade import settings
from ffade.config import HyperParams
from ffade.engine import Engine, RunSummary
from ffade.evalgen.generate import LabeledStream
from ffade.evalgen.metrics import auc
from ffade.models import Edge, ScoreRecord
from ffade.stream import coalesce_into_ticks

log = logging.getLogger("ffade.evalgen")


def setup_time(edges: Sequence[Edge], fraction: float = settings.SETUP_FRACTION) -> int:
    """Absolute t_setup covering the first `fraction` of the stream's time span."""
    if not edges:
        return 1
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    t0 = min(e.time for e in edges)
    t1 = max(e.time for e in edges)
    return max(1, t0 + int(math.floor(fraction * (t1 - t0))))


def score_stream(stream: LabeledStream, params: HyperParams) -> tuple[list[ScoreRecord], RunSummary]:
    records: list[ScoreRecord] = []
    ticks = coalesce_into_ticks(stream.edges, stream.labels, undirected=params.undirected)
    summary = Engine(params).run(ticks, records.append)
    return records, summary


def records_auc(records: Sequence[ScoreRecord]) -> float:
    scored = [r for r in records if r.label is not None]
    return auc([r.score for r in scored], [r.label for r in scored])


@dataclass(frozen=True)
class EvalRun:
    seed: int
    auc: float
    summary: RunSummary


def evaluate(stream: LabeledStream, params: HyperParams, runs: int = 1) -> list[EvalRun]:
    """AUC over scored copies after t_setup, once per seed seed..seed+runs-1."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    out: list[EvalRun] = []
    for i in range(runs):
        p = params.model_copy(update={"seed": params.seed + i})
        records, summary = score_stream(stream, p)
        value = records_auc(records)
        log.info("evaluate: seed=%s auc=%.6f scored=%s", p.seed, value, summary.scored)
        out.append(EvalRun(p.seed, value, summary))
    return out


@dataclass(frozen=True)
class SweepRow:
    mem_limit: int | None
    auc: float
    final_f_th: float


def _sweep_one(args: tuple[LabeledStream, HyperParams]) -> SweepRow:
    stream, params = args
    records, summary = score_stream(stream, params)
    return SweepRow(params.mem_limit, records_auc(records), summary.final_f_th)


def sweep_M(
    stream: LabeledStream,
    params: HyperParams,
    m_values: Sequence[int | None],
    workers: int = 1,
) -> list[SweepRow]:
    """One independent engine per capacity; rows come back in `m_values` order."""
    jobs = [(stream, params.model_copy(update={"mem_limit": m})) for m in m_values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    for r in rows:
        log.info("sweep: mem_limit=%s auc=%.6f final_f_th=%.6g", r.mem_limit, r.auc, r.final_f_th)
    return rows
