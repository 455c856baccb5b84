from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from ffade.config import HyperParams
from ffade.detector import LastSeenIndex, detect_tick
from ffade.errors import FfadeError
from ffade.factorizer import EmbeddingTable, Factorizer, FitReport, MixMatrix
from ffade.models import ScoreRecord, Tick
from ffade.skeleton import SkeletonMap

log = logging.getLogger("ffade.engine")

Sink = Callable[[ScoreRecord], None]


@dataclass(frozen=True)
class RunSummary:
    ticks: int
    events: int
    scored: int
    evictions: int
    final_f_th: float
    updates: int
    peak_tracked: int
    update_times: tuple[int, ...] = ()


class Engine:
    """Streaming detector state: skeleton, embeddings, mixing matrix, last-seen index.

    Each tick is scored against the state before it, then folded into the
    skeleton; the embeddings are refit at t_setup and every w_upd afterwards.
    """

    def __init__(self, params: HyperParams, rng: np.random.Generator | None = None) -> None:
        self.params = params
        self.rng = rng if rng is not None else np.random.default_rng(params.seed)
        self.skeleton = SkeletonMap(params.mem_limit, params.alpha, params.f_th_init)
        self.q = MixMatrix.draw(params.dim, self.rng, params.undirected)
        self.emb = EmbeddingTable(params.dim)
        self.idx = LastSeenIndex()
        self.factorizer = Factorizer(params.optimizer, self.rng, params.undirected)
        self.k = 0
        self.update_times: list[int] = []
        self.update_modes: list[str] = []
        self.ticks = 0
        self.events = 0
        self.scored = 0
        self.peak_tracked = 0
        self.last_time: int | None = None

    @property
    def f_th(self) -> float:
        return self.skeleton.cutoff

    @property
    def updates(self) -> int:
        return len(self.update_times)

    def next_update_time(self) -> int:
        return self.params.t_setup + self.k * self.params.w_upd

    def process_tick(self, tick: Tick) -> list[ScoreRecord]:
        if self.last_time is not None and tick.time <= self.last_time:
            raise FfadeError(f"tick t={tick.time}: not after previous tick t={self.last_time}")
        try:
            records = detect_tick(
                tick,
                self.idx,
                self.emb,
                self.q,
                self.f_th,
                self.params.t_setup,
                self.params.group_channels,
            )

            evicted = 0
            for t in sorted(tick.typed_counts):
                evicted += len(self.skeleton.union_edge(t, tick.time, tick.typed_counts[t]))
            self.idx.refresh(tick)
            self.peak_tracked = max(self.peak_tracked, len(self.idx.per_type))
            if evicted:
                self.idx.prune(self.skeleton, tick)

            if tick.time >= self.next_update_time():
                self._update(tick.time)
        except FfadeError:
            raise
        except (ValueError, ArithmeticError) as e:
            raise FfadeError(f"tick t={tick.time}: {e}") from e

        self.last_time = tick.time
        self.ticks += 1
        self.events += tick.total_weight
        self.scored += len(records)
        return records

    def _update(self, now: int) -> FitReport:
        mode = "global" if not self.update_times else "local"
        report = self.factorizer.update(self.skeleton, self.emb, self.q, self.f_th, mode)
        self.k = (now - self.params.t_setup) // self.params.w_upd + 1
        self.skeleton.clear_active()
        self.update_times.append(now)
        self.update_modes.append(mode)
        log.info(
            "update: t=%s k=%s mode=%s steps=%s pairs=%s nodes=%s f_th=%.6g",
            now, self.k, mode, report.steps, report.pairs, len(self.emb), self.f_th,
        )
        return report

    def run(self, ticks: Iterable[Tick], sink: Sink | None = None) -> RunSummary:
        for tick in ticks:
            for rec in self.process_tick(tick):
                if sink is not None:
                    sink(rec)
        summary = self.summary()
        log.info(
            "run: ticks=%s events=%s scored=%s evictions=%s updates=%s f_th=%.6g",
            summary.ticks, summary.events, summary.scored, summary.evictions,
            summary.updates, summary.final_f_th,
        )
        return summary

    def summary(self) -> RunSummary:
        return RunSummary(
            ticks=self.ticks,
            events=self.events,
            scored=self.scored,
            evictions=self.skeleton.evictions,
            final_f_th=self.f_th,
            updates=self.updates,
            peak_tracked=self.peak_tracked,
            update_times=tuple(self.update_times),
        )


def run(ticks: Iterable[Tick], params: HyperParams, sink: Sink | None = None) -> RunSummary:
    return Engine(params).run(ticks, sink)
