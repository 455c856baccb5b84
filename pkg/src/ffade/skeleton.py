from __future__ import annotations

import heapq
import logging
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from ffade.models import InteractionType

log = logging.getLogger("ffade.skeleton")


@dataclass(frozen=True)
class FreqEntry:
    last_time: int
    freq: float


def decayed_freq(entry: FreqEntry, now: int, alpha: float) -> float:
    if now < entry.last_time:
        raise ValueError(f"now={now} is before last_time={entry.last_time}")
    return alpha ** (now - entry.last_time) * entry.freq


class SkeletonMap:
    """Bounded map InteractionType -> (last_time, aggregated frequency).

    Aggregation uses the kernel alpha^i * (1 - alpha): every union decays the
    stored value to the event time and adds (1 - alpha) * weight. When more than
    `capacity` types are tracked the cut-off is raised to the capacity-th
    largest decayed frequency and everything below it is dropped. The cut-off
    never decreases.

    The min-heap is keyed in log domain (log f - t log alpha) so long gaps do
    not underflow; superseded heap items are skipped when popped.
    """

    def __init__(self, capacity: int | None, alpha: float, cutoff: float = 0.0) -> None:
        if capacity is not None and capacity < 1:
            raise ValueError(f"capacity must be >= 1 or None, got {capacity}")
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {alpha}")
        if cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {cutoff}")
        self.capacity = capacity
        self.alpha = alpha
        self.cutoff = float(cutoff)
        self.entries: dict[InteractionType, FreqEntry] = {}
        self.active: set[InteractionType] = set()
        self._heap: list[tuple[tuple[float, float], InteractionType, int, float]] = []
        self._log_alpha = math.log(alpha) if alpha > 0 else None
        self._out: dict[str, set[str]] = {}
        self._in: dict[str, set[str]] = {}
        self.evictions = 0
        self.unions = 0

    # --- read side ---

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, t: object) -> bool:
        return t in self.entries

    def __iter__(self) -> Iterator[InteractionType]:
        return iter(self.entries)

    def lookup(self, t: InteractionType) -> FreqEntry | None:
        return self.entries.get(t)

    def decayed(self, t: InteractionType, now: int) -> float:
        e = self.entries.get(t)
        if e is None:
            return 0.0
        return decayed_freq(e, now, self.alpha)

    def out_neighbors(self, v: str) -> set[str]:
        return self._out.get(v, set())

    def in_neighbors(self, v: str) -> set[str]:
        return self._in.get(v, set())

    def node_set(self) -> set[str]:
        return set(self._out) | set(self._in)

    def active_nodes(self) -> set[str]:
        nodes: set[str] = set()
        for s, d in self.active:
            nodes.add(s)
            nodes.add(d)
        return nodes

    def clear_active(self) -> None:
        self.active.clear()

    def min_decayed(self, now: int) -> tuple[InteractionType, float]:
        """Smallest decayed frequency at `now`; ties go to the smaller type."""
        if not self.entries:
            raise ValueError("min_decayed on an empty skeleton")
        if self._log_alpha is None:
            # alpha == 0: everything older than `now` is exactly 0
            zeros = [t for t, e in self.entries.items() if e.last_time < now]
            if zeros:
                return min(zeros), 0.0
        self._drop_stale_top()
        _, t, _, _ = self._heap[0]
        return t, self.decayed(t, now)

    # --- write side ---

    def union_edge(self, t: InteractionType, time: int, weight: int = 1) -> list[InteractionType]:
        """Fold one event into the map; returns the types evicted by this call."""
        if weight < 1:
            raise ValueError(f"weight must be >= 1, got {weight}")
        self.unions += 1
        self.active.add(t)

        prev = self.entries.get(t)
        add = (1.0 - self.alpha) * weight
        if prev is None:
            entry = FreqEntry(time, add)
            self._link(t)
        else:
            entry = FreqEntry(time, decayed_freq(prev, time, self.alpha) + add)
        self.entries[t] = entry
        heapq.heappush(self._heap, (self._key(entry), t, entry.last_time, entry.freq))

        evicted: list[InteractionType] = []
        if self.capacity is not None and len(self.entries) > self.capacity:
            evicted = self._enforce_capacity(time)
        self._maybe_compact()
        return evicted

    def _enforce_capacity(self, now: int) -> list[InteractionType]:
        # the capacity-th largest is the (excess + 1)-th smallest
        popped = [self._pop_valid() for _ in range(len(self.entries) - self.capacity)]
        nth = self._peek_valid()
        for item in popped:
            heapq.heappush(self._heap, item)
        candidate = decayed_freq(self.entries[nth[1]], now, self.alpha)
        if candidate > self.cutoff:
            self.cutoff = candidate

        evicted: list[InteractionType] = []
        while self.entries:
            item = self._peek_valid()
            if decayed_freq(self.entries[item[1]], now, self.alpha) >= self.cutoff:
                break
            heapq.heappop(self._heap)
            evicted.append(item[1])
            self._remove(item[1])

        excess = len(self.entries) - self.capacity
        if excess > 0:
            # several entries sit exactly at the cut-off: drop the oldest first
            tied = []
            while self.entries:
                item = self._peek_valid()
                if decayed_freq(self.entries[item[1]], now, self.alpha) > self.cutoff:
                    break
                tied.append(heapq.heappop(self._heap))
            tied.sort(key=lambda it: (it[2], it[1]))
            for item in tied[:excess]:
                evicted.append(item[1])
                self._remove(item[1])
            for item in tied[excess:]:
                heapq.heappush(self._heap, item)

        # rounding between heap keys and decayed values can leave one over
        while len(self.entries) > self.capacity:
            item = self._pop_valid()
            evicted.append(item[1])
            self._remove(item[1])

        if evicted:
            self.evictions += len(evicted)
            log.debug("evict: now=%s n=%s cutoff=%.6g size=%s", now, len(evicted), self.cutoff, len(self.entries))
        return evicted

    # --- heap plumbing ---

    def _key(self, e: FreqEntry) -> tuple[float, float]:
        if self._log_alpha is None:
            return (float(e.last_time), math.log(e.freq))
        return (math.log(e.freq) - e.last_time * self._log_alpha, 0.0)

    def _is_current(self, item: tuple) -> bool:
        e = self.entries.get(item[1])
        return e is not None and e.last_time == item[2] and e.freq == item[3]

    def _drop_stale_top(self) -> None:
        while self._heap and not self._is_current(self._heap[0]):
            heapq.heappop(self._heap)

    def _peek_valid(self) -> tuple:
        self._drop_stale_top()
        return self._heap[0]

    def _pop_valid(self) -> tuple:
        self._drop_stale_top()
        return heapq.heappop(self._heap)

    def _maybe_compact(self) -> None:
        if len(self._heap) > 2 * len(self.entries) + 64:
            self._rebuild_heap()

    def _rebuild_heap(self) -> None:
        self._heap = [(self._key(e), t, e.last_time, e.freq) for t, e in self.entries.items()]
        heapq.heapify(self._heap)

    def _link(self, t: InteractionType) -> None:
        self._out.setdefault(t.source, set()).add(t.destination)
        self._in.setdefault(t.destination, set()).add(t.source)

    def _remove(self, t: InteractionType) -> None:
        del self.entries[t]
        self.active.discard(t)
        outs = self._out.get(t.source)
        if outs is not None:
            outs.discard(t.destination)
            if not outs:
                del self._out[t.source]
        ins = self._in.get(t.destination)
        if ins is not None:
            ins.discard(t.source)
            if not ins:
                del self._in[t.destination]

    # --- snapshot ---

    def dump_lines(self, delimiter: str = ",") -> list[str]:
        return [
            delimiter.join((t.source, t.destination, str(e.last_time), format(e.freq, ".17g")))
            for t, e in sorted(self.entries.items())
        ]

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[tuple[InteractionType, FreqEntry]],
        capacity: int | None,
        alpha: float,
        cutoff: float = 0.0,
        active: Iterable[InteractionType] = (),
    ) -> SkeletonMap:
        sk = cls(capacity, alpha, cutoff)
        for t, e in entries:
            if e.freq <= 0:
                raise ValueError(f"stored frequency must be > 0 for {t}, got {e.freq}")
            sk.entries[t] = e
            sk._link(t)
        for t in active:
            if t not in sk.entries:
                raise ValueError(f"active type {t} is not tracked")
            sk.active.add(t)
        sk._rebuild_heap()
        return sk
