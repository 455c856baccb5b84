from __future__ import annotations

import logging
import sys
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

from ffade.errors import StreamFormatError, StreamOrderError
from ffade.models import Edge, InteractionType, Tick

log = logging.getLogger("ffade.stream")


@dataclass(frozen=True)
class StreamFormat:
    delimiter: str = ","
    header: bool = False


def _positive_int(raw: str, what: str, line_no: int) -> int:
    s = raw.strip()
    try:
        v = int(s)
    except ValueError:
        raise StreamFormatError(f"{what} is not an integer: {s!r}", line_no) from None
    if v < 1:
        raise StreamFormatError(f"{what} must be >= 1, got {v}", line_no)
    return v


class EdgeStreamParser:
    """Iterates Edge values from `src,dst,t[,w]` lines.

    Counts (does not reject) decreasing timestamps in `violations`; ordering is
    enforced later by coalesce_into_ticks.
    """

    def __init__(self, reader: Iterable[bytes | str], fmt: StreamFormat | None = None) -> None:
        self._reader = reader
        self.fmt = fmt or StreamFormat()
        self.lines = 0
        self.edges = 0
        self.violations = 0

    def __iter__(self) -> Iterator[Edge]:
        delim = self.fmt.delimiter
        last_time: int | None = None
        for line_no, raw in enumerate(self._reader, start=1):
            self.lines = line_no
            if isinstance(raw, bytes):
                try:
                    raw = raw.decode("utf-8")
                except UnicodeDecodeError as e:
                    raise StreamFormatError(f"invalid utf-8: {e}", line_no) from None
            line = raw.strip()
            if line_no == 1 and self.fmt.header:
                continue
            if not line or line.startswith("#"):
                continue

            parts = [p.strip() for p in line.split(delim)]
            if len(parts) not in (3, 4):
                raise StreamFormatError(f"expected 3 or 4 fields, got {len(parts)}", line_no)
            src, dst = parts[0], parts[1]
            if not src or not dst:
                raise StreamFormatError("empty node id", line_no)
            t = _positive_int(parts[2], "time", line_no)
            w = _positive_int(parts[3], "weight", line_no) if len(parts) == 4 else 1

            if last_time is not None and t < last_time:
                self.violations += 1
            last_time = t
            self.edges += 1
            yield Edge(sys.intern(src), sys.intern(dst), t, w)

        if self.violations:
            log.warning("parse: lines=%s edges=%s order_violations=%s", self.lines, self.edges, self.violations)


def parse_edge_stream(reader: Iterable[bytes | str], fmt: StreamFormat | None = None) -> EdgeStreamParser:
    return EdgeStreamParser(reader, fmt)


def read_edges(path: str | Path, fmt: StreamFormat | None = None) -> list[Edge]:
    with open(path, "rb") as fh:
        return list(parse_edge_stream(fh, fmt))


def read_labels(reader: Iterable[bytes | str]) -> list[int]:
    """One 0/1 label per event line; blank and '#' lines are skipped."""
    out: list[int] = []
    for line_no, raw in enumerate(reader, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if s not in ("0", "1"):
            raise StreamFormatError(f"label must be 0 or 1, got {s!r}", line_no)
        out.append(int(s))
    return out


def canonicalize_type(t: InteractionType | tuple[str, str], undirected: bool) -> InteractionType:
    s, d = t
    if undirected and d < s:
        return InteractionType(d, s)
    return InteractionType(s, d)


def coalesce_into_ticks(
    edges: Iterable[Edge],
    labels: Sequence[int] | None = None,
    undirected: bool = False,
) -> Iterator[Tick]:
    """Group a time-ordered edge sequence into one Tick per distinct timestamp.

    Same-type events at one time are merged by summing weights. With `labels`
    (one per edge), each edge's label is repeated `weight` times into the
    tick's per-copy label tuples in arrival order.
    """
    cur_time: int | None = None
    counts: dict[InteractionType, int] = {}
    copy_labels: dict[InteractionType, list[int]] = {}

    def _emit() -> Tick:
        lab = None
        if labels is not None:
            lab = {t: tuple(v) for t, v in copy_labels.items()}
        return Tick(cur_time, dict(counts), lab)

    i = -1
    for i, e in enumerate(edges):
        if cur_time is not None and e.time < cur_time:
            raise StreamOrderError(i, e.time, cur_time)
        if cur_time is not None and e.time > cur_time:
            yield _emit()
            counts = {}
            copy_labels = {}
        cur_time = e.time

        t = canonicalize_type(e.type, undirected)
        counts[t] = counts.get(t, 0) + e.weight
        if labels is not None:
            if i >= len(labels):
                raise StreamFormatError(f"labels exhausted at event {i} (have {len(labels)})")
            copy_labels.setdefault(t, []).extend([int(labels[i])] * e.weight)

    if cur_time is not None:
        yield _emit()
    if labels is not None and i + 1 != len(labels):
        log.warning("coalesce: edges=%s labels=%s (extra labels ignored)", i + 1, len(labels))
