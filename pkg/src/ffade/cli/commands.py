from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

from ffade import settings
from ffade.config import HyperParams, resolve_params
from ffade.engine import Engine, load_checkpoint, save_checkpoint
from ffade.errors import ConfigError, StreamFormatError
from ffade.evalgen import (
    LabeledStream,
    SyntheticConfig,
    aggregate_events,
    auc,
    auc_summary,
    evaluate,
    generate,
    generate_pattern,
    labels_path,
    setup_time,
    sweep_M,
    write_stream,
)
from ffade.fileio import atomic_write_lines, fmt_float
from ffade.models import Edge, ScoreRecord
from ffade.stream import StreamFormat, coalesce_into_ticks, read_edges, read_labels

log = logging.getLogger("ffade.cli")

SCORE_HEADER = "event_index,time,src,dst,score,channel"


# --- shared helpers ---


def _fmt(args: argparse.Namespace) -> StreamFormat:
    return StreamFormat(delimiter=args.delimiter, header=bool(args.header))


def _load_edges(path: str, args: argparse.Namespace) -> list[Edge]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input not found: {p}")
    return read_edges(p, _fmt(args))


def _load_labels(path: str | Path) -> list[int]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"labels not found: {p}")
    with open(p, "rb") as fh:
        return read_labels(fh)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "t_setup": args.t_setup,
        "w_upd": args.w_upd,
        "alpha": args.alpha,
        "mem_limit": args.mem_limit,
        "dim": args.dim,
        "f_th_init": args.f_th,
        "undirected": args.undirected,
        "group_channels": args.group_channels,
        "seed": args.seed,
        "epochs": args.epochs,
        "setup_epochs": args.setup_epochs,
        "step_size": args.step_size,
        "neg_per_node": args.neg_per_node,
    }


def _params(args: argparse.Namespace, edges: list[Edge]) -> HyperParams:
    return resolve_params(
        preset=args.preset,
        config_path=args.config,
        overrides=_overrides(args),
        t_setup=setup_time(edges),
    )


def _labeled(edges: list[Edge], labels: list[int], path: str) -> LabeledStream:
    if len(labels) != len(edges):
        raise StreamFormatError(f"{path}: {len(labels)} labels for {len(edges)} events")
    return LabeledStream(tuple(edges), tuple(labels))


def _emit(lines: Iterable[str], output: str | None) -> None:
    if output:
        atomic_write_lines(output, lines)
        log.info("wrote %s", output)
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


def _config_header(params: HyperParams) -> list[str]:
    return [f"# {k}={v}" for k, v in params.header_items()]


def score_lines(records: Iterable[ScoreRecord], delimiter: str = ",", start: int = 0) -> Iterator[str]:
    for i, r in enumerate(records, start=start):
        yield delimiter.join(
            (str(i), str(r.time), r.source, r.destination, fmt_float(r.score), r.channel)
        )


def read_score_file(path: str | Path, delimiter: str = ",") -> list[tuple[int, float]]:
    """(time, score) pairs from a detect output file; comment and header lines skipped."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"score file not found: {p}")
    out: list[tuple[int, float]] = []
    with open(p, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#") or s.startswith("event_index"):
                continue
            parts = s.split(delimiter)
            if len(parts) != 6:
                raise StreamFormatError(f"{p}: expected 6 fields, got {len(parts)}", line_no)
            try:
                out.append((int(parts[1]), float(parts[4])))
            except ValueError as e:
                raise StreamFormatError(f"{p}: {e}", line_no) from None
    return out


# --- commands ---


def cmd_detect(args: argparse.Namespace) -> int:
    edges = _load_edges(args.input, args)
    labels = _load_labels(args.labels) if args.labels else None
    if labels is not None and len(labels) != len(edges):
        raise StreamFormatError(f"{args.labels}: {len(labels)} labels for {len(edges)} events")

    start = 0
    if args.resume:
        engine = load_checkpoint(args.resume)
        start = engine.scored
        ignored = sorted(k for k, v in _overrides(args).items() if v is not None)
        ignored += [k for k in ("preset", "config") if getattr(args, k, None)]
        if ignored:
            log.warning("resume: parameters come from the checkpoint, ignoring %s", ",".join(ignored))
        log.info("resume: path=%s t=%s scored=%s", args.resume, engine.last_time, start)
    else:
        engine = Engine(_params(args, edges))
    params = engine.params

    records: list[ScoreRecord] = []
    ticks = coalesce_into_ticks(edges, labels, undirected=params.undirected)
    summary = engine.run(ticks, records.append)

    lines = _config_header(params) + [SCORE_HEADER] + list(score_lines(records, args.delimiter, start))
    _emit(lines, args.output)

    if labels is not None:
        scored = [r for r in records if r.label is not None]
        try:
            value = auc([r.score for r in scored], [r.label for r in scored])
            sys.stderr.write(f"auc={value:.6f}\n")
        except ValueError as e:
            sys.stderr.write(f"auc=undefined ({e})\n")

    if args.checkpoint_out:
        save_checkpoint(engine, args.checkpoint_out)
    if args.skeleton_out:
        atomic_write_lines(args.skeleton_out, engine.skeleton.dump_lines(args.delimiter))
    log.info("detect: scored=%s updates=%s f_th=%.6g", summary.scored, summary.updates, summary.final_f_th)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    if args.pattern:
        stream = generate_pattern(
            args.pattern,
            nodes_per_group=args.nodes_per_group,
            base_freq=args.base_freq,
            horizon=args.horizon,
            burst_size=args.burst_size,
            seed=args.seed,
        )
    else:
        cfg = SyntheticConfig(
            n_groups=args.groups,
            nodes_per_group=args.nodes_per_group,
            base_freq=args.base_freq,
            horizon=args.horizon,
            n_injections=args.injections,
            injection_kind=args.kind,
            clique_size=args.clique_size,
            burst_size=args.burst_size,
            seed=args.seed,
        )
        stream = generate(cfg)
    lp = write_stream(args.output, stream, args.delimiter)
    log.info("generate: edges=%s anomalous=%s labels=%s", len(stream.edges), stream.anomalous_copies, lp)
    return 0


def _labeled_input(args: argparse.Namespace) -> tuple[list[Edge], LabeledStream]:
    edges = _load_edges(args.input, args)
    lpath = args.labels or labels_path(args.input)
    return edges, _labeled(edges, _load_labels(lpath), str(lpath))


def cmd_evaluate(args: argparse.Namespace) -> int:
    edges, stream = _labeled_input(args)
    params = _params(args, edges)
    runs = evaluate(stream, params, runs=args.runs)
    for r in runs:
        sys.stdout.write(f"seed={r.seed} auc={r.auc:.6f} scored={r.summary.scored}\n")
    mean, half = auc_summary([r.auc for r in runs])
    sys.stdout.write(f"auc_mean={mean:.6f} ci95={half:.6f} runs={len(runs)}\n")
    if (args.preset or "").lower() == "darpa":
        exp_mean, exp_half = settings.EXPECTED_DARPA_AUC
        sys.stdout.write(f"# expected darpa auc={exp_mean:.2f}+-{exp_half:.2f}\n")
    return 0


def _parse_m_values(raw: str) -> list[int | None]:
    out: list[int | None] = []
    for part in raw.split(","):
        s = part.strip().lower()
        if not s:
            continue
        if s in {"inf", "infinity", "none", "unbounded"}:
            out.append(None)
            continue
        try:
            v = int(s)
        except ValueError:
            raise ConfigError(f"bad --m-values entry: {part!r}") from None
        if v < 1:
            raise ConfigError(f"--m-values entries must be >= 1, got {v}")
        out.append(v)
    if not out:
        raise ConfigError("--m-values is empty")
    return out


def cmd_sweep(args: argparse.Namespace) -> int:
    m_values = _parse_m_values(args.m_values)
    edges, stream = _labeled_input(args)
    params = _params(args, edges)
    rows = sweep_M(stream, params, m_values, workers=args.workers)
    d = args.delimiter
    lines = [d.join(("mem_limit", "auc", "final_f_th"))]
    lines += [
        d.join(("inf" if r.mem_limit is None else str(r.mem_limit), fmt_float(r.auc), fmt_float(r.final_f_th)))
        for r in rows
    ]
    _emit(lines, args.output)
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    if args.period <= 0:
        raise ConfigError(f"--period must be > 0, got {args.period}")
    rows = aggregate_events(read_score_file(args.input, args.delimiter), args.period)
    d = args.delimiter
    lines = [d.join(("period_index", "max_score"))]
    lines += [d.join((str(b), fmt_float(s))) for b, s in rows]
    _emit(lines, args.output)
    return 0


def cmd_dump_embeddings(args: argparse.Namespace) -> int:
    if args.checkpoint:
        engine = load_checkpoint(args.checkpoint)
    elif args.input:
        edges = _load_edges(args.input, args)
        engine = Engine(_params(args, edges))
        engine.run(coalesce_into_ticks(edges, undirected=engine.params.undirected))
    else:
        raise ConfigError("dump-embeddings needs an input stream or --checkpoint")
    lines = engine.emb.dump_lines(args.delimiter)
    if args.output:
        atomic_write_lines(args.output, lines)
    else:
        for line in lines:
            sys.stdout.write(line + "\n")
    log.info("dump-embeddings: nodes=%s dim=%s", len(lines), engine.emb.dim)
    return 0
