from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from ffade.config import HyperParams
from ffade.detector import LastSeenIndex
from ffade.engine.pipeline import Engine
from ffade.errors import CheckpointError
from ffade.factorizer import EmbeddingTable, MixMatrix
from ffade.fileio import atomic_write_bytes
from ffade.models import InteractionType
from ffade.skeleton import FreqEntry, SkeletonMap

log = logging.getLogger("ffade.engine")

MAGIC = b"FFADE-CKPT"
VERSION = 1


def _payload(engine: Engine) -> dict[str, Any]:
    sk = engine.skeleton
    idx = engine.idx
    return {
        "version": VERSION,
        "params": engine.params.model_dump(mode="json"),
        "skeleton": {
            "entries": [[t.source, t.destination, e.last_time, e.freq] for t, e in sorted(sk.entries.items())],
            "cutoff": sk.cutoff,
            "active": [list(t) for t in sorted(sk.active)],
            "evictions": sk.evictions,
            "unions": sk.unions,
        },
        "embeddings": {v: engine.emb.vectors[v].tolist() for v in sorted(engine.emb.vectors)},
        "mix": {"mode": engine.q.mode, "q": engine.q.q.tolist()},
        "index": {
            "per_type": [[t.source, t.destination, x] for t, x in sorted(idx.per_type.items())],
            "per_source_out": dict(sorted(idx.per_source_out.items())),
            "per_dest_in": dict(sorted(idx.per_dest_in.items())),
        },
        "k": engine.k,
        "update_times": engine.update_times,
        "update_modes": engine.update_modes,
        "counters": {
            "ticks": engine.ticks,
            "events": engine.events,
            "scored": engine.scored,
            "peak_tracked": engine.peak_tracked,
            "last_time": engine.last_time,
        },
        "rng": engine.rng.bit_generator.state,
    }


def checkpoint(engine: Engine) -> bytes:
    body = json.dumps(_payload(engine), sort_keys=True, separators=(",", ":")).encode("utf-8")
    digest = hashlib.sha256(body).hexdigest().encode("ascii")
    return MAGIC + b"\n" + digest + b"\n" + body


def restore(blob: bytes) -> Engine:
    try:
        magic, digest, body = blob.split(b"\n", 2)
    except ValueError:
        raise CheckpointError("truncated checkpoint") from None
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint (bad header)")
    if hashlib.sha256(body).hexdigest().encode("ascii") != digest:
        raise CheckpointError("checkpoint checksum mismatch")
    try:
        data = json.loads(body)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"checkpoint payload is not valid json: {e}") from e

    version = data.get("version") if isinstance(data, dict) else None
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version!r} not supported (expected {VERSION})")

    try:
        return _build(data)
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise CheckpointError(f"corrupted checkpoint: {e}") from e


def _build(data: dict[str, Any]) -> Engine:
    params = HyperParams.model_validate(data["params"])
    engine = Engine(params)
    # the factorizer shares this generator, so restoring its state in place is enough
    engine.rng.bit_generator.state = data["rng"]

    sk = data["skeleton"]
    engine.skeleton = SkeletonMap.from_entries(
        ((InteractionType(s, d), FreqEntry(int(t), float(f))) for s, d, t, f in sk["entries"]),
        params.mem_limit,
        params.alpha,
        float(sk["cutoff"]),
        (InteractionType(s, d) for s, d in sk["active"]),
    )
    engine.skeleton.evictions = int(sk["evictions"])
    engine.skeleton.unions = int(sk["unions"])

    engine.q = MixMatrix.from_array(np.asarray(data["mix"]["q"], dtype=np.float64), data["mix"]["mode"])
    if engine.q.dim != params.dim:
        raise ValueError(f"mix matrix dim {engine.q.dim} != params dim {params.dim}")
    engine.emb = EmbeddingTable(params.dim)
    for v, h in data["embeddings"].items():
        engine.emb.set(v, np.asarray(h, dtype=np.float64))

    ix = data["index"]
    engine.idx = LastSeenIndex(
        per_type={InteractionType(s, d): int(x) for s, d, x in ix["per_type"]},
        per_source_out={v: int(x) for v, x in ix["per_source_out"].items()},
        per_dest_in={v: int(x) for v, x in ix["per_dest_in"].items()},
    )
    engine.k = int(data["k"])
    engine.update_times = [int(x) for x in data["update_times"]]
    engine.update_modes = [str(x) for x in data["update_modes"]]
    c = data["counters"]
    engine.ticks = int(c["ticks"])
    engine.events = int(c["events"])
    engine.scored = int(c["scored"])
    engine.peak_tracked = int(c["peak_tracked"])
    engine.last_time = None if c["last_time"] is None else int(c["last_time"])
    return engine


def save_checkpoint(engine: Engine, path: str | Path) -> None:
    blob = checkpoint(engine)
    atomic_write_bytes(path, blob)
    log.info("checkpoint: path=%s bytes=%s t=%s", path, len(blob), engine.last_time)


def load_checkpoint(path: str | Path) -> Engine:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return restore(blob)
