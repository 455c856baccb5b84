from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from ffade.config import OptimizerConfig
from ffade.models import InteractionType
from ffade.skeleton import SkeletonMap
from ffade.stream import canonicalize_type

log = logging.getLogger("ffade.factorizer")

EXP_CLAMP = 30.0

# (source, destination, target frequency)
Pair = tuple[str, str, float]


class EmbeddingTable:
    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, v: object) -> bool:
        return v in self.vectors

    def get(self, v: str) -> np.ndarray | None:
        return self.vectors.get(v)

    def __getitem__(self, v: str) -> np.ndarray:
        return self.vectors[v]

    def set(self, v: str, h: np.ndarray) -> None:
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (self.dim,):
            raise ValueError(f"embedding for {v!r} has shape {h.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(h)):
            raise ValueError(f"embedding for {v!r} is not finite")
        self.vectors[v] = h

    def sync(self, nodes: Iterable[str], rng: np.random.Generator) -> tuple[int, int]:
        """Keep exactly `nodes`: drop stale vectors, initialize missing ones.

        New vectors are drawn in sorted node order from N(0, 1/sqrt(dim)).
        """
        keep = set(nodes)
        stale = [v for v in self.vectors if v not in keep]
        for v in stale:
            del self.vectors[v]
        missing = sorted(v for v in keep if v not in self.vectors)
        if missing:
            block = rng.normal(0.0, 1.0 / math.sqrt(self.dim), size=(len(missing), self.dim))
            for v, row in zip(missing, block):
                self.vectors[v] = row.copy()
        return len(missing), len(stale)

    def dump_lines(self, delimiter: str = ",") -> list[str]:
        return [
            delimiter.join([v, *(format(x, ".17g") for x in self.vectors[v])])
            for v in sorted(self.vectors)
        ]


@dataclass(frozen=True)
class MixMatrix:
    q: np.ndarray
    mode: str

    @classmethod
    def draw(cls, dim: int, rng: np.random.Generator, undirected: bool = False) -> MixMatrix:
        if undirected:
            q = np.eye(dim)
            mode = "identity"
        else:
            q = rng.standard_normal((dim, dim))
            mode = "random-gaussian"
        q.flags.writeable = False
        return cls(q, mode)

    @classmethod
    def from_array(cls, q: np.ndarray, mode: str) -> MixMatrix:
        q = np.array(q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"mix matrix must be square, got shape {q.shape}")
        q.flags.writeable = False
        return cls(q, mode)

    @property
    def dim(self) -> int:
        return int(self.q.shape[0])


def _as_q(q: MixMatrix | np.ndarray) -> np.ndarray:
    return q.q if isinstance(q, MixMatrix) else q


def intensity(h_s: np.ndarray, h_d: np.ndarray, q: MixMatrix | np.ndarray) -> float:
    qa = _as_q(q)
    if h_s.shape != h_d.shape or qa.shape != (h_s.shape[0], h_d.shape[0]):
        raise ValueError(f"dimension mismatch: h_s{h_s.shape} Q{qa.shape} h_d{h_d.shape}")
    x = float(h_s @ qa @ h_d)
    return math.exp(min(max(x, -EXP_CLAMP), EXP_CLAMP))


def log_likelihood(f: float, lam: float) -> float:
    """Exponential log density at f with mean lam: -log(lam) - f/lam."""
    if lam <= 0:
        raise ValueError(f"intensity must be > 0, got {lam}")
    if f < 0:
        raise ValueError(f"frequency must be >= 0, got {f}")
    return -math.log(lam) - f / lam


def objective(
    skeleton: SkeletonMap,
    emb: EmbeddingTable,
    q: MixMatrix | np.ndarray,
    f_th: float,
    sample: Iterable[tuple[str, str]],
    undirected: bool = False,
) -> float:
    """Summed log-likelihood of `sample`; pairs outside the skeleton count at `f_th`.

    With `undirected` the pair is looked up in canonical order, matching how the
    engine stores types in that mode.
    """
    total = 0.0
    for s, d in sample:
        e = skeleton.lookup(canonicalize_type((s, d), undirected))
        f = e.freq if e is not None else f_th
        total += log_likelihood(f, intensity(emb[s], emb[d], q))
    return total


def pairs_objective(emb: EmbeddingTable, q: MixMatrix | np.ndarray, pairs: Sequence[Pair]) -> float:
    return sum(log_likelihood(f, intensity(emb[s], emb[d], q)) for s, d, f in pairs)


def pair_gradients(
    emb: EmbeddingTable, q: MixMatrix | np.ndarray, pairs: Sequence[Pair]
) -> dict[str, np.ndarray]:
    """Gradient of the summed log-likelihood of `pairs` w.r.t. each touched embedding."""
    if not pairs:
        return {}
    qa = _as_q(q)
    nodes = sorted({s for s, _, _ in pairs} | {d for _, d, _ in pairs})
    pos = {v: i for i, v in enumerate(nodes)}
    h = np.stack([emb[v] for v in nodes])
    s_idx = np.fromiter((pos[s] for s, _, _ in pairs), dtype=np.intp, count=len(pairs))
    d_idx = np.fromiter((pos[d] for _, d, _ in pairs), dtype=np.intp, count=len(pairs))
    f = np.fromiter((p[2] for p in pairs), dtype=np.float64, count=len(pairs))

    hs = h[s_idx]
    hd = h[d_idx]
    x = np.clip(np.einsum("ij,jk,ik->i", hs, qa, hd), -EXP_CLAMP, EXP_CLAMP)
    coef = f / np.exp(x) - 1.0

    grad = np.zeros_like(h)
    np.add.at(grad, s_idx, coef[:, None] * (hd @ qa.T))
    np.add.at(grad, d_idx, coef[:, None] * (hs @ qa))
    return {v: grad[i] for i, v in enumerate(nodes)}


def gradient_step(
    emb: EmbeddingTable,
    q: MixMatrix | np.ndarray,
    pairs: Sequence[Pair],
    step_size: float,
    permitted: set[str] | None = None,
    clip_norm: float | None = None,
) -> int:
    """One simultaneous ascent step; nodes outside `permitted` are left untouched.

    Returns the number of vectors moved.
    """
    grads = pair_gradients(emb, q, pairs)
    moved = 0
    for v, g in grads.items():
        if permitted is not None and v not in permitted:
            continue
        if clip_norm is not None:
            n = float(np.linalg.norm(g))
            if n > clip_norm:
                g = g * (clip_norm / n)
        emb.vectors[v] = emb.vectors[v] + step_size * g
        moved += 1
    return moved


@dataclass(frozen=True)
class FitReport:
    mode: str
    epochs: int
    steps: int
    pairs: int
    nodes_added: int
    nodes_removed: int
    last_objective: float | None = None


class Factorizer:
    """Mini-batch maximum-likelihood fit of node embeddings to skeleton frequencies.

    Positive pairs are every tracked neighbor of a batch node; negatives are
    `neg_per_node` non-neighbors per batch node at the cut-off frequency. Only
    nodes touched by the active set are moved.
    """

    def __init__(self, cfg: OptimizerConfig, rng: np.random.Generator, undirected: bool = False) -> None:
        self.cfg = cfg
        self.rng = rng
        self.undirected = undirected

    def update(
        self,
        skeleton: SkeletonMap,
        emb: EmbeddingTable,
        q: MixMatrix | np.ndarray,
        f_th: float,
        mode: str,
    ) -> FitReport:
        if mode not in ("global", "local"):
            raise ValueError(f"mode must be 'global' or 'local', got {mode!r}")
        if not skeleton.active:
            return FitReport(mode, 0, 0, 0, 0, 0)
        added, removed = emb.sync(skeleton.node_set(), self.rng)

        cfg = self.cfg
        active = sorted(skeleton.active)
        permitted = skeleton.active_nodes()
        all_nodes = sorted(skeleton.node_set())
        outside = [v for v in all_nodes if v not in permitted] if mode == "local" else []
        n_epochs = cfg.epochs_for(mode)

        steps = 0
        n_pairs = 0
        last_pairs: list[Pair] = []
        for _ in range(n_epochs):
            order = self.rng.permutation(len(active))
            for start in range(0, len(active), cfg.batch_pos):
                chunk = [active[i] for i in order[start : start + cfg.batch_pos]]
                batch_nodes = {v for t in chunk for v in t}
                if outside and cfg.batch_outside > 0:
                    k = min(cfg.batch_outside, len(outside))
                    picks = self.rng.choice(len(outside), size=k, replace=False)
                    batch_nodes.update(outside[i] for i in picks)
                pairs = self.sample_pairs(sorted(batch_nodes), skeleton, all_nodes, f_th)
                if not pairs:
                    continue
                gradient_step(emb, q, pairs, cfg.step_size, permitted, cfg.clip_norm)
                steps += 1
                n_pairs += len(pairs)
                last_pairs = pairs

        report = FitReport(
            mode,
            n_epochs,
            steps,
            n_pairs,
            added,
            removed,
            pairs_objective(emb, q, last_pairs) if last_pairs else None,
        )
        log.debug(
            "fit: mode=%s epochs=%s steps=%s pairs=%s active_types=%s nodes=%s",
            mode, n_epochs, steps, n_pairs, len(active), len(permitted),
        )
        return report

    def sample_pairs(
        self,
        batch_nodes: Sequence[str],
        skeleton: SkeletonMap,
        all_nodes: Sequence[str],
        f_th: float,
    ) -> list[Pair]:
        seen: set[tuple[str, str]] = set()
        pairs: list[Pair] = []

        def _add(s: str, d: str, f: float) -> None:
            if (s, d) not in seen:
                seen.add((s, d))
                pairs.append((s, d, f))

        for v in batch_nodes:
            outs = skeleton.out_neighbors(v)
            ins = skeleton.in_neighbors(v)
            for u in sorted(outs):
                _add(v, u, skeleton.entries[InteractionType(v, u)].freq)
            for u in sorted(ins):
                _add(u, v, skeleton.entries[InteractionType(u, v)].freq)
            excluded = outs | ins if self.undirected else outs
            for u in self._negatives(v, excluded, all_nodes):
                _add(v, u, f_th)
        return pairs

    def _negatives(self, v: str, excluded: set[str], all_nodes: Sequence[str]) -> list[str]:
        k = self.cfg.neg_per_node
        if k == 0:
            return []
        n_free = len(all_nodes) - len(excluded | {v})
        if n_free <= 0:
            return []
        if n_free <= 4 * k:
            cands = [u for u in all_nodes if u != v and u not in excluded]
            picks = self.rng.choice(len(cands), size=min(k, len(cands)), replace=False)
            return [cands[i] for i in sorted(picks)]
        out: list[str] = []
        chosen: set[str] = set()
        while len(out) < k:
            u = all_nodes[int(self.rng.integers(len(all_nodes)))]
            if u == v or u in excluded or u in chosen:
                continue
            chosen.add(u)
            out.append(u)
        return out


def ffac_update(
    skeleton: SkeletonMap,
    emb: EmbeddingTable,
    q: MixMatrix | np.ndarray,
    f_th: float,
    cfg: OptimizerConfig,
    mode: str,
    rng: np.random.Generator,
    undirected: bool = False,
) -> FitReport:
    return Factorizer(cfg, rng, undirected).update(skeleton, emb, q, f_th, mode)
