import math

import numpy as np
import pytest
from conftest import T

from ffade.detector import (
    LastSeenIndex,
    anomaly_score,
    detect_tick,
    group_score,
    observed_freqs,
    pair_score,
)
from ffade.factorizer import EmbeddingTable, intensity
from ffade.models import Tick
from ffade.skeleton import FreqEntry, SkeletonMap


class TestObservedFreqs:
    def test_single_copy(self):
        assert observed_freqs(10, 6, 1, 0.01) == [0.25]

    def test_single_copy_unseen(self):
        assert observed_freqs(10, None, 1, 0.01) == [0.01]

    def test_multi_copy(self):
        fs = observed_freqs(10, 6, 4, 0.01)
        assert fs[0] == pytest.approx(1 / 3.25)
        assert fs[1:] == [4.0, 4.0, 4.0]

    def test_multi_copy_unseen(self):
        assert observed_freqs(5, None, 3, 0.2) == [0.2, 3.0, 3.0]

    def test_adjacent_tick_burst(self):
        # previous event one tick ago: the first copy lands 1/w after it
        assert observed_freqs(7, 6, 5, 0.01)[0] == pytest.approx(5.0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            observed_freqs(5, 5, 1, 0.01)
        with pytest.raises(ValueError):
            observed_freqs(5, 1, 0, 0.01)


class TestScores:
    def test_anomaly_score(self):
        assert anomaly_score(0.5, 0.25) == 2.0
        assert anomaly_score(0.5, 0.0) == math.inf
        with pytest.raises(ValueError):
            anomaly_score(-1.0, 1.0)

    def test_pair_score_falls_back_to_cutoff(self):
        assert pair_score(0.5, "a", "b", EmbeddingTable(2), np.eye(2), 0.25) == 2.0

    def test_pair_score_uses_embeddings(self):
        emb = EmbeddingTable(2)
        emb.set("a", np.array([1.0, 0.0]))
        emb.set("b", np.array([1.0, 0.0]))
        assert pair_score(1.0, "a", "b", emb, np.eye(2), 0.25) == pytest.approx(1 / math.e)

    def test_group_score_sums_intensities(self):
        emb = EmbeddingTable(2)
        emb.set("a", np.array([0.2, 0.1]))
        emb.set("b", np.array([0.3, -0.4]))
        q = np.eye(2)
        lam_ab = intensity(emb["a"], emb["b"], q)
        got = group_score(3.0, [T("a", "b"), T("a", "c")], emb, q, 0.5)
        assert got == pytest.approx(3.0 / (lam_ab + 0.5))

    def test_group_score_empty(self):
        with pytest.raises(ValueError):
            group_score(1.0, [], EmbeddingTable(2), np.eye(2), 0.1)


class TestLastSeenIndex:
    def test_refresh(self, make_tick):
        idx = LastSeenIndex()
        idx.refresh(make_tick(4, ("a", "b", 2), ("a", "c", 1)))
        assert idx.per_type == {T("a", "b"): 4, T("a", "c"): 4}
        assert idx.per_source_out == {"a": 4}
        assert idx.per_dest_in == {"b": 4, "c": 4}

    def test_prune_follows_skeleton(self, make_tick):
        idx = LastSeenIndex()
        idx.refresh(make_tick(1, ("x", "y", 1)))
        tick = make_tick(2, ("a", "b", 1))
        idx.refresh(tick)
        sk = SkeletonMap.from_entries([(T("a", "b"), FreqEntry(2, 0.5))], None, 0.5)
        idx.prune(sk, tick)
        assert set(idx.per_type) == {T("a", "b")}
        assert "x" not in idx.per_source_out
        assert "y" not in idx.per_dest_in


class TestDetectTick:
    def test_setup_window_not_scored(self, make_tick):
        tick = make_tick(10, ("a", "b", 3))
        assert detect_tick(tick, LastSeenIndex(), EmbeddingTable(2), np.eye(2), 0.1, t_setup=10) == []

    def test_one_record_per_copy(self, make_tick):
        tick = make_tick(11, ("a", "b", 3), ("c", "d", 1))
        recs = detect_tick(tick, LastSeenIndex(), EmbeddingTable(2), np.eye(2), 0.1, t_setup=10)
        assert [(r.type, r.sub_index) for r in recs] == [
            (T("a", "b"), 0),
            (T("a", "b"), 1),
            (T("a", "b"), 2),
            (T("c", "d"), 0),
        ]

    def test_star_burst_picks_group_out(self, make_tick):
        idx = LastSeenIndex(per_source_out={"u": 19})
        tick = make_tick(20, ("u", "x", 1), ("u", "y", 1), ("u", "z", 1))
        recs = detect_tick(tick, idx, EmbeddingTable(2), np.eye(2), 0.5, t_setup=1)
        assert len(recs) == 3
        for r in recs:
            assert r.channel == "group_out"
            assert r.score == pytest.approx(2.0)
            assert r.channel_scores[0] == pytest.approx(1.0)

    def test_star_burst_pair_only(self, make_tick):
        idx = LastSeenIndex(per_source_out={"u": 19})
        tick = make_tick(20, ("u", "x", 1), ("u", "y", 1), ("u", "z", 1))
        recs = detect_tick(tick, idx, EmbeddingTable(2), np.eye(2), 0.5, t_setup=1, group_channels=False)
        assert {r.channel for r in recs} == {"pair"}
        assert all(r.score == pytest.approx(1.0) for r in recs)

    def test_ties_prefer_pair(self, make_tick):
        recs = detect_tick(make_tick(5, ("a", "b", 1)), LastSeenIndex(), EmbeddingTable(2), np.eye(2), 0.1, 1)
        assert recs[0].channel == "pair"
        assert recs[0].channel_scores == (1.0, 1.0, 1.0)

    def test_group_in_channel(self, make_tick):
        idx = LastSeenIndex(per_type={T("x", "v"): 9, T("y", "v"): 9}, per_dest_in={"v": 9})
        tick = make_tick(10, ("x", "v", 1), ("y", "v", 1))
        recs = detect_tick(tick, idx, EmbeddingTable(2), np.eye(2), 0.25, t_setup=1)
        # pair: 1/1 over 0.25; group_in: 2 copies, first 1/(0+1/2) = 2 and second 2, over 0.5
        assert [r.channel for r in recs] == ["pair", "pair"]
        assert recs[0].channel_scores == pytest.approx((4.0, 4.0, 4.0))

    def test_group_copy_offsets(self, make_tick):
        idx = LastSeenIndex(per_type={T("u", "a"): 1, T("u", "b"): 1}, per_source_out={"u": 1})
        tick = make_tick(11, ("u", "a", 1), ("u", "b", 2))
        recs = detect_tick(tick, idx, EmbeddingTable(2), np.eye(2), 1.0, t_setup=1)
        out = [r.channel_scores[1] for r in recs]
        # three copies over (u,a),(u,b): 1/(10-1+1/3), then 3, 3; group intensity 2
        assert out[0] == pytest.approx(1 / (9 + 1 / 3) / 2)
        assert out[1:] == pytest.approx([1.5, 1.5])

    def test_labels_attached(self):
        tick = Tick(5, {T("a", "b"): 2}, labels={T("a", "b"): (0, 1)})
        recs = detect_tick(tick, LastSeenIndex(), EmbeddingTable(2), np.eye(2), 0.1, 1)
        assert [r.label for r in recs] == [0, 1]

    def test_does_not_mutate_index(self, make_tick):
        idx = LastSeenIndex(per_type={T("a", "b"): 3})
        detect_tick(make_tick(5, ("a", "b", 1)), idx, EmbeddingTable(2), np.eye(2), 0.1, 1)
        assert idx.per_type == {T("a", "b"): 3}
        assert idx.per_source_out == {}
