"""Windowing, padding, masking, and coverage of the batch provider."""

from __future__ import annotations

import numpy as np
import pytest

from e2y.errors import ValidationError
from e2y.provider import BatchProvider, batch_windows, make_windows

from conftest import make_multimodal_record, make_numeric_record


class TestMakeWindows:
    def test_hop_equals_seq_len(self):
        rec = make_numeric_record(num_steps=10)
        windows = make_windows(rec, seq_len=4, hop=4)
        assert [(w.start, w.length) for w in windows] == [(0, 4), (4, 4), (8, 2)]

    def test_short_record_single_window(self):
        rec = make_numeric_record(num_steps=3)
        windows = make_windows(rec, seq_len=8, hop=8)
        assert [(w.start, w.length) for w in windows] == [(0, 3)]

    def test_unit_windows(self):
        rec = make_numeric_record(num_steps=3)
        windows = make_windows(rec, seq_len=1, hop=1)
        assert [(w.start, w.length) for w in windows] == [(0, 1), (1, 1), (2, 1)]

    def test_overlapping_hop_covers_every_step(self):
        rec = make_numeric_record(num_steps=11)
        windows = make_windows(rec, seq_len=4, hop=2)
        covered = set()
        for w in windows:
            covered.update(range(w.start, w.start + w.length))
        assert covered == set(range(11))

    def test_bad_params(self):
        rec = make_numeric_record()
        with pytest.raises(ValidationError):
            make_windows(rec, seq_len=0, hop=1)


class TestBatchWindows:
    def test_batch_sizes(self):
        rec = make_numeric_record(num_steps=20)
        windows = make_windows(rec, seq_len=4, hop=4)  # 5 windows
        sizes = [b.batch_size for b in batch_windows(windows, 2, 4)]
        assert sizes == [2, 2, 1]

    def test_padding_and_mask(self):
        rec = make_numeric_record(num_steps=6)
        windows = make_windows(rec, seq_len=4, hop=4)
        batches = list(batch_windows(windows, 2, 4))
        b = batches[0]
        np.testing.assert_array_equal(b.mask, [[1, 1, 1, 1], [1, 1, 0, 0]])
        assert not b.labels[1, 2:].any()
        assert not b.modalities["numeric"][1, 2:].any()
        np.testing.assert_array_equal(b.modalities["numeric"][1, :2], rec.frames["numeric"][4:6])

    def test_same_seed_same_order(self):
        rec = make_numeric_record(num_steps=40)
        windows = make_windows(rec, seq_len=4, hop=4)
        runs = []
        for _ in range(2):
            runs.append([b.provenance for b in batch_windows(windows, 3, 4, shuffle_seed=11)])
        assert runs[0] == runs[1]

    def test_different_seed_different_order(self):
        rec = make_numeric_record(num_steps=80)
        windows = make_windows(rec, seq_len=4, hop=4)
        a = [b.provenance for b in batch_windows(windows, 3, 4, shuffle_seed=1)]
        b = [b.provenance for b in batch_windows(windows, 3, 4, shuffle_seed=2)]
        assert a != b

    def test_heterogeneous_records_rejected(self):
        r1 = make_numeric_record("a", feature_count=1)
        r2 = make_numeric_record("b", feature_count=2)
        windows = make_windows(r1, 4, 4) + make_windows(r2, 4, 4)
        with pytest.raises(ValidationError, match="differ"):
            list(batch_windows(windows, 2, 4))


class TestCoverage:
    def test_mask_sum_equals_total_steps(self):
        rng = np.random.default_rng(0)
        recs = [
            make_numeric_record(f"s{i}", num_steps=int(rng.integers(1, 40)), seed=i)
            for i in range(8)
        ]
        total = sum(r.num_steps for r in recs)
        provider = BatchProvider(recs, seq_len=7, hop=7, batch_size=3, shuffle_seed=5, prefetch=0)
        mask_sum = sum(b.mask.sum() for b in provider)
        assert mask_sum == total

    def test_each_step_exactly_once_at_hop_eq_seq_len(self):
        recs = [make_numeric_record(f"s{i}", num_steps=13 + i, seed=i) for i in range(3)]
        provider = BatchProvider(recs, seq_len=5, hop=5, batch_size=2, shuffle_seed=1, prefetch=0)
        seen = []
        for b in provider:
            for row, (subject, start) in enumerate(b.provenance):
                steps = int(b.mask[row].sum())
                seen.extend((subject, start + k) for k in range(steps))
        expected = [(r.subject_id, k) for r in recs for k in range(r.num_steps)]
        assert sorted(seen) == sorted(expected)
        assert len(seen) == len(set(seen))


class TestPrefetch:
    def test_prefetch_preserves_order(self):
        recs = [make_multimodal_record(f"s{i}", num_steps=9, seed=i) for i in range(4)]
        plain = BatchProvider(recs, seq_len=4, hop=4, batch_size=3, shuffle_seed=9, prefetch=0)
        threaded = BatchProvider(recs, seq_len=4, hop=4, batch_size=3, shuffle_seed=9, prefetch=2)
        a = [b.provenance for b in plain]
        b = [b.provenance for b in threaded]
        assert a == b

    def test_prefetch_propagates_errors(self):
        r1 = make_numeric_record("a", feature_count=1)
        r2 = make_numeric_record("b", feature_count=2)
        provider = BatchProvider.__new__(BatchProvider)
        provider.records = [r1]
        provider.windows = make_windows(r1, 4, 4) + make_windows(r2, 4, 4)
        provider.seq_len, provider.hop = 4, 4
        provider.batch_size, provider.shuffle_seed, provider.prefetch = 2, None, 2
        with pytest.raises(ValidationError):
            list(provider.batches())
