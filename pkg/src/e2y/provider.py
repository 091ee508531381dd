"""Turns stored records into shuffled, padded, masked mini-batches.

Windows are cut at a fixed hop; short tails are zero-padded and masked
out. Shuffling happens at the window level so one batch mixes subjects,
and is fully determined by the seed.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError
from .records import SequenceRecord


@dataclass
class Window:
    """A view into one record: steps [start, start + length)."""

    record: SequenceRecord
    start: int
    length: int


@dataclass
class Batch:
    """Padded fixed-shape tensors with a {0,1} validity mask.

    Mask rows are a prefix of ones; frames and labels are exactly zero
    wherever the mask is zero.
    """

    modalities: dict[str, np.ndarray]          # name -> [batch, seq_len, *frame_shape]
    labels: np.ndarray                         # [batch, seq_len, label_dim]
    mask: np.ndarray                           # [batch, seq_len]
    provenance: list[tuple[str, int]] = field(default_factory=list)

    @property
    def batch_size(self) -> int:
        return self.mask.shape[0]

    @property
    def seq_len(self) -> int:
        return self.mask.shape[1]


def make_windows(record: SequenceRecord, seq_len: int, hop: int) -> list[Window]:
    """Cut a record into windows starting at steps 0, hop, 2*hop, ...

    The final window may be shorter than seq_len; padding happens at
    batch time. With hop <= seq_len every step lands in some window.
    """
    if seq_len < 1 or hop < 1:
        raise ValidationError(f"seq_len and hop must be >= 1, got {seq_len}, {hop}")
    windows = []
    for start in range(0, record.num_steps, hop):
        length = min(seq_len, record.num_steps - start)
        windows.append(Window(record, start, length))
    return windows


def _check_compatible(windows: Sequence[Window]) -> tuple[list, int]:
    first = windows[0].record
    signature = [(m.name, m.frame_shape, m.dtype) for m in first.modalities]
    for w in windows[1:]:
        sig = [(m.name, m.frame_shape, m.dtype) for m in w.record.modalities]
        if sig != signature:
            raise ValidationError(
                f"record {w.record.subject_id!r} modalities {sig} differ from "
                f"{first.subject_id!r} modalities {signature}"
            )
        if w.record.label_dim != first.label_dim:
            raise ValidationError(
                f"record {w.record.subject_id!r} label_dim {w.record.label_dim} != {first.label_dim}"
            )
    return signature, first.label_dim


def _assemble(windows: Sequence[Window], seq_len: int) -> Batch:
    signature, label_dim = _check_compatible(windows)
    n = len(windows)
    first = windows[0].record
    modalities = {
        m.name: np.zeros((n, seq_len) + m.frame_shape, dtype=m.numpy_dtype)
        for m in first.modalities
    }
    labels = np.zeros((n, seq_len, label_dim), dtype=np.float64)
    mask = np.zeros((n, seq_len), dtype=np.float64)
    provenance = []
    for i, w in enumerate(windows):
        stop = w.start + w.length
        for name in modalities:
            modalities[name][i, : w.length] = w.record.frames[name][w.start : stop]
        labels[i, : w.length] = w.record.labels[w.start : stop]
        mask[i, : w.length] = 1.0
        provenance.append((w.record.subject_id, w.start))
    return Batch(modalities=modalities, labels=labels, mask=mask, provenance=provenance)


def batch_windows(
    windows: Sequence[Window],
    batch_size: int,
    seq_len: int,
    shuffle_seed: int | None = None,
) -> Iterator[Batch]:
    """Group windows into padded batches; the final batch may be smaller.

    With a seed the window order is a seeded permutation, identical
    across runs; without one, windows keep their given order.
    """
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
    if not windows:
        return
    _check_compatible(windows)
    order = np.arange(len(windows))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(windows))
    for lo in range(0, len(windows), batch_size):
        chunk = [windows[j] for j in order[lo : lo + batch_size]]
        yield _assemble(chunk, seq_len)


class BatchProvider:
    """Streams batches over a record set, optionally prefetching ahead.

    Prefetching runs a single producer thread filling a bounded queue,
    so the consumer sees the same seed-defined order with or without it.
    """

    def __init__(
        self,
        records: Iterable[SequenceRecord],
        seq_len: int = 150,
        hop: int = 150,
        batch_size: int = 8,
        shuffle_seed: int | None = None,
        prefetch: int = 2,
    ):
        self.records = list(records)
        if not self.records:
            raise ValidationError("provider needs at least one record")
        self.seq_len = seq_len
        self.hop = hop
        self.batch_size = batch_size
        self.shuffle_seed = shuffle_seed
        self.prefetch = prefetch
        self.windows: list[Window] = []
        for rec in self.records:
            self.windows.extend(make_windows(rec, seq_len, hop))
        _check_compatible(self.windows)

    def batches(self, shuffle_seed: int | None = None) -> Iterator[Batch]:
        """One pass over all windows; seed falls back to the constructor's."""
        seed = shuffle_seed if shuffle_seed is not None else self.shuffle_seed
        stream = batch_windows(self.windows, self.batch_size, self.seq_len, seed)
        if self.prefetch and self.prefetch > 0:
            return _prefetch_iter(stream, self.prefetch)
        return stream

    def __iter__(self) -> Iterator[Batch]:
        return self.batches()


_SENTINEL = object()


def _prefetch_iter(stream: Iterator[Batch], depth: int) -> Iterator[Batch]:
    buf: queue.Queue = queue.Queue(maxsize=depth)
    errbox: list[BaseException] = []

    def fill():
        try:
            for item in stream:
                buf.put(item)
        except BaseException as exc:  # propagated to the consumer
            errbox.append(exc)
        finally:
            buf.put(_SENTINEL)

    worker = threading.Thread(target=fill, daemon=True)
    worker.start()
    while True:
        item = buf.get()
        if item is _SENTINEL:
            if errbox:
                raise errbox[0]
            return
        yield item
