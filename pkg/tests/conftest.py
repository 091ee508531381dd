"""Shared builders for synthetic records used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from e2y.records import ModalityDescriptor, SequenceRecord


def make_numeric_record(
    subject_id: str = "subj",
    num_steps: int = 5,
    feature_count: int = 1,
    label_dim: int = 1,
    step_period: float = 0.04,
    seed: int = 0,
) -> SequenceRecord:
    rng = np.random.default_rng(seed)
    mod = ModalityDescriptor(
        name="numeric",
        kind="numeric",
        sample_rate=1.0 / step_period,
        frame_shape=(feature_count,),
        dtype="float32",
    )
    return SequenceRecord(
        subject_id=subject_id,
        step_period=step_period,
        label_names=[f"dim{k}" for k in range(label_dim)],
        labels=rng.normal(size=(num_steps, label_dim)),
        modalities=[mod],
        frames={"numeric": rng.normal(size=(num_steps, feature_count)).astype(np.float32)},
    )


def make_multimodal_record(
    subject_id: str = "subj",
    num_steps: int = 4,
    audio_rate: float = 500.0,
    step_period: float = 0.04,
    video_hw: tuple[int, int] = (8, 8),
    numeric_features: int = 2,
    label_dim: int = 2,
    seed: int = 0,
) -> SequenceRecord:
    rng = np.random.default_rng(seed)
    chunk = int(round(audio_rate * step_period))
    mods = [
        ModalityDescriptor("audio", "audio", audio_rate, (chunk,), "float32"),
        ModalityDescriptor("video", "video", 1.0 / step_period, (*video_hw, 3), "uint8"),
        ModalityDescriptor("physio", "numeric", 1.0 / step_period, (numeric_features,), "float32"),
    ]
    frames = {
        "audio": rng.uniform(-1, 1, size=(num_steps, chunk)).astype(np.float32),
        "video": rng.integers(0, 256, size=(num_steps, *video_hw, 3), dtype=np.uint8),
        "physio": rng.normal(size=(num_steps, numeric_features)).astype(np.float32),
    }
    return SequenceRecord(
        subject_id=subject_id,
        step_period=step_period,
        label_names=[f"dim{k}" for k in range(label_dim)],
        labels=rng.normal(size=(num_steps, label_dim)),
        modalities=mods,
        frames=frames,
    )


def random_record(rng: np.random.Generator, subject_id: str) -> SequenceRecord:
    """A small record with a random mix of modalities, for round-trip fuzzing."""
    num_steps = int(rng.integers(1, 7))
    step_period = float(rng.choice([0.02, 0.04, 0.1]))
    label_dim = int(rng.integers(1, 4))
    mods: list[ModalityDescriptor] = []
    frames: dict[str, np.ndarray] = {}
    if rng.random() < 0.7:
        rate = float(rng.choice([250, 500, 1000]))
        chunk = int(round(rate * step_period))
        mods.append(ModalityDescriptor("audio", "audio", rate, (chunk,), "float32"))
        frames["audio"] = rng.normal(size=(num_steps, chunk)).astype(np.float32)
    if rng.random() < 0.5:
        h, w = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        mods.append(ModalityDescriptor("video", "video", 1.0 / step_period, (h, w, 3), "uint8"))
        frames["video"] = rng.integers(0, 256, size=(num_steps, h, w, 3), dtype=np.uint8)
    if not mods or rng.random() < 0.6:
        f = int(rng.integers(1, 5))
        mods.append(ModalityDescriptor("feat", "numeric", 1.0 / step_period, (f,), "float32"))
        frames["feat"] = rng.normal(size=(num_steps, f)).astype(np.float32)
    return SequenceRecord(
        subject_id=subject_id,
        step_period=step_period,
        label_names=[f"dim{k}" for k in range(label_dim)],
        labels=rng.normal(size=(num_steps, label_dim)),
        modalities=mods,
        frames=frames,
    )


@pytest.fixture
def numeric_record() -> SequenceRecord:
    return make_numeric_record()
