"""Phase-1 generation: decode raw sources, align to labels, emit records.

The label timeline drives segmentation: each label row claims one
contiguous chunk of round(rate * step_period) raw samples for audio and
numeric signals, and the nearest-by-timestamp frame for video. Raw rates
must therefore be integer multiples of the label rate; anything else is
rejected rather than resampled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CoverageError, UnsupportedFormatError, ValidationError
from .records import ModalityDescriptor, SequenceRecord

# Relative jitter allowed between row intervals of a timed CSV before the
# spacing is considered non-uniform (dropped samples, mixed rates).
SPACING_TOLERANCE = 0.01

MANIFEST_COLUMNS = ["subject_id", "audio", "video", "physio", "labels"]


@dataclass
class RawSignal:
    """A decoded uniform-rate signal: [samples] or [samples, channels]."""

    samples: np.ndarray
    rate: float
    channel_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    def validate(self) -> None:
        if not self.rate > 0:
            raise ValidationError("signal rate must be > 0")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("signal contains non-finite values")


@dataclass
class VideoFrames:
    """Decoded image frames with their source timestamps in seconds."""

    timestamps: np.ndarray  # [n], float seconds, sorted
    frames: np.ndarray      # [n, height, width, channels] uint8


@dataclass
class ManifestRow:
    subject_id: str
    sources: dict[str, str]  # modality name -> path (audio/video/physio)
    labels_path: str


@dataclass
class InputManifest:
    """Catalog of subjects and their raw source files."""

    rows: list[ManifestRow]

    def validate(self) -> None:
        ids = [r.subject_id for r in self.rows]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"manifest: duplicate subject_ids {dupes}")
        for row in self.rows:
            if not row.sources:
                raise ValidationError(f"manifest: subject {row.subject_id!r} lists no modalities")
            for name, path in row.sources.items():
                if not Path(path).exists():
                    raise ValidationError(f"manifest: subject {row.subject_id!r} {name} path missing: {path}")
            if not Path(row.labels_path).exists():
                raise ValidationError(f"manifest: subject {row.subject_id!r} labels path missing: {row.labels_path}")


def load_manifest(path: str | Path) -> InputManifest:
    """Parse the generation manifest CSV (empty cell = modality absent)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty manifest") from None
        if [h.strip() for h in header] != MANIFEST_COLUMNS:
            raise ValidationError(f"{path}: manifest header must be {','.join(MANIFEST_COLUMNS)}")
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            if len(cells) != len(MANIFEST_COLUMNS):
                raise ValidationError(f"{path}: row {lineno} has {len(cells)} cells, expected {len(MANIFEST_COLUMNS)}")
            subject_id, audio, video, physio, labels = (c.strip() for c in cells)
            if not subject_id:
                raise ValidationError(f"{path}: row {lineno} has empty subject_id")
            if not labels:
                raise ValidationError(f"{path}: row {lineno} has no label CSV")
            sources = {}
            if audio:
                sources["audio"] = audio
            if video:
                sources["video"] = video
            if physio:
                sources["physio"] = physio
            rows.append(ManifestRow(subject_id, sources, labels))
    return InputManifest(rows)


def decode_audio(path: str | Path) -> RawSignal:
    """Decode a PCM WAV file to mono float32 samples in [-1, 1].

    Integer sample formats are scaled by their full range (a 16-bit
    +32767 becomes 32767/32768); multi-channel input is averaged to mono.
    """
    from scipy.io import wavfile

    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: unsupported WAV encoding: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float32) / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float32) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = np.clip(data.astype(np.float32), -1.0, 1.0)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported WAV sample format {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1, dtype=np.float32)
    return RawSignal(samples=samples, rate=float(rate), channel_names=["mono"])


def _read_timed_csv(path: str | Path, expected_columns: list[str] | None = None):
    """Read a `time,<col>,...` CSV into (times, values, column names).

    Raises ValidationError with the offending row number on missing
    columns, non-monotone time, or non-numeric cells.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty CSV") from None
        if not header or header[0] != "time":
            raise ValidationError(f"{path}: first column must be 'time', got {header[:1]}")
        names = header[1:]
        if not names:
            raise ValidationError(f"{path}: no value columns")
        if expected_columns is not None and names != list(expected_columns):
            raise ValidationError(f"{path}: columns {names} do not match expected {list(expected_columns)}")

        times: list[float] = []
        rows: list[list[float]] = []
        for lineno, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ValidationError(f"{path}: row {lineno} has {len(cells)} cells, expected {len(header)}")
            try:
                parsed = [float(c) for c in cells]
            except ValueError:
                raise ValidationError(f"{path}: row {lineno} contains a non-numeric cell") from None
            if times and parsed[0] <= times[-1]:
                raise ValidationError(f"{path}: row {lineno} time {parsed[0]} is not increasing")
            times.append(parsed[0])
            rows.append(parsed[1:])
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(times, dtype=np.float64), np.asarray(rows, dtype=np.float64), names


def decode_numeric_csv(path: str | Path, expected_channels: int | None = None) -> RawSignal:
    """Decode a timed CSV into a uniform-rate signal.

    The rate is inferred from the median inter-row interval; rows whose
    spacing deviates by more than SPACING_TOLERANCE are rejected.
    """
    times, values, names = _read_timed_csv(path)
    if expected_channels is not None and values.shape[1] != expected_channels:
        raise ValidationError(f"{path}: has {values.shape[1]} value columns, expected {expected_channels}")
    if len(times) < 2:
        raise ValidationError(f"{path}: a single row leaves the sample rate undefined")
    intervals = np.diff(times)
    median = float(np.median(intervals))
    if median <= 0:
        raise ValidationError(f"{path}: non-positive median row interval")
    spread = np.abs(intervals - median) / median
    if np.any(spread > SPACING_TOLERANCE):
        worst = int(np.argmax(spread))
        raise ValidationError(
            f"{path}: non-uniform row spacing at row {worst + 3}: interval {intervals[worst]:.6g}s "
            f"vs median {median:.6g}s"
        )
    samples = values[:, 0] if values.shape[1] == 1 else values
    return RawSignal(samples=samples, rate=1.0 / median, channel_names=names)


def decode_video_frames(dir_path: str | Path) -> VideoFrames:
    """Decode a directory of `<milliseconds>.png` frames, sorted by time.

    A frame-list CSV (`time,path` rows, paths relative to the CSV) is
    accepted in place of a directory.
    """
    path = Path(dir_path)
    if path.is_file() and path.suffix.lower() == ".csv":
        entries = _frame_list_from_csv(path)
    elif path.is_dir():
        entries = []
        for f in path.iterdir():
            if f.suffix.lower() != ".png":
                continue
            try:
                millis = int(f.stem)
            except ValueError:
                raise ValidationError(f"{f}: frame filenames must be <milliseconds>.png") from None
            entries.append((millis / 1000.0, f))
    else:
        raise ValidationError(f"{path}: not a frame directory or frame-list CSV")

    if not entries:
        raise ValidationError(f"{path}: no frames found")
    entries.sort(key=lambda e: e[0])

    frames = []
    shape = None
    for ts, file in entries:
        try:
            with Image.open(file) as img:
                arr = np.asarray(img)
        except (UnidentifiedImageError, OSError) as exc:
            raise ValidationError(f"{file}: unreadable image: {exc}") from exc
        if arr.dtype != np.uint8:
            raise ValidationError(f"{file}: expected 8-bit pixels, got {arr.dtype}")
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ValidationError(f"{file}: mixed resolutions {arr.shape} vs {shape}")
        frames.append(arr)

    return VideoFrames(
        timestamps=np.asarray([ts for ts, _ in entries], dtype=np.float64),
        frames=np.stack(frames),
    )


def _frame_list_from_csv(path: Path) -> list[tuple[float, Path]]:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time", "path"]:
            raise ValidationError(f"{path}: frame-list CSV header must be time,path")
        for lineno, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            try:
                ts = float(cells[0])
            except (ValueError, IndexError):
                raise ValidationError(f"{path}: row {lineno} has a bad time cell") from None
            entries.append((ts, path.parent / cells[1].strip()))
    return entries


def chunk_for(rate: float, step_period: float) -> int:
    """Samples per label step; rejects non-integer rate x period products."""
    product = rate * step_period
    chunk = int(round(product))
    if abs(product - chunk) > 1e-6 or chunk < 1:
        raise ValidationError(
            f"sample rate {rate} Hz is not an integer multiple of the label rate "
            f"(rate x step_period = {product}); refusing to round"
        )
    return chunk


def _chop_signal(name: str, signal: RawSignal, num_steps: int, step_period: float) -> np.ndarray:
    """Partition a signal into per-step chunks; trailing samples are dropped."""
    chunk = chunk_for(signal.rate, step_period)
    flat = signal.samples
    available = flat.shape[0] // chunk
    if available < num_steps:
        raise CoverageError(
            f"modality {name!r}: signal covers {available} steps but labels span {num_steps} "
            f"(short by {num_steps - available} step{'s' if num_steps - available != 1 else ''})"
        )
    used = flat[: num_steps * chunk]
    if used.ndim == 1:
        chopped = used.reshape(num_steps, chunk)
    else:
        # Multi-channel rows flatten time-major within each step.
        chopped = used.reshape(num_steps, chunk * used.shape[1])
    return chopped.astype(np.float32)


def _nearest_frames(video: VideoFrames, step_starts: np.ndarray) -> np.ndarray:
    """Pick, per step, the frame whose timestamp is nearest the step start.

    Equidistant candidates resolve toward the earlier frame.
    """
    ts = video.timestamps
    idx = np.searchsorted(ts, step_starts)
    picks = np.empty(len(step_starts), dtype=np.int64)
    for i, (t, j) in enumerate(zip(step_starts, idx)):
        lo = max(j - 1, 0)
        hi = min(j, len(ts) - 1)
        picks[i] = lo if abs(ts[lo] - t) <= abs(ts[hi] - t) else hi
    return video.frames[picks]


def align_to_labels(
    subject_id: str,
    signals: dict[str, RawSignal | VideoFrames],
    label_times: np.ndarray,
    label_values: np.ndarray,
    label_names: list[str],
    step_period: float,
) -> SequenceRecord:
    """Build one record by segmenting each signal along the label timeline."""
    label_times = np.asarray(label_times, dtype=np.float64)
    num_steps = len(label_times)
    if num_steps >= 2:
        intervals = np.diff(label_times)
        off = np.abs(intervals - step_period) / step_period
        if np.any(off > SPACING_TOLERANCE):
            worst = int(np.argmax(off))
            raise ValidationError(
                f"subject {subject_id!r}: label rows are not uniform at step_period={step_period} "
                f"(interval {intervals[worst]:.6g}s at row {worst + 2})"
            )

    modalities: list[ModalityDescriptor] = []
    frames: dict[str, np.ndarray] = {}
    for name, sig in signals.items():
        if isinstance(sig, VideoFrames):
            picked = _nearest_frames(sig, label_times)
            modalities.append(
                ModalityDescriptor(name, "video", 1.0 / step_period, picked.shape[1:], "uint8")
            )
            frames[name] = picked
        else:
            sig.validate()
            chopped = _chop_signal(name, sig, num_steps, step_period)
            kind = "audio" if name == "audio" else "numeric"
            modalities.append(
                ModalityDescriptor(name, kind, sig.rate, (chopped.shape[1],), "float32")
            )
            frames[name] = chopped

    record = SequenceRecord(
        subject_id=subject_id,
        step_period=step_period,
        label_names=list(label_names),
        labels=np.asarray(label_values, dtype=np.float64),
        modalities=modalities,
        frames=frames,
    )
    record.validate()
    return record


def read_label_csv(path: str | Path, expected_names: list[str] | None = None):
    """Label CSV -> (times, values [num_steps, label_dim], names)."""
    return _read_timed_csv(path, expected_columns=expected_names)


def generate_record(row: ManifestRow, step_period: float, label_schema: list[str] | None = None) -> SequenceRecord:
    """Run the full decode-and-align pipeline for one manifest row."""
    times, values, names = read_label_csv(row.labels_path, label_schema)
    signals: dict[str, RawSignal | VideoFrames] = {}
    for name, src in row.sources.items():
        if name == "audio":
            signals[name] = decode_audio(src)
        elif name == "video":
            signals[name] = decode_video_frames(src)
        else:
            signals[name] = decode_numeric_csv(src)
    return align_to_labels(row.subject_id, signals, times, values, names, step_period)
