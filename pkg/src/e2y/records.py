"""Serialized sequence records: one subject's aligned raw frames and labels.

File layout (all integers little-endian):

    magic  b"E2Y1"
    uint16 format version (currently 1)
    uint32 header length in bytes
    header UTF-8 JSON: subject_id, step_period, num_steps, label_names,
           modality descriptor list (name, kind, sample_rate, frame_shape, dtype)
    per step, in step order:
        uint32  step index
        float64 x label_dim   label values
        per modality, in header order:
            uint32 payload length
            raw frame payload (C-order, declared dtype, little-endian)
    uint32 CRC32 over everything after the magic

Labels are stored as float64 and frames as the declared dtype, so a
write -> read round trip is bit-exact. Writing carries no timestamps:
the same record always produces byte-identical files.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import CorruptionError, UnsupportedFormatError, ValidationError

MAGIC = b"E2Y1"
FORMAT_VERSION = 1
RECORD_SUFFIX = ".e2y"

MODALITY_KINDS = ("audio", "video", "numeric")
DTYPES = {"float32": np.dtype("<f4"), "uint8": np.dtype("u1")}

# Tolerance on |sample_rate * step_period - round(...)|: alignment products
# that are not integers up to float noise are rejected, never rounded.
_ALIGNMENT_TOL = 1e-6


@dataclass
class ModalityDescriptor:
    """Declares one raw input stream of a record."""

    name: str
    kind: str
    sample_rate: float
    frame_shape: tuple[int, ...]
    dtype: str = "float32"

    def __post_init__(self):
        self.frame_shape = tuple(int(d) for d in self.frame_shape)

    def validate(self) -> None:
        if not self.name:
            raise ValidationError("modality name must be non-empty")
        if self.kind not in MODALITY_KINDS:
            raise ValidationError(f"modality {self.name!r}: unknown kind {self.kind!r}")
        if not self.sample_rate > 0:
            raise ValidationError(f"modality {self.name!r}: sample_rate must be > 0")
        if not self.frame_shape or any(d < 1 for d in self.frame_shape):
            raise ValidationError(f"modality {self.name!r}: frame_shape dims must be >= 1")
        if self.dtype not in DTYPES:
            raise ValidationError(f"modality {self.name!r}: unsupported dtype {self.dtype!r}")
        if self.kind == "audio" and (self.dtype != "float32" or len(self.frame_shape) != 1):
            raise ValidationError(f"modality {self.name!r}: audio requires float32 and a 1-D frame_shape")
        if self.kind == "video" and (self.dtype != "uint8" or len(self.frame_shape) != 3):
            raise ValidationError(f"modality {self.name!r}: video requires uint8 and a 3-D frame_shape")

    @property
    def frame_size(self) -> int:
        return int(np.prod(self.frame_shape))

    @property
    def numpy_dtype(self) -> np.dtype:
        return DTYPES[self.dtype]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "sample_rate": float(self.sample_rate),
            "frame_shape": list(self.frame_shape),
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModalityDescriptor":
        return cls(
            name=d["name"],
            kind=d["kind"],
            sample_rate=float(d["sample_rate"]),
            frame_shape=tuple(d["frame_shape"]),
            dtype=d["dtype"],
        )


@dataclass
class SequenceRecord:
    """One subject/session: per-step raw frames per modality plus aligned labels.

    ``labels`` is float64 of shape [num_steps, label_dim]; ``frames[name]``
    has shape [num_steps, *frame_shape] in the modality's declared dtype.
    """

    subject_id: str
    step_period: float
    label_names: list[str]
    labels: np.ndarray
    modalities: list[ModalityDescriptor]
    frames: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.labels.ndim == 1:
            self.labels = self.labels[:, None]

    @property
    def num_steps(self) -> int:
        return self.labels.shape[0]

    @property
    def label_dim(self) -> int:
        return self.labels.shape[1]

    def validate(self) -> None:
        rid = self.subject_id
        if not rid:
            raise ValidationError("record subject_id must be non-empty")
        if not self.step_period > 0:
            raise ValidationError(f"record {rid!r}: step_period must be > 0")
        if self.labels.ndim != 2 or self.num_steps < 1:
            raise ValidationError(f"record {rid!r}: labels must be [num_steps >= 1, label_dim]")
        if self.label_dim < 1:
            raise ValidationError(f"record {rid!r}: label_dim must be >= 1")
        if len(self.label_names) != self.label_dim:
            raise ValidationError(f"record {rid!r}: label_names length != label_dim")
        names = [m.name for m in self.modalities]
        if len(set(names)) != len(names):
            raise ValidationError(f"record {rid!r}: duplicate modality names")
        if set(self.frames) != set(names):
            raise ValidationError(f"record {rid!r}: frames keys do not match modality names")
        for mod in self.modalities:
            mod.validate()
            arr = np.asarray(self.frames[mod.name])
            want = (self.num_steps,) + mod.frame_shape
            if arr.shape != want:
                raise ValidationError(
                    f"record {rid!r}: modality {mod.name!r} frames have shape {arr.shape}, expected {want}"
                )
            if arr.dtype != mod.numpy_dtype:
                raise ValidationError(
                    f"record {rid!r}: modality {mod.name!r} frames dtype {arr.dtype}, expected {mod.dtype}"
                )
            if mod.kind == "audio":
                product = mod.sample_rate * self.step_period
                if abs(product - round(product)) > _ALIGNMENT_TOL:
                    raise ValidationError(
                        f"record {rid!r}: modality {mod.name!r} sample_rate x step_period = {product} "
                        "is not an integer; refusing to round"
                    )
                if mod.frame_shape[0] != int(round(product)):
                    raise ValidationError(
                        f"record {rid!r}: modality {mod.name!r} frame_shape {mod.frame_shape[0]} != "
                        f"round(sample_rate x step_period) = {int(round(product))}"
                    )

    def header_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "step_period": float(self.step_period),
            "num_steps": int(self.num_steps),
            "label_names": list(self.label_names),
            "modalities": [m.to_dict() for m in self.modalities],
        }


@dataclass
class RecordHeader:
    """Record metadata, readable without decoding any frame payloads."""

    subject_id: str
    step_period: float
    num_steps: int
    label_names: list[str]
    modalities: list[ModalityDescriptor]

    @classmethod
    def from_dict(cls, d: dict) -> "RecordHeader":
        return cls(
            subject_id=d["subject_id"],
            step_period=float(d["step_period"]),
            num_steps=int(d["num_steps"]),
            label_names=list(d["label_names"]),
            modalities=[ModalityDescriptor.from_dict(m) for m in d["modalities"]],
        )


@dataclass
class WriteReport:
    """What write_records produced: per-file names, sizes, and checksums."""

    files: list[tuple[str, int, int]] = field(default_factory=list)  # (path, bytes, crc32)

    @property
    def num_files(self) -> int:
        return len(self.files)

    @property
    def total_bytes(self) -> int:
        return sum(n for _, n, _ in self.files)


def encode_record(record: SequenceRecord) -> bytes:
    """Serialize one validated record to its byte representation."""
    record.validate()
    header = json.dumps(record.header_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = bytearray()
    out += struct.pack("<H", FORMAT_VERSION)
    out += struct.pack("<I", len(header))
    out += header
    labels = np.ascontiguousarray(record.labels, dtype="<f8")
    for i in range(record.num_steps):
        out += struct.pack("<I", i)
        out += labels[i].tobytes()
        for mod in record.modalities:
            payload = np.ascontiguousarray(record.frames[mod.name][i], dtype=mod.numpy_dtype).tobytes()
            out += struct.pack("<I", len(payload))
            out += payload
    crc = zlib.crc32(bytes(out))
    return MAGIC + bytes(out) + struct.pack("<I", crc)


def write_records(records: Iterable[SequenceRecord], path: str | Path) -> WriteReport:
    """Write one ``<subject_id>.e2y`` file per record under ``path``.

    Records are validated first; any invariant violation raises before a
    single byte is written. An empty record list yields an empty report.
    """
    records = list(records)
    seen: set[str] = set()
    blobs = []
    for rec in records:
        blob = encode_record(rec)
        if rec.subject_id in seen:
            raise ValidationError(f"duplicate subject_id {rec.subject_id!r} in one write batch")
        seen.add(rec.subject_id)
        blobs.append((rec.subject_id, blob))

    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = WriteReport()
    for subject_id, blob in blobs:
        target = out_dir / f"{subject_id}{RECORD_SUFFIX}"
        try:
            target.write_bytes(blob)
        except OSError as exc:
            raise OSError(f"failed writing record to {target}: {exc}") from exc
        crc = struct.unpack("<I", blob[-4:])[0]
        report.files.append((str(target), len(blob), crc))
    return report


class _Cursor:
    """Byte reader that reports the offset of any premature end of data."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptionError(
                f"{self.path}: truncated while reading {what} at byte offset {self.pos} "
                f"(wanted {n} bytes, {len(self.data) - self.pos} left)"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def _parse_header(cur: _Cursor) -> RecordHeader:
    version = cur.u16("format version")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"{cur.path}: unsupported format version {version}")
    header_len = cur.u32("header length")
    raw = cur.take(header_len, "header")
    try:
        header = RecordHeader.from_dict(json.loads(raw.decode("utf-8")))
        for mod in header.modalities:
            mod.validate()
    except (ValueError, KeyError, TypeError, ValidationError) as exc:
        raise CorruptionError(f"{cur.path}: undecodable header: {exc}") from exc
    return header


def read_header(path: str | Path) -> RecordHeader:
    """Read only the header of a record file.

    Fast metadata peek for inspection; does NOT verify the payload
    checksum. Use read_records for integrity-checked access.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        prefix = fh.read(10)
        if len(prefix) < 10 or prefix[:4] != MAGIC:
            raise UnsupportedFormatError(f"{path}: not a record file (bad magic)")
        header_len = struct.unpack("<I", prefix[6:10])[0]
        body = fh.read(header_len)
    cur = _Cursor(prefix[4:] + body, str(path))
    return _parse_header(cur)


def read_record(path: str | Path) -> SequenceRecord:
    """Read and fully verify a single record file."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise UnsupportedFormatError(f"{path}: not a record file (bad magic)")

    cur = _Cursor(data, str(path))
    cur.pos = 4
    header = _parse_header(cur)
    if header.num_steps < 1:
        raise CorruptionError(f"{path}: header claims num_steps {header.num_steps}")
    label_dim = len(header.label_names)

    labels = np.empty((header.num_steps, label_dim), dtype=np.float64)
    frames = {
        m.name: np.empty((header.num_steps,) + m.frame_shape, dtype=m.numpy_dtype)
        for m in header.modalities
    }
    for i in range(header.num_steps):
        idx = cur.u32(f"step {i} index")
        if idx != i:
            raise CorruptionError(f"{path}: step {i} carries index {idx}")
        raw = cur.take(8 * label_dim, f"step {i} labels")
        labels[i] = np.frombuffer(raw, dtype="<f8")
        for mod in header.modalities:
            expected = mod.frame_size * mod.numpy_dtype.itemsize
            n = cur.u32(f"step {i} modality {mod.name!r} payload length")
            if n != expected:
                raise CorruptionError(
                    f"{path}: step {i} modality {mod.name!r} payload is {n} bytes, expected {expected}"
                )
            payload = cur.take(n, f"step {i} modality {mod.name!r} payload")
            frames[mod.name][i] = np.frombuffer(payload, dtype=mod.numpy_dtype).reshape(mod.frame_shape)

    stored_crc = cur.u32("trailing checksum")
    if cur.pos != len(data):
        raise CorruptionError(f"{path}: {len(data) - cur.pos} trailing bytes after checksum")
    actual_crc = zlib.crc32(data[4:-4])
    if stored_crc != actual_crc:
        raise CorruptionError(f"{path}: checksum mismatch (stored {stored_crc:#010x}, computed {actual_crc:#010x})")

    return SequenceRecord(
        subject_id=header.subject_id,
        step_period=header.step_period,
        label_names=header.label_names,
        labels=labels,
        modalities=header.modalities,
        frames=frames,
    )


def list_record_files(path: str | Path) -> list[Path]:
    """Record files under a directory (sorted), or the single file itself."""
    path = Path(path)
    if path.is_dir():
        return sorted(path.glob(f"*{RECORD_SUFFIX}"))
    return [path]


def read_records(path: str | Path) -> Iterator[SequenceRecord]:
    """Yield verified records from a file or directory, in stored order.

    Files are read lazily, one record at a time; each file's checksum is
    verified before its record is yielded.
    """
    for file in list_record_files(path):
        yield read_record(file)
