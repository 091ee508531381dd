"""End-to-end sequence modeling on raw multimodal streams.

Two-phase workflow: raw sources are decoded, aligned to the label
timeline, and serialized as .e2y record files; a provider then batches
windowed subsequences into padded, masked tensors for composable model
graphs scored and optimized with the concordance correlation
coefficient, with an optional fitted post-processing chain.
"""

from .errors import (
    CorruptionError,
    CoverageError,
    E2YError,
    GraphValidationError,
    MetricUndefinedError,
    NumericalAbort,
    UnsupportedFormatError,
    ValidationError,
)
from .records import (
    ModalityDescriptor,
    RecordHeader,
    SequenceRecord,
    WriteReport,
    read_header,
    read_record,
    read_records,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "CorruptionError",
    "CoverageError",
    "E2YError",
    "GraphValidationError",
    "MetricUndefinedError",
    "ModalityDescriptor",
    "NumericalAbort",
    "RecordHeader",
    "SequenceRecord",
    "UnsupportedFormatError",
    "ValidationError",
    "WriteReport",
    "read_header",
    "read_record",
    "read_records",
    "write_records",
    "__version__",
]
