"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: ValidationError family -> 2,
I/O and file-format problems -> 1, NumericalAbort -> 3.
"""

from __future__ import annotations


class E2YError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(E2YError):
    """An input, record, config, or graph violates a stated invariant."""


class GraphValidationError(ValidationError):
    """A model graph is malformed; carries the complete list of violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid model graph:\n" + "\n".join(f"  - {v}" for v in violations))


class CoverageError(ValidationError):
    """A raw signal does not span the label timeline."""


class UnsupportedFormatError(E2YError):
    """A file does not carry the expected magic, version, or codec."""


class CorruptionError(E2YError):
    """A record file is truncated or fails its checksum."""


class MetricUndefinedError(E2YError):
    """A score was requested on a series too short or empty to define it."""


class NumericalAbort(E2YError):
    """Training hit a non-finite loss and stopped."""

    def __init__(self, step: int, last_checkpoint: str | None):
        self.step = step
        self.last_checkpoint = last_checkpoint
        ref = last_checkpoint if last_checkpoint else "<none written yet>"
        super().__init__(f"non-finite loss at step {step}; last good checkpoint: {ref}")
