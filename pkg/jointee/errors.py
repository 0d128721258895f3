"""
Exception hierarchy for the extraction library.

Every error raised on purpose derives from JointEEError so callers (the CLI
in particular) can map failures to exit codes without catching everything.
"""
from typing import Optional


class JointEEError(Exception):
    """Base class for all library errors."""


class DimensionError(JointEEError):
    """Tensor shapes do not conform."""

    def __init__(self, op: str, left: tuple, right: tuple):
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right)
        super().__init__(f"{op}: shape mismatch {self.left} vs {self.right}")


class ContractError(JointEEError):
    """A precondition or postcondition was violated by the caller."""


class ConfigError(JointEEError):
    """Invalid configuration value."""


class CorpusFormatError(JointEEError):
    """A corpus record could not be parsed or validated."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class AnnotationError(CorpusFormatError):
    """Gold annotations are inconsistent (overlaps, bad spans, double roles)."""


class SchemaMismatchError(JointEEError):
    """A label is not part of the label schema in use."""


class EmbeddingFormatError(JointEEError):
    """Pre-trained embedding file is malformed or has the wrong dimension."""


class CheckpointError(JointEEError):
    """Checkpoint container is unreadable or of an unsupported version."""


class EvaluationError(JointEEError):
    """Predictions and gold do not describe the same sentences."""
