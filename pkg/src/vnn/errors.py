"""Exception hierarchy shared by every vnn module."""

from __future__ import annotations


class VNNError(Exception):
    """Base class for all errors raised by the package."""


class BasisError(VNNError, ValueError):
    """Invalid basis family or member index."""


class ShapeError(VNNError, ValueError):
    """Array shapes or widths do not match."""


class LossError(VNNError, ValueError):
    """Invalid loss/target/scaling combination."""


class ConfigError(VNNError):
    """Invalid run configuration."""


class NonFiniteError(VNNError, FloatingPointError):
    """A NaN or infinity appeared in a forward or backward sweep."""

    def __init__(self, message: str, layer: int | None = None):
        self.layer = layer  # 1-based, None for loss-level values
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class TrainingDivergedError(NonFiniteError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, message: str = "training loss is not finite"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class DataError(VNNError):
    """Dataset file could not be read or parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(f"{location}{message}")


class CheckpointError(VNNError):
    """Checkpoint file is malformed, truncated or of another version."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CheckpointVersionError(CheckpointError):
    """Checkpoint magic line is missing or names an unsupported version."""
