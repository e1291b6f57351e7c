"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SchedulerError(Exception):
    """Base class for all mcmpipe errors."""


class ParseError(SchedulerError):
    """A network/hardware/schedule file could not be parsed."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        loc = []
        if field is not None:
            loc.append(f"field '{field}'")
        if line is not None:
            loc.append(f"line {line}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.field = field
        self.line = line


class InvariantError(SchedulerError):
    """A constructed value violates a structural constraint; names the constraint."""


class InvalidLayerError(InvariantError):
    """Layer dimensions do not produce a valid output shape."""


class UnsupportedPartitionError(SchedulerError):
    """The partition scheme is not defined for this layer kind."""


class InvalidSplitError(SchedulerError):
    """A spatial split exceeds the rows available to divide."""


class SizeMismatchError(SchedulerError):
    """Region sizes do not sum to the mesh size."""


class TooManyClustersError(SchedulerError):
    """More clusters requested than chiplets available."""


class NoFeasibleScheduleError(SchedulerError):
    """No candidate configuration satisfies the capacity constraints."""


class LayerTooLargeError(NoFeasibleScheduleError):
    """A single layer's weights exceed what the package can hold."""


class InfeasibleScheduleError(SchedulerError):
    """A concrete schedule exceeds per-chiplet weight capacity; names the chiplet."""


class SearchSpaceTooLargeError(SchedulerError):
    """Exhaustive enumeration would exceed the configured candidate limit."""

    def __init__(self, message: str, size: int):
        super().__init__(message)
        self.size = size
