"""Exception types raised by neurosym."""

from __future__ import annotations


class NeurosymError(ValueError):
    """Base class for every error neurosym raises on bad input."""


class DataError(NeurosymError):
    """Invalid dataset content, statistics or split request.

    Attributes:
        row: 1-based body row the problem was found on, when it is row specific.
        column: Column name the problem was found in, when it is column specific.
    """

    def __init__(
        self, message: str, *, row: int | None = None, column: str | None = None
    ) -> None:
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ModelFormatError(NeurosymError):
    """A model, tree or rules file is corrupt or has an unsupported version."""


class MetricError(NeurosymError):
    """A metric was asked for on empty, mismatched or constant inputs."""
