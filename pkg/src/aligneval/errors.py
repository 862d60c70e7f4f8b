"""Shared exception types. Module-specific errors subclass AlignEvalError so
the service layer can map them to structured HTTP responses."""

from __future__ import annotations


class AlignEvalError(Exception):
    """Base class for every error raised by this package."""


class MissingField(AlignEvalError):
    """A required named field is absent from a record or a model response."""

    def __init__(self, name: str, line_no: int | None = None):
        self.name = name
        self.line_no = line_no
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"missing field: {name}{where}")


class MalformedLine(AlignEvalError):
    """A line of a JSONL file could not be parsed."""

    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        suffix = f": {detail}" if detail else ""
        super().__init__(f"malformed line {line_no}{suffix}")


class IoFailure(AlignEvalError):
    """Reading or writing a data file failed."""
