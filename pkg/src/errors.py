"""
Error types shared across the toolchain.

All of them are ValueErrors so existing ``except ValueError`` handlers keep working.
"""

from dataclasses import dataclass
from typing import List, Optional


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal (or collected) problem report."""

    severity: str  # fatal | warning | info
    code: str
    message: str
    file: Optional[str] = None
    line: Optional[int] = None

    @property
    def is_fatal(self) -> bool:
        return self.severity == "fatal"

    def to_dict(self) -> dict:
        record = {"severity": self.severity, "code": self.code, "message": self.message}
        if self.file is not None:
            record["file"] = self.file
        if self.line is not None:
            record["line"] = self.line
        return record

    def __str__(self) -> str:
        where = ""
        if self.file:
            where = f" ({self.file}" + (f":{self.line}" if self.line else "") + ")"
        return f"[{self.severity}] {self.code}: {self.message}{where}"


class CvdpError(ValueError):
    """Base class for toolchain errors."""


class GraphFormatError(CvdpError):
    """Malformed graph file."""

    def __init__(self, message: str, line: int, token: Optional[str] = None):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.token = token


class ConfigurationError(CvdpError):
    """Invalid configuration; carries every collected diagnostic."""

    def __init__(self, message: str, diagnostics: Optional[List[Diagnostic]] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class EmbeddingError(CvdpError):
    pass


class AlignmentError(CvdpError):
    pass


class DatasetError(CvdpError):
    """Problem with an input table; row numbers are 1-based file lines."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row
        self.column = column


class LearnerError(CvdpError):
    pass


class EvaluationError(CvdpError):
    pass
