"""Checker diagnostics"""

from dataclasses import dataclass
from enum import Enum

from ..lang.ast import SourceSpan, NO_SPAN


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """One finding, rendered as `file:line:col: severity: message`"""
    span: SourceSpan
    severity: Severity
    message: str
    code: str = ""

    @classmethod
    def error(cls, span, message: str, code: str = "") -> "Diagnostic":
        return cls(span or NO_SPAN, Severity.ERROR, message, code)

    @classmethod
    def warning(cls, span, message: str, code: str = "") -> "Diagnostic":
        return cls(span or NO_SPAN, Severity.WARNING, message, code)

    @property
    def is_error(self) -> bool:
        return self.severity == Severity.ERROR

    def render(self) -> str:
        span = self.span
        return f"{span.file}:{span.start_line}:{span.start_col}: {self.severity.value}: {self.message}"

    def __str__(self) -> str:
        return self.render()
