"""Static checker - interface algebra, routing, correlation and starting operations"""

from .diagnostics import Diagnostic, Severity
from .interfaces import ResolvedInterface, resolve_interface
from .starting import EntryInfo, analyze_entry, starting_operations
from .program import CheckedProgram, check_program

__all__ = [
    "Diagnostic",
    "Severity",
    "ResolvedInterface",
    "resolve_interface",
    "EntryInfo",
    "analyze_entry",
    "starting_operations",
    "CheckedProgram",
    "check_program",
]
