"""Command-line interface for microlang"""

from .main import main

__all__ = ["main"]
