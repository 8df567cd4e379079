"""Centralized logging for microlang"""

import logging
import sys
from typing import Optional

from .config import Config

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _level(name: Optional[str]) -> int:
    name = (name or "INFO").upper()
    return getattr(logging, name) if name in LEVELS else logging.INFO


class Logger:
    """
    Package logger: one stderr handler on the `microlang` logger

    Standard output is reserved for data (event traces, call replies), so
    diagnostics never go there. Services log through child loggers named
    `microlang.<service>`.
    """

    _instance: Optional['Logger'] = None

    def __init__(self, level: Optional[str] = None):
        self.logger = logging.getLogger("microlang")
        self.logger.setLevel(_level(level))

        if not self.logger.handlers:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter(
                '[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            ))
            self.logger.addHandler(handler)

    @classmethod
    def get(cls, level: Optional[str] = None) -> logging.Logger:
        """Get or create the package logger"""
        if cls._instance is None:
            cls._instance = Logger(level or Config.get_log_level())
        return cls._instance.logger

    @classmethod
    def child(cls, name: str) -> logging.Logger:
        """Logger for one service; inherits level and handler from the package logger"""
        return cls.get().getChild(name)

    @classmethod
    def set_level(cls, level: str):
        """Change log level (unknown names fall back to INFO)"""
        cls.get().setLevel(_level(level))


logger = Logger.get()
