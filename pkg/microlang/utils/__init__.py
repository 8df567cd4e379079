"""Utilities for microlang"""

from .exceptions import (
    MicrolangError,
    ValidationError,
    LexError,
    ParseError,
    CheckError,
    UnknownTypeError,
    UnknownInterface,
    ConflictingSignature,
    LocationError,
    DecodeError,
    BindError,
    TransportError,
    UnknownLocal,
    RuntimeFault,
)
from .logger import Logger
from .config import Config

__all__ = [
    "MicrolangError",
    "ValidationError",
    "LexError",
    "ParseError",
    "CheckError",
    "UnknownTypeError",
    "UnknownInterface",
    "ConflictingSignature",
    "LocationError",
    "DecodeError",
    "BindError",
    "TransportError",
    "UnknownLocal",
    "RuntimeFault",
    "Logger",
    "Config",
]
