"""Custom exceptions for microlang"""

from typing import Iterable, Optional


class MicrolangError(Exception):
    """Base exception for all microlang errors"""
    pass


class ValidationError(MicrolangError):
    """Input validation failed"""
    pass


class LexError(MicrolangError):
    """Source text could not be tokenized"""

    def __init__(self, span, message: str):
        self.span = span
        self.message = message
        super().__init__(f"{span}: {message}")


class ParseError(MicrolangError):
    """Token stream does not match the grammar"""

    def __init__(self, span, expected: Iterable[str], found: str):
        self.span = span
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        wanted = ", ".join(self.expected) or "nothing"
        super().__init__(f"{span}: expected {wanted}, found {found}")


class CheckError(MicrolangError):
    """Static check failed"""
    pass


class UnknownTypeError(CheckError):
    """A type name does not resolve"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown type {name}")


class UnknownInterface(CheckError):
    """An interface name does not resolve"""

    def __init__(self, name: str, span=None):
        self.name = name
        self.span = span
        super().__init__(f"unknown interface {name}")


class ConflictingSignature(CheckError):
    """The same operation name carries two different signatures"""

    def __init__(self, op_name: str, first, second, first_span=None, second_span=None):
        self.op_name = op_name
        self.first = first
        self.second = second
        self.first_span = first_span
        self.second_span = second_span
        super().__init__(
            f"conflicting signatures for operation {op_name}: {first} vs {second}"
        )


class LocationError(MicrolangError):
    """Location literal is malformed"""

    def __init__(self, text: str, reason: str):
        self.text = text
        self.reason = reason
        super().__init__(f"invalid location {text!r}: {reason}")


class DecodeError(MicrolangError):
    """Wire payload could not be decoded"""

    def __init__(self, reason: str, path: Optional[str] = None, offset: Optional[int] = None):
        self.reason = reason
        self.path = path
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        if path is not None:
            where = f" at {path or '(root)'}"
        super().__init__(f"{reason}{where}")


class EncodeError(MicrolangError):
    """A value tree cannot be written in a wire format"""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class BindError(MicrolangError):
    """An input port location could not be bound"""

    def __init__(self, port: str, location: str, reason: str):
        self.port = port
        self.location = location
        self.reason = reason
        super().__init__(f"cannot bind port {port} at {location}: {reason}")


class TransportError(MicrolangError):
    """Sending over a channel failed"""

    def __init__(self, location: str, reason: str):
        self.location = location
        self.reason = reason
        super().__init__(f"transport failure on {location}: {reason}")


class UnknownLocal(TransportError):
    """Dialed a local:// name nobody listens on"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"local://{name}", "no listener registered")


class RuntimeFault(MicrolangError):
    """Fault raised while executing a process"""

    CORRELATION_ERROR = "CorrelationError"
    TYPE_MISMATCH = "TypeMismatch"
    IO_FAULT = "IOFault"
    UNKNOWN_OPERATION = "UnknownOperation"

    def __init__(self, kind: str, message: str = "", path: Optional[str] = None):
        self.kind = kind
        self.message = message
        self.path = path
        super().__init__(f"{kind}: {message}" if message else kind)
