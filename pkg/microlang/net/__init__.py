"""Transports and data protocols"""

from .location import Location, Scheme
from .wire import MessageKind, Protocol, WireMessage, SUPPORTED_PROTOCOLS
from .json_codec import encode_json, decode_json, to_json_object
from .sodep import encode_sodep_lite, decode_sodep_lite, decode_sodep_lite_stream
from .base import PortHandler, AbstractListener, AbstractChannel
from .local import LocalRegistry, LocalChannel, LocalListener, get_local_registry
from .socket import SodepChannel, SodepListener
from .http import HttpChannel, HttpListener, FAULT_STATUS
from .network import listen, dial

__all__ = [
    "Location",
    "Scheme",
    "MessageKind",
    "Protocol",
    "WireMessage",
    "SUPPORTED_PROTOCOLS",
    "encode_json",
    "decode_json",
    "to_json_object",
    "encode_sodep_lite",
    "decode_sodep_lite",
    "decode_sodep_lite_stream",
    "PortHandler",
    "AbstractListener",
    "AbstractChannel",
    "LocalRegistry",
    "LocalChannel",
    "LocalListener",
    "get_local_registry",
    "SodepChannel",
    "SodepListener",
    "HttpChannel",
    "HttpListener",
    "FAULT_STATUS",
    "listen",
    "dial",
]
