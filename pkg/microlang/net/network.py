"""Factory pairing a location scheme and a protocol with a transport"""

from typing import Mapping, Optional

from .base import AbstractChannel, AbstractListener, PortHandler
from .http import HttpChannel, HttpListener
from .local import LocalChannel, LocalListener, LocalRegistry
from .location import Location
from .socket import SodepChannel, SodepListener
from .wire import Protocol
from ..values.types import TypeExpr
from ..utils.exceptions import ValidationError


def _protocol(name: str) -> Protocol:
    try:
        return Protocol(name)
    except ValueError:
        raise ValidationError(f"unsupported protocol {name!r} (supported: http, sodep-lite)")


def listen(
    location: Location,
    protocol: str,
    handler: PortHandler,
    registry: Optional[LocalRegistry] = None,
) -> AbstractListener:
    """
    Create (not start) the listener for an input port

    On `local://` the protocol is only validated: messages cross the link
    as copied WireMessages.
    """
    proto = _protocol(protocol)
    if location.is_local:
        return LocalListener(location, handler, registry)
    if proto == Protocol.HTTP:
        return HttpListener(location, handler)
    return SodepListener(location, handler)


def dial(
    location: Location,
    protocol: str,
    timeout: Optional[float] = None,
    delay_ms: float = 0,
    types: Optional[Mapping[str, TypeExpr]] = None,
    registry: Optional[LocalRegistry] = None,
) -> AbstractChannel:
    """Create the channel for an output port binding"""
    proto = _protocol(protocol)
    if location.is_local:
        return LocalChannel(location, timeout, delay_ms, registry)
    if proto == Protocol.HTTP:
        return HttpChannel(location, timeout, types)
    return SodepChannel(location, timeout)
