"""Abstract transport interfaces shared by every location scheme"""

import asyncio
from abc import ABC, abstractmethod
from typing import Mapping, Optional

from .location import Location
from .wire import WireMessage
from ..lang.ast import OperationSig
from ..values.types import TypeExpr


class PortHandler(ABC):
    """Receiving side of an input port (implemented by the runtime)"""

    @property
    @abstractmethod
    def types(self) -> Mapping[str, TypeExpr]:
        """Named types used to decode payloads"""
        pass

    @abstractmethod
    def signature(self, operation: str) -> Optional[OperationSig]:
        """
        Signature of `operation` on this port

        Returns:
            OperationSig, or None when the port does not expose it
        """
        pass

    @abstractmethod
    def submit(self, msg: WireMessage, origin: str) -> "asyncio.Future[WireMessage]":
        """
        Route a request to the service

        Routing happens synchronously inside the call, so two submits keep
        their order. The returned future resolves to the reply: the
        response or fault for request-response operations, an immediate
        void acknowledgement (or routing fault) for one-ways.

        Args:
            msg: Request message
            origin: Transport-level identifier of the sender

        Returns:
            Future resolving to the reply WireMessage
        """
        pass


class AbstractListener(ABC):
    """Server side of an input port"""

    def __init__(self, location: Location, handler: PortHandler):
        self.location = location
        self.handler = handler

    @property
    def bound_location(self) -> Location:
        """Location actually bound (differs from `location` for port 0)"""
        return self.location

    @abstractmethod
    async def start(self) -> None:
        """
        Start accepting messages

        Raises:
            BindError: When the location cannot be bound
        """
        pass

    @abstractmethod
    async def close(self) -> None:
        """Stop accepting messages and release the location"""
        pass


class AbstractChannel(ABC):
    """Client side of an output port binding"""

    def __init__(self, location: Location, timeout: Optional[float] = None):
        self.location = location
        self.timeout = timeout

    @abstractmethod
    async def send(self, msg: WireMessage, expected: Optional[TypeExpr] = None) -> WireMessage:
        """
        Send a request and wait for its reply

        Args:
            msg: Request message
            expected: Response type used for type-directed decoding

        Returns:
            Response, acknowledgement or fault message

        Raises:
            TransportError: Connection failure or timeout
        """
        pass

    @abstractmethod
    async def close(self) -> None:
        """Release connections"""
        pass
