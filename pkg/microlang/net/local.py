"""In-process transport for `local://name` locations"""

import asyncio
from threading import Lock
from typing import Dict, List, Optional, Tuple

from .base import AbstractChannel, AbstractListener, PortHandler
from .location import Location
from .wire import WireMessage
from ..values.types import TypeExpr
from ..utils.exceptions import BindError, TransportError, UnknownLocal
from ..utils.logger import logger


class LocalRegistry:
    """
    Singleton registry of local listeners by name

    Every `local://` listener of the interpreter registers here; dialing a
    name looks the handler up at send time.
    """

    _instance = None
    _lock = Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self._handlers: Dict[str, PortHandler] = {}
        self._lock = Lock()
        self._initialized = True

        logger.debug("LocalRegistry initialized")

    def register(self, name: str, handler: PortHandler) -> None:
        """
        Register a listener

        Raises:
            BindError: When the name is taken
        """
        with self._lock:
            if name in self._handlers:
                raise BindError("?", f"local://{name}", "name already registered")
            self._handlers[name] = handler
            logger.debug(f"Registered local listener '{name}'")

    def unregister(self, name: str, handler: Optional[PortHandler] = None) -> None:
        with self._lock:
            current = self._handlers.get(name)
            if current is not None and (handler is None or current is handler):
                del self._handlers[name]
                logger.debug(f"Unregistered local listener '{name}'")

    def get(self, name: str) -> Optional[PortHandler]:
        with self._lock:
            return self._handlers.get(name)

    def list_all(self) -> List[str]:
        with self._lock:
            return list(self._handlers.keys())

    def count(self) -> int:
        with self._lock:
            return len(self._handlers)

    def clear(self) -> None:
        with self._lock:
            self._handlers.clear()


_registry = LocalRegistry()


def get_local_registry() -> LocalRegistry:
    return _registry


class LocalListener(AbstractListener):
    """Makes a PortHandler reachable under `local://name`"""

    def __init__(self, location: Location, handler: PortHandler, registry: Optional[LocalRegistry] = None):
        super().__init__(location, handler)
        self.registry = registry or get_local_registry()

    async def start(self) -> None:
        try:
            self.registry.register(self.location.name, self.handler)
        except BindError as e:
            raise BindError("?", str(self.location), e.reason)

    async def close(self) -> None:
        self.registry.unregister(self.location.name, self.handler)


class LocalLink:
    """
    Ordered one-directional link with a fixed per-message delay

    Messages are deep-copied on entry and handed to the destination in
    send order by a single pump task.
    """

    def __init__(self, name: str, delay_ms: float, registry: LocalRegistry):
        self.name = name
        self.delay = delay_ms / 1000.0
        self.registry = registry
        self._queue: "asyncio.Queue[Tuple[WireMessage, asyncio.Future]]" = asyncio.Queue()
        self._pump: Optional[asyncio.Task] = None

    def deliver(self, msg: WireMessage, origin: str) -> "asyncio.Future[WireMessage]":
        handler = self.registry.get(self.name)
        if handler is None:
            raise UnknownLocal(self.name)
        return handler.submit(msg.copy(), origin)

    def enqueue(self, msg: WireMessage) -> "asyncio.Future[WireMessage]":
        loop = asyncio.get_running_loop()
        outer = loop.create_future()
        if self.delay <= 0:
            try:
                inner = self.deliver(msg, f"local:{id(self):x}")
            except TransportError as e:
                outer.set_exception(e)
                return outer
            _chain(inner, outer)
            return outer
        if self._pump is None or self._pump.done():
            self._pump = asyncio.create_task(self._run())
        self._queue.put_nowait((msg.copy(), outer))
        return outer

    async def _run(self) -> None:
        while True:
            msg, outer = await self._queue.get()
            await asyncio.sleep(self.delay)
            try:
                inner = self.deliver(msg, f"local:{id(self):x}")
            except TransportError as e:
                if not outer.done():
                    outer.set_exception(e)
                continue
            _chain(inner, outer)

    async def close(self) -> None:
        if self._pump is not None:
            self._pump.cancel()
            try:
                await self._pump
            except asyncio.CancelledError:
                pass
            self._pump = None


def _chain(inner: asyncio.Future, outer: asyncio.Future) -> None:
    """Complete `outer` with a copy of `inner`'s reply"""
    def done(fut: asyncio.Future) -> None:
        if outer.done():
            return
        if fut.cancelled():
            outer.cancel()
        elif fut.exception() is not None:
            outer.set_exception(fut.exception())
        else:
            outer.set_result(fut.result().copy())

    inner.add_done_callback(done)


class LocalChannel(AbstractChannel):
    """Output-port side of a local link"""

    def __init__(
        self,
        location: Location,
        timeout: Optional[float] = None,
        delay_ms: float = 0,
        registry: Optional[LocalRegistry] = None,
    ):
        super().__init__(location, timeout)
        self.link = LocalLink(location.name, delay_ms, registry or get_local_registry())

    async def send(self, msg: WireMessage, expected: Optional[TypeExpr] = None) -> WireMessage:
        reply = self.link.enqueue(msg)
        try:
            return await asyncio.wait_for(reply, self.timeout)
        except asyncio.TimeoutError:
            raise TransportError(str(self.location), f"no reply to {msg.operation} within {self.timeout}s")

    async def close(self) -> None:
        await self.link.close()
