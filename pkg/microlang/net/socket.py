"""sodep-lite over TCP sockets"""

import asyncio
import itertools
from typing import Dict, Optional, Set

from .base import AbstractChannel, AbstractListener, PortHandler
from .location import Location
from .sodep import HEADER_SIZE, decode_body, encode_sodep_lite, frame_length
from .wire import MessageKind, WireMessage
from ..values.types import TypeExpr
from ..utils.exceptions import BindError, DecodeError, EncodeError, RuntimeFault, TransportError
from ..utils.logger import logger


async def read_frame(reader: asyncio.StreamReader) -> Optional[WireMessage]:
    """
    Read one frame, or None on a clean end of stream

    Raises:
        DecodeError: Malformed frame
        asyncio.IncompleteReadError: Stream ended inside a frame
    """
    try:
        header = await reader.readexactly(HEADER_SIZE)
    except asyncio.IncompleteReadError as e:
        if not e.partial:
            return None
        raise
    length = frame_length(header)
    body = await reader.readexactly(length)
    return decode_body(body)


class SodepListener(AbstractListener):
    """
    TCP server speaking sodep-lite

    Each connection may carry many in-flight requests; replies are written
    back with the request's corrId as soon as they are ready.
    """

    def __init__(self, location: Location, handler: PortHandler):
        super().__init__(location, handler)
        self._server: Optional[asyncio.AbstractServer] = None
        self._connections: Set[asyncio.Task] = set()
        self._bound: Optional[Location] = None

    @property
    def bound_location(self) -> Location:
        return self._bound or self.location

    async def start(self) -> None:
        try:
            self._server = await asyncio.start_server(self._serve, self.location.host, self.location.port)
        except OSError as e:
            raise BindError("?", str(self.location), e.strerror or str(e))
        port = self._server.sockets[0].getsockname()[1]
        self._bound = self.location.with_port(port)
        logger.debug(f"sodep-lite listener bound at {self._bound}")

    async def _serve(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        task = asyncio.current_task()
        self._connections.add(task)
        peer = writer.get_extra_info("peername")
        origin = f"socket:{peer[0]}:{peer[1]}" if peer else "socket:?"
        write_lock = asyncio.Lock()
        pending: Set[asyncio.Task] = set()
        try:
            while True:
                try:
                    msg = await read_frame(reader)
                except DecodeError as e:
                    logger.warning(f"Dropping connection {origin}: {e}")
                    break
                except (asyncio.IncompleteReadError, ConnectionError):
                    break
                if msg is None:
                    break
                if msg.kind != MessageKind.REQUEST:
                    logger.warning(f"Discarding non-request frame from {origin} ({msg.kind.name})")
                    continue
                reply = self.handler.submit(msg, origin)
                reply_task = asyncio.create_task(self._reply(writer, write_lock, msg, reply))
                pending.add(reply_task)
                reply_task.add_done_callback(pending.discard)
            if pending:
                await asyncio.gather(*pending, return_exceptions=True)
        finally:
            for reply_task in pending:
                reply_task.cancel()
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass
            self._connections.discard(task)

    async def _reply(self, writer, write_lock: asyncio.Lock, request: WireMessage, reply: asyncio.Future) -> None:
        answer = await reply
        answer = WireMessage(answer.kind, request.operation, answer.payload, request.corr_id)
        try:
            frame = encode_sodep_lite(answer)
        except EncodeError as e:
            logger.warning(f"Reply to {request.operation} cannot be encoded: {e}")
            fault = WireMessage.fault(request.operation, RuntimeFault.IO_FAULT, corr_id=request.corr_id)
            frame = encode_sodep_lite(fault)
        async with write_lock:
            try:
                writer.write(frame)
                await writer.drain()
            except (ConnectionError, OSError) as e:
                logger.debug(f"Reply to {request.operation} lost: {e}")

    async def close(self) -> None:
        if self._server is None:
            return
        self._server.close()
        for task in list(self._connections):
            task.cancel()
        if self._connections:
            await asyncio.gather(*self._connections, return_exceptions=True)
        await self._server.wait_closed()
        self._server = None


class SodepChannel(AbstractChannel):
    """
    Multiplexed sodep-lite client

    One TCP connection per channel, opened lazily; replies are paired with
    requests by corrId.
    """

    def __init__(self, location: Location, timeout: Optional[float] = None):
        super().__init__(location, timeout)
        self._reader: Optional[asyncio.StreamReader] = None
        self._writer: Optional[asyncio.StreamWriter] = None
        self._receiver: Optional[asyncio.Task] = None
        self._pending: Dict[int, asyncio.Future] = {}
        self._ids = itertools.count(1)
        self._connect_lock = asyncio.Lock()
        self._write_lock = asyncio.Lock()

    async def _ensure_connected(self) -> None:
        async with self._connect_lock:
            if self._writer is not None and not self._writer.is_closing():
                return
            try:
                self._reader, self._writer = await asyncio.open_connection(self.location.host, self.location.port)
            except OSError as e:
                raise TransportError(str(self.location), e.strerror or str(e))
            self._receiver = asyncio.create_task(self._receive())
            logger.debug(f"Dialed {self.location} (sodep-lite)")

    async def _receive(self) -> None:
        reason = "connection closed"
        try:
            while True:
                msg = await read_frame(self._reader)
                if msg is None:
                    break
                waiter = self._pending.pop(msg.corr_id, None)
                if waiter is None:
                    logger.warning(f"Discarding reply with unknown corrId {msg.corr_id} from {self.location}")
                elif not waiter.done():
                    waiter.set_result(msg)
        except (DecodeError, asyncio.IncompleteReadError, ConnectionError) as e:
            reason = str(e) or type(e).__name__
        finally:
            self._fail_pending(reason)
            if self._writer is not None:
                self._writer.close()

    def _fail_pending(self, reason: str) -> None:
        pending, self._pending = self._pending, {}
        for waiter in pending.values():
            if not waiter.done():
                waiter.set_exception(TransportError(str(self.location), reason))

    async def send(self, msg: WireMessage, expected: Optional[TypeExpr] = None) -> WireMessage:
        await self._ensure_connected()
        corr_id = next(self._ids)
        waiter = asyncio.get_running_loop().create_future()
        self._pending[corr_id] = waiter
        try:
            frame = encode_sodep_lite(WireMessage(msg.kind, msg.operation, msg.payload, corr_id))
        except EncodeError as e:
            self._pending.pop(corr_id, None)
            raise TransportError(str(self.location), str(e))
        try:
            async with self._write_lock:
                self._writer.write(frame)
                await self._writer.drain()
        except (ConnectionError, OSError) as e:
            self._pending.pop(corr_id, None)
            raise TransportError(str(self.location), str(e))
        try:
            reply = await asyncio.wait_for(waiter, self.timeout)
        except asyncio.TimeoutError:
            self._pending.pop(corr_id, None)
            raise TransportError(str(self.location), f"no reply to {msg.operation} within {self.timeout}s")
        return WireMessage(reply.kind, msg.operation, reply.payload, msg.corr_id)

    async def close(self) -> None:
        if self._receiver is not None:
            self._receiver.cancel()
            try:
                await self._receiver
            except (asyncio.CancelledError, Exception):
                pass
            self._receiver = None
        if self._writer is not None:
            self._writer.close()
            try:
                await self._writer.wait_closed()
            except (ConnectionError, OSError):
                pass
            self._writer = None
        self._fail_pending("channel closed")
