"""HTTP + JSON protocol: aiohttp for input ports, httpx for output ports"""

import json
from typing import Optional

import httpx
from aiohttp import web

from .base import AbstractChannel, AbstractListener, PortHandler
from .json_codec import decode_json, encode_json
from .location import Location
from .wire import MessageKind, WireMessage
from ..lang.ast import OperationKind
from ..values.types import TypeExpr
from ..utils.config import Config
from ..utils.exceptions import BindError, DecodeError, EncodeError, RuntimeFault, TransportError
from ..utils.logger import logger

JSON_CONTENT_TYPE = "application/json"

FAULT_STATUS = {
    RuntimeFault.CORRELATION_ERROR: 409,
    RuntimeFault.TYPE_MISMATCH: 400,
    RuntimeFault.IO_FAULT: 502,
    RuntimeFault.UNKNOWN_OPERATION: 404,
}


def fault_body(name: str, path: Optional[str] = None) -> dict:
    body = {"fault": name}
    if path is not None:
        body["path"] = path
    return body


def fault_status(name: str) -> int:
    return FAULT_STATUS.get(name, 500)


class HttpListener(AbstractListener):
    """
    aiohttp server exposing every operation of a port as `POST /<op>`

    Request-response operations answer 200 with the JSON-encoded response;
    one-ways answer 202 with an empty body once routed. Faults answer with
    the mapped status and a `{"fault": ...}` body.
    """

    def __init__(self, location: Location, handler: PortHandler):
        super().__init__(location, handler)
        self._runner: Optional[web.AppRunner] = None
        self._bound: Optional[Location] = None

    @property
    def bound_location(self) -> Location:
        return self._bound or self.location

    async def start(self) -> None:
        app = web.Application()
        app.router.add_post("/{operation}", self._handle)
        self._runner = web.AppRunner(app, access_log=None)
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.location.host, self.location.port)
        try:
            await site.start()
        except OSError as e:
            await self._runner.cleanup()
            self._runner = None
            raise BindError("?", str(self.location), e.strerror or str(e))
        port = self._runner.addresses[0][1]
        self._bound = self.location.with_port(port)
        logger.debug(f"HTTP listener bound at {self._bound}")

    async def _handle(self, request: web.Request) -> web.Response:
        operation = request.match_info["operation"]
        sig = self.handler.signature(operation)
        if sig is None:
            return self._fault(RuntimeFault.UNKNOWN_OPERATION)

        text = await request.text()
        try:
            payload = decode_json(text or "{}", sig.request, self.handler.types)
        except DecodeError as e:
            return self._fault(RuntimeFault.TYPE_MISMATCH, e.path or "")

        reply = await self.handler.submit(WireMessage.request(operation, payload), f"http:{request.remote}")
        if reply.is_fault:
            path_node = reply.payload.child("path")
            return self._fault(reply.fault_name, path_node.root if path_node is not None else None)
        if sig.kind == OperationKind.ONE_WAY:
            return web.Response(status=202)
        try:
            text = encode_json(reply.payload)
        except EncodeError as e:
            logger.warning(f"Reply to {operation} cannot be encoded: {e}")
            return self._fault(RuntimeFault.IO_FAULT)
        return web.Response(status=200, text=text, content_type=JSON_CONTENT_TYPE)

    @staticmethod
    def _fault(name: str, path: Optional[str] = None) -> web.Response:
        return web.json_response(fault_body(name, path), status=fault_status(name))

    async def close(self) -> None:
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None


def reply_from_http(operation: str, status: int, text: str, expected: Optional[TypeExpr] = None, types=None) -> WireMessage:
    """Translate an HTTP response back into a WireMessage"""
    if status == 202:
        return WireMessage.response(operation)
    if status == 200:
        try:
            return WireMessage.response(operation, decode_json(text or "{}", expected, types))
        except DecodeError as e:
            return WireMessage.fault(operation, RuntimeFault.TYPE_MISMATCH, e.path)
    try:
        body = json.loads(text) if text else {}
    except ValueError:
        body = {}
    name = body.get("fault") if isinstance(body, dict) else None
    if not isinstance(name, str):
        name = RuntimeFault.IO_FAULT
    path = body.get("path") if isinstance(body, dict) and isinstance(body.get("path"), str) else None
    return WireMessage.fault(operation, name, path)


class HttpChannel(AbstractChannel):
    """httpx client bound to one `socket://host:port`"""

    def __init__(self, location: Location, timeout: Optional[float] = None, types=None):
        super().__init__(location, timeout)
        self.base_url = f"http://{location.host}:{location.port}"
        self.types = types or {}
        self.client = httpx.AsyncClient(
            timeout=timeout,
            limits=httpx.Limits(
                max_connections=Config.HTTP_MAX_CONNECTIONS,
                max_keepalive_connections=Config.HTTP_MAX_KEEPALIVE,
            ),
        )
        logger.debug(f"HttpChannel initialized: {self.base_url}")

    async def send(self, msg: WireMessage, expected: Optional[TypeExpr] = None) -> WireMessage:
        try:
            content = encode_json(msg.payload).encode("utf-8")
        except EncodeError as e:
            raise TransportError(str(self.location), str(e))
        try:
            response = await self.client.post(
                f"{self.base_url}/{msg.operation}",
                content=content,
                headers={"Content-Type": JSON_CONTENT_TYPE},
            )
        except httpx.TimeoutException:
            raise TransportError(str(self.location), f"no reply to {msg.operation} within {self.timeout}s")
        except httpx.HTTPError as e:
            raise TransportError(str(self.location), str(e) or type(e).__name__)
        reply = reply_from_http(msg.operation, response.status_code, response.text, expected, self.types)
        if reply.kind == MessageKind.FAULT:
            logger.debug(f"HTTP {response.status_code} from {self.base_url}/{msg.operation}: {reply.fault_name}")
        return reply

    async def close(self) -> None:
        await self.client.aclose()
