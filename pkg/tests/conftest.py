"""Shared fixtures for the microlang test suite"""

import asyncio
from pathlib import Path

import pytest

from microlang.checker import check_program
from microlang.lang import ast, parse_source
from microlang.net import PortHandler, WireMessage, get_local_registry
from microlang.values import BasicType, Kind

SERVICES_DIR = Path(__file__).resolve().parent.parent / "services"

# bindings that put the shop and its two stubs on in-process links
LOCAL_BINDINGS = {
    "Web": "local://shop",
    "Admin": "local://shop-admin",
    "Customers": "local://catalog",
    "Auth": "local://auth",
}


@pytest.fixture(autouse=True)
def clean_local_registry():
    registry = get_local_registry()
    registry.clear()
    yield
    registry.clear()


@pytest.fixture
def services_dir() -> Path:
    return SERVICES_DIR


@pytest.fixture
def compile_source():
    """Parse and check a source text, failing the test on check errors"""

    def compile_(source: str, file: str = "test.ml.svc"):
        checked = check_program(parse_source(source, file))
        assert checked.ok, [d.render() for d in checked.errors]
        return checked

    return compile_


ANY = BasicType(Kind.ANY)

ECHO_SIGNATURES = {
    "echo": ast.OperationSig("echo", ast.OperationKind.REQUEST_RESPONSE, ANY, ANY),
    "note": ast.OperationSig("note", ast.OperationKind.ONE_WAY, ANY),
}


class EchoHandler(PortHandler):
    """
    Port handler answering `echo` with its own payload

    A `delay` child (seconds) postpones the reply; `note` is acknowledged
    at once. Every submitted message is kept in `received`.
    """

    def __init__(self):
        self.received = []

    @property
    def types(self):
        return {}

    def signature(self, operation):
        return ECHO_SIGNATURES.get(operation)

    def submit(self, msg, origin):
        self.received.append(msg)
        loop = asyncio.get_running_loop()
        reply = loop.create_future()
        answer = WireMessage.response(msg.operation, msg.payload.copy() if msg.operation == "echo" else None)
        delay = msg.payload.child("delay")
        if delay is not None and delay.root:
            loop.call_later(delay.root, lambda: reply.done() or reply.set_result(answer))
        else:
            reply.set_result(answer)
        return reply


@pytest.fixture
def echo_handler() -> EchoHandler:
    return EchoHandler()
