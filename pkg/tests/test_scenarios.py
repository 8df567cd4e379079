"""End-to-end scenarios: the shop, its catalog and the auth stub in one interpreter"""

import asyncio
import dataclasses
import logging
import random

import httpx
import pytest

from microlang.api import call_operation, get_service, list_services, start_service, stop_all_services
from microlang.checker import check_program
from microlang.lang import ast, parse_source
from microlang.net import MessageKind
from microlang.runtime import EventKind, EventLog, normalize
from microlang.utils.exceptions import RuntimeFault
from microlang.values import ValueNode

from conftest import LOCAL_BINDINGS

PRICES = {"p1": 2.5, "p2": 4.0, "p3": 1.0}


async def start_stack(services_dir, events, seed=7, shop=None, bindings=None):
    """Start catalog, auth and shop; `shop` may replace the shop's checked program"""
    bindings = dict(LOCAL_BINDINGS, **(bindings or {}))
    services = []
    for index, name in enumerate(("catalog", "auth", "shop")):
        source = shop if name == "shop" and shop is not None else services_dir / f"{name}.ml.svc"
        services.append(await start_service(source, bindings=bindings, seed=seed + index, events=events))
    return services


async def stop_stack(services):
    for service in reversed(services):
        await service.stop()


def request(**fields) -> ValueNode:
    payload = ValueNode()
    for name, item in fields.items():
        payload.add(name, ValueNode(item))
    return payload


class ShopClient:
    def __init__(self, location="local://shop", protocol="sodep-lite"):
        self.location = location
        self.protocol = protocol

    async def call(self, operation, payload=None):
        return await call_operation(self.location, self.protocol, operation, payload, timeout=5)

    async def login(self) -> str:
        reply = await self.call("login")
        assert reply.kind == MessageKind.RESPONSE
        return reply.payload.root

    async def add(self, sid, product):
        return await self.call("addToCart", request(sid=sid, id=product))

    async def checkout(self, sid):
        return await self.call("checkout", request(sid=sid))


async def shopping_session(client: ShopClient):
    sid = await client.login()
    await client.add(sid, "p1")
    await client.add(sid, "p2")
    return sid, await client.checkout(sid)


@pytest.mark.asyncio
async def test_checkout_produces_a_receipt(services_dir):
    events = EventLog()
    services = await start_stack(services_dir, events)
    client = ShopClient()
    try:
        sid = await client.login()
        await client.add(sid, "p1")
        await client.add(sid, "p2")
        removed = await client.call("removeFromCart", request(sid=sid, id="p1"))
        assert [n.root for n in removed.payload.vector("item")] == ["p2"]
        receipt = await client.checkout(sid)
        assert receipt.kind == MessageKind.RESPONSE
        assert receipt.payload.child("total").root == 4.0
        assert receipt.payload.child("items").root == 1
        assert receipt.payload.child("paid").root is True

        shop = services[2]
        await shop.wait_idle(timeout=5)
        (spawn,) = events.filter(service="shop", kind=EventKind.SPAWN)
        assert spawn.op == "login"
        trace = [
            (e.kind.value, e.op)
            for e in events.filter(service="shop", pid=spawn.pid)
            if e.kind != EventKind.BUFFER
        ]
        assert trace == [
            ("spawn", "login"), ("recv", "login"), ("send", "login"),
            ("recv", "addToCart"), ("send", "addToCart"),
            ("recv", "addToCart"), ("send", "addToCart"),
            ("recv", "removeFromCart"), ("send", "removeFromCart"),
            ("recv", "checkout"), ("call", "pay"),
            ("send", "getPrice"), ("recv", "getPrice"),
            ("send", "authorize"), ("recv", "authorize"),
            ("call", "ship"), ("send", "checkout"),
            ("terminate", None),
        ]
        assert len(events.filter(service="catalog", kind=EventKind.SPAWN)) == 1
        assert events.filter(kind=EventKind.FAULT) == []
    finally:
        await stop_stack(services)


@pytest.mark.asyncio
async def test_same_seeds_give_the_same_log(services_dir):
    logs = []
    for _ in range(2):
        events = EventLog()
        services = await start_stack(services_dir, events, seed=11)
        try:
            await shopping_session(ShopClient())
            await services[2].wait_idle(timeout=5)
        finally:
            await stop_stack(services)
        logs.append([e.stable() for e in events.events])
    assert logs[0] == logs[1]


@pytest.mark.asyncio
async def test_sessions_are_isolated(services_dir):
    events = EventLog()
    services = await start_stack(services_dir, events)
    client = ShopClient()
    rng = random.Random(77)
    try:
        for _ in range(50):
            first, second = await client.login(), await client.login()
            assert first != second
            carts = {first: [], second: []}
            script = [first] * 20 + [second] * 20
            rng.shuffle(script)
            for sid in script:
                product = rng.choice(sorted(PRICES))
                if rng.random() < 0.7:
                    reply = await client.add(sid, product)
                    carts[sid].append(product)
                else:
                    reply = await client.call("removeFromCart", request(sid=sid, id=product))
                    if product in carts[sid]:
                        carts[sid].remove(product)
                assert [n.root for n in reply.payload.vector("item")] == carts[sid]

            receipts = await asyncio.gather(client.checkout(first), client.checkout(second))
            for sid, receipt in zip((first, second), receipts):
                assert receipt.payload.child("items").root == len(carts[sid])
                assert receipt.payload.child("total").root == pytest.approx(sum(PRICES[p] for p in carts[sid]))
        await services[2].wait_idle(timeout=5)
    finally:
        await stop_stack(services)


@pytest.mark.asyncio
async def test_logout_ends_the_session(services_dir, caplog):
    services = await start_stack(services_dir, EventLog())
    client = ShopClient()
    try:
        sid = await client.login()
        ack = await client.call("logout", request(sid=sid))
        assert ack.kind == MessageKind.RESPONSE and ack.payload.is_void()
        await services[2].wait_idle(timeout=5)

        with caplog.at_level(logging.WARNING, logger="microlang"):
            late = await client.add(sid, "p1")
        assert late.is_fault
        assert late.fault_name == RuntimeFault.CORRELATION_ERROR
        assert any(
            r.name == "microlang.shop" and "rejected addToCart" in r.getMessage() for r in caplog.records
        )
    finally:
        await stop_stack(services)


def shop_with_web_protocol(services_dir, protocol: str):
    path = services_dir / "shop.ml.svc"
    program = parse_source(path.read_text(), str(path))
    ports = tuple(
        dataclasses.replace(port, protocol=ast.ProtocolSpec(protocol)) if port.name == "Web" else port
        for port in program.input_ports
    )
    checked = check_program(dataclasses.replace(program, input_ports=ports))
    assert checked.ok
    return checked


@pytest.mark.asyncio
async def test_protocols_are_transparent(services_dir):
    variants = [
        ("http", {"Web": "socket://127.0.0.1:0"}),
        ("sodep-lite", {"Web": "socket://127.0.0.1:0"}),
        ("sodep-lite", {}),
    ]
    traces = []
    receipts = []
    for protocol, bindings in variants:
        events = EventLog()
        shop = shop_with_web_protocol(services_dir, protocol)
        services = await start_stack(services_dir, events, shop=shop, bindings=bindings)
        try:
            client = ShopClient(services[2].location_of("Web"), protocol)
            _, receipt = await shopping_session(client)
            await services[2].wait_idle(timeout=5)
        finally:
            await stop_stack(services)
        receipts.append(receipt.payload)
        traces.append(normalize(events.events))

    assert receipts[0] == receipts[1] == receipts[2]
    assert traces[0] == traces[1] == traces[2]


QUOTES = """
interface Quotes { RequestResponse: quote(void)(double) }
inputPort Stub { Location: "local://stub-a" Protocol: sodep-lite Interfaces: Quotes }
main { quote()(price) { price = PRICE } }
"""

CLIENT = """
type pair: void { a: double, b: double }
interface Quotes { RequestResponse: quote(void)(double) }
interface Compare { RequestResponse: compare(void)(pair) }
inputPort In { Location: "local://client" Protocol: sodep-lite Interfaces: Compare }
outputPort Prices { Location: "local://stub-a" Protocol: sodep-lite Interfaces: Quotes }
main {
  compare()(result) {
    quote@Prices()(result.a);
    rebind Prices "local://stub-b" "sodep-lite";
    quote@Prices()(result.b)
  }
}
"""


@pytest.mark.asyncio
async def test_rebind_switches_the_output_port(compile_source):
    events = EventLog()
    services = [
        await start_service(compile_source(QUOTES.replace("PRICE", "1.5")), name="stub-a", events=events),
        await start_service(
            compile_source(QUOTES.replace("PRICE", "2.5")), bindings={"Stub": "local://stub-b"},
            name="stub-b", events=events,
        ),
        await start_service(compile_source(CLIENT), name="client", events=events),
    ]
    try:
        reply = await call_operation("local://client", "sodep-lite", "compare", timeout=5)
        assert reply.payload == ValueNode().add("a", ValueNode(1.5)).add("b", ValueNode(2.5))
        assert len(events.filter(service="stub-a", kind=EventKind.SPAWN)) == 1
        assert len(events.filter(service="stub-b", kind=EventKind.SPAWN)) == 1
        assert services[2].outputs["Prices"].location.name == "stub-b"
    finally:
        await stop_stack(services)


@pytest.mark.asyncio
async def test_registry_tracks_running_services(services_dir):
    services = await start_stack(services_dir, EventLog())
    assert {"auth", "catalog", "shop"} <= set(list_services())
    assert get_service("shop") is services[2]

    await stop_all_services()
    assert list_services() == []
    assert get_service("shop") is None
    assert all(service.location_of("Web") is None for service in services)


FAULTY = """
type pair: void { a?: int, b?: int }
interface Faulty {
  RequestResponse: go( pair )( int ), divide( pair )( int ), relay( void )( double )
}
interface Quotes { RequestResponse: quote(void)(double) }
inputPort In { Location: LOCATION Interfaces: Faulty }
outputPort Prices { Location: "local://nowhere" Protocol: sodep-lite Interfaces: Quotes }
main {
  [ go( req.a[req.missing] )( r ) { r = 1 } ]
  [ divide( req )( r ) { r = req.a / req.b } ]
  [ relay()( r ) { quote@Prices()(r) } ]
}
"""


def faulty(location: str, protocol: str) -> str:
    return FAULTY.replace("LOCATION", f'"{location}" Protocol: {protocol}')


@pytest.mark.asyncio
async def test_fault_while_binding_a_request_is_answered(compile_source):
    events = EventLog()
    service = await start_service(compile_source(faulty("local://faulty", "sodep-lite")), events=events)
    try:
        reply = await call_operation("local://faulty", "sodep-lite", "go", request(a=1), timeout=2)
        assert reply.is_fault
        assert reply.fault_name == RuntimeFault.TYPE_MISMATCH
        await service.wait_idle(timeout=2)
        assert [e.kind for e in events.events] == [
            EventKind.SPAWN, EventKind.RECV, EventKind.FAULT, EventKind.TERMINATE,
        ]
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_fault_in_a_request_response_body_becomes_a_fault_reply(compile_source):
    service = await start_service(compile_source(faulty("local://faulty", "sodep-lite")))
    try:
        reply = await call_operation("local://faulty", "sodep-lite", "divide", request(a=6, b=0), timeout=2)
        assert reply.is_fault and reply.fault_name == RuntimeFault.TYPE_MISMATCH

        reply = await call_operation("local://faulty", "sodep-lite", "relay", timeout=2)
        assert reply.is_fault and reply.fault_name == RuntimeFault.IO_FAULT

        reply = await call_operation("local://faulty", "sodep-lite", "divide", request(a=6, b=3), timeout=2)
        assert reply.kind == MessageKind.RESPONSE and reply.payload.root == 2
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_body_faults_map_to_http_statuses(compile_source):
    service = await start_service(compile_source(faulty("socket://127.0.0.1:0", "http")))
    location = service.location_of("In")
    try:
        async with httpx.AsyncClient(base_url=f"http://{location.host}:{location.port}", timeout=5) as client:
            response = await client.post("/divide", json={"a": 6, "b": 0})
            assert response.status_code == 400
            assert response.json() == {"fault": "TypeMismatch"}

            response = await client.post("/relay", content="")
            assert response.status_code == 502
            assert response.json() == {"fault": "IOFault"}

            response = await client.post("/go", json={"a": 1})
            assert response.status_code == 400
            assert response.json()["fault"] == "TypeMismatch"
    finally:
        await service.stop()
