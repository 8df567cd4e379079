"""Tests for the HTTP + JSON protocol"""

import re

import httpx
import pytest

from microlang.api import call_operation, start_service
from microlang.net import HttpChannel, Location, MessageKind, WireMessage
from microlang.utils.exceptions import TransportError
from microlang.values import ValueNode

from conftest import LOCAL_BINDINGS

TOKEN = re.compile(r"^[0-9a-f]{32}$")


def base_url(service, port: str) -> str:
    location = service.location_of(port)
    return f"http://{location.host}:{location.port}"


@pytest.mark.asyncio
async def test_catalog_over_http(services_dir):
    catalog = await start_service(
        services_dir / "catalog.ml.svc", bindings={"Customers": "socket://127.0.0.1:0"}, seed=1
    )
    try:
        async with httpx.AsyncClient(base_url=base_url(catalog, "Customers")) as client:
            response = await client.post("/getPrice", content='{"id":"p1"}')
            assert response.status_code == 200
            assert response.text == '{"$":2.5}'
            assert response.headers["content-type"].startswith("application/json")

            response = await client.post("/getList", content="")
            assert response.json() == {"id": ["p1", "p2", "p3"]}

            response = await client.post("/nope", content="{}")
            assert response.status_code == 404
            assert response.json() == {"fault": "UnknownOperation"}

            response = await client.post("/getPrice", content="{not json")
            assert response.status_code == 400
            assert response.json()["fault"] == "TypeMismatch"
    finally:
        await catalog.stop()


@pytest.mark.asyncio
async def test_call_operation_decodes_reply(services_dir):
    catalog = await start_service(
        services_dir / "catalog.ml.svc", bindings={"Customers": "socket://127.0.0.1:0"}, seed=1
    )
    try:
        reply = await call_operation(
            catalog.location_of("Customers"), "http", "getPrice", ValueNode().add("id", ValueNode("p2"))
        )
        assert reply.kind == MessageKind.RESPONSE
        assert reply.payload == ValueNode(4.0)
    finally:
        await catalog.stop()


@pytest.mark.asyncio
async def test_shop_fault_statuses(services_dir):
    bindings = dict(LOCAL_BINDINGS, Web="socket://127.0.0.1:0")
    shop = await start_service(services_dir / "shop.ml.svc", bindings=bindings, seed=3)
    try:
        async with httpx.AsyncClient(base_url=base_url(shop, "Web")) as client:
            response = await client.post("/checkout", content='{"sid":"nobody"}')
            assert response.status_code == 409
            assert response.json() == {"fault": "CorrelationError"}

            response = await client.post("/login", content="{}")
            assert response.status_code == 200
            sid = response.json()["$"]
            assert TOKEN.match(sid)

            response = await client.post("/addToCart", json={"sid": sid})
            assert response.status_code == 400
            assert response.json() == {"fault": "TypeMismatch", "path": "id"}

            response = await client.post("/addToCart", json={"sid": sid, "id": "p1"})
            assert response.status_code == 200
            assert response.json() == {"item": ["p1"]}

            response = await client.post("/logout", json={"sid": sid})
            assert response.status_code == 202
            assert response.text == ""

            await shop.wait_idle(timeout=5)
            response = await client.post("/logout", json={"sid": sid})
            assert response.status_code == 409
    finally:
        await shop.stop()


@pytest.mark.asyncio
async def test_closed_port_is_a_transport_error(services_dir):
    catalog = await start_service(
        services_dir / "catalog.ml.svc", bindings={"Customers": "socket://127.0.0.1:0"}, seed=1
    )
    location = catalog.location_of("Customers")
    await catalog.stop()

    channel = HttpChannel(Location.socket(location.host, location.port), timeout=2)
    try:
        with pytest.raises(TransportError):
            await channel.send(WireMessage.request("getPrice", ValueNode().add("id", ValueNode("p1"))))
    finally:
        await channel.close()
