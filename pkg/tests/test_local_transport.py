"""Tests for local:// links"""

import asyncio

import pytest

from microlang.net import LocalChannel, LocalListener, Location, WireMessage, dial, get_local_registry, listen
from microlang.utils.exceptions import BindError, TransportError, UnknownLocal
from microlang.values import ValueNode


@pytest.mark.asyncio
async def test_received_message_is_a_copy(echo_handler):
    listener = LocalListener(Location.local("echo"), echo_handler)
    await listener.start()
    channel = LocalChannel(Location.local("echo"))
    payload = ValueNode().add("item", ValueNode("p1"))

    reply = await channel.send(WireMessage.request("echo", payload))

    assert reply.payload == payload
    assert reply.payload is not payload
    payload.add("item", ValueNode("p2"))
    assert echo_handler.received[0].payload.size("item") == 1
    await channel.close()
    await listener.close()


@pytest.mark.asyncio
async def test_unknown_name():
    channel = LocalChannel(Location.local("nobody"))
    with pytest.raises(UnknownLocal) as info:
        await channel.send(WireMessage.request("echo"))
    assert isinstance(info.value, TransportError)
    assert info.value.name == "nobody"


@pytest.mark.asyncio
async def test_unknown_name_with_delay():
    channel = LocalChannel(Location.local("nobody"), delay_ms=5)
    with pytest.raises(UnknownLocal):
        await channel.send(WireMessage.request("echo"))
    await channel.close()


@pytest.mark.asyncio
@pytest.mark.parametrize("delay_ms", [0, 5])
async def test_messages_arrive_in_send_order(echo_handler, delay_ms):
    listener = LocalListener(Location.local("echo"), echo_handler)
    await listener.start()
    channel = LocalChannel(Location.local("echo"), timeout=5, delay_ms=delay_ms)

    await asyncio.gather(*(
        channel.send(WireMessage.request("note", ValueNode(index))) for index in range(20)
    ))

    assert [m.payload.root for m in echo_handler.received] == list(range(20))
    await channel.close()
    await listener.close()


@pytest.mark.asyncio
async def test_timeout_is_a_transport_error(echo_handler):
    listener = LocalListener(Location.local("echo"), echo_handler)
    await listener.start()
    channel = LocalChannel(Location.local("echo"), timeout=0.05)
    slow = ValueNode().add("delay", ValueNode(1.0))
    with pytest.raises(TransportError):
        await channel.send(WireMessage.request("echo", slow))
    await channel.close()
    await listener.close()


@pytest.mark.asyncio
async def test_duplicate_name_cannot_bind(echo_handler):
    first = LocalListener(Location.local("echo"), echo_handler)
    await first.start()
    with pytest.raises(BindError):
        await LocalListener(Location.local("echo"), echo_handler).start()
    await first.close()
    assert get_local_registry().get("echo") is None


@pytest.mark.asyncio
async def test_factory_picks_local_transport_for_either_protocol(echo_handler):
    for protocol in ("http", "sodep-lite"):
        listener = listen(Location.local("echo"), protocol, echo_handler)
        assert isinstance(listener, LocalListener)
        await listener.start()
        channel = dial(Location.local("echo"), protocol)
        assert isinstance(channel, LocalChannel)
        reply = await channel.send(WireMessage.request("echo", ValueNode(protocol)))
        assert reply.payload.root == protocol
        await channel.close()
        await listener.close()
