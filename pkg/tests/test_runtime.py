"""Tests for the interpreter, correlation and process lifecycle"""

import asyncio
import math
import random
import time

import pytest

from microlang.lang import ast, parse_source
from microlang.runtime import (
    DetachedHost,
    EventKind,
    EventLog,
    MessageEnvelope,
    ProcessInstance,
    ProcessStatus,
    RouteKind,
    Service,
    evaluate,
    run_behavior,
    step_process,
)
from microlang.utils.exceptions import RuntimeFault
from microlang.values import Path, ValueNode, path_get

from generators import chain, final_state, interleavings, random_assignments


def main_of(body: str) -> ast.Behavior:
    return parse_source(f"main {{ {body} }}").main


def value(process, dotted: str):
    return path_get(process.state, Path.parse(dotted)).root


async def until(condition, timeout: float = 2.0) -> None:
    deadline = time.monotonic() + timeout
    while not condition():
        if time.monotonic() > deadline:
            raise AssertionError("condition not reached")
        await asyncio.sleep(0.001)


# -- expressions ----------------------------------------------------------------

@pytest.mark.parametrize("source,expected", [
    ("7 / 2", 3),
    ("-7 / 2", -3),
    ("-7 % 2", -1),
    ("7.0 / 2.0", 3.5),
    ('"n=" + 3', "n=3"),
    ('"a" + true', "atrue"),
    ("1 == 1.0", False),
    ('"a" < "b"', True),
    ("!(1 > 2) && true", True),
    ("false && (1 / 0 == 0)", False),
])
def test_expression_values(source, expected):
    result = evaluate(main_of(f"x = {source}").expr, ValueNode()).root
    assert result == expected and type(result) is type(expected)


@pytest.mark.parametrize("source", ["1 + 1.5", "1 / 0", '1 < "a"', "9223372036854775807 + 1", "!1", "-true"])
def test_expression_type_mismatches(source):
    with pytest.raises(RuntimeFault) as info:
        evaluate(main_of(f"x = {source}").expr, ValueNode())
    assert info.value.kind == RuntimeFault.TYPE_MISMATCH


def test_size_of_and_indexed_reads():
    state = ValueNode().add("cart", ValueNode().add("item", ValueNode("p1")).add("item", ValueNode("p2")))
    assert evaluate(main_of("x = #cart.item").expr, state).root == 2
    assert evaluate(main_of("x = cart.item[1]").expr, state).root == "p2"
    assert evaluate(main_of("x = #nothing.here").expr, state).root == 0


# -- detached execution ---------------------------------------------------------

@pytest.mark.asyncio
async def test_parallel_branches_commute():
    rng = random.Random(2024)
    for trial in range(50):
        left = random_assignments(rng, "l", rng.randint(1, 6))
        right = random_assignments(rng, "r", rng.randint(1, 6))
        states = [final_state(order) for order in interleavings(left, right)]
        assert len(states) == math.comb(len(left) + len(right), len(left))
        assert all(state == states[0] for state in states), trial
        for seed in range(3):
            process = await run_behavior(ast.Parallel(chain(left), chain(right)), seed=seed)
            assert process.terminated and process.fault is None
            assert dict(process.state.children) == dict(states[0].children), (trial, seed)


@pytest.mark.asyncio
async def test_parallel_joins_before_continuing():
    process = await run_behavior(main_of("{ a = 1 | b = 2 }; c = a + b"), seed=1)
    assert value(process, "c") == 3


@pytest.mark.asyncio
async def test_loops_and_conditionals():
    process = await run_behavior(main_of(
        "while (false) { x = 1 }; i = 0; while (i < 5) { i = i + 1 }; "
        "if (i == 5) { y = \"five\" } else { y = \"other\" }"
    ))
    assert value(process, "x") is None
    assert value(process, "i") == 5
    assert value(process, "y") == "five"


@pytest.mark.asyncio
async def test_undef_and_vector_writes():
    process = await run_behavior(main_of(
        'cart.item[#cart.item] = "p1"; cart.item[#cart.item] = "p2"; undef(cart.item[0])'
    ))
    assert [n.root for n in process.state.child("cart").vector("item")] == ["p2"]


@pytest.mark.asyncio
async def test_procedure_calls_are_logged():
    program = parse_source("define bump { n = n + 1 } main { n = 0; bump; bump }")
    events = EventLog()
    process = await run_behavior(program.main, {p.name: p for p in program.procedures}, events=events)
    assert value(process, "n") == 2
    assert [e.kind for e in events.events] == [
        EventKind.SPAWN, EventKind.CALL, EventKind.CALL, EventKind.TERMINATE,
    ]
    assert [e.op for e in events.filter(kind=EventKind.CALL)] == ["bump", "bump"]


@pytest.mark.asyncio
async def test_runtime_fault_terminates_the_process():
    events = EventLog()
    process = await run_behavior(main_of('x = 1 + "a"; y = 2'), events=events)
    assert process.terminated
    assert process.fault.kind == RuntimeFault.TYPE_MISMATCH
    assert value(process, "y") is None
    (fault,) = events.filter(kind=EventKind.FAULT)
    assert fault.detail == RuntimeFault.TYPE_MISMATCH


@pytest.mark.asyncio
async def test_sends_fault_outside_a_service():
    process = await run_behavior(main_of("ping@Out(x)"))
    assert process.fault.kind == RuntimeFault.IO_FAULT


@pytest.mark.asyncio
async def test_sleep_blocks_for_the_duration():
    started = time.monotonic()
    process = await run_behavior(main_of("sleep(20); x = 1"))
    assert value(process, "x") == 1
    assert time.monotonic() - started >= 0.015


@pytest.mark.asyncio
async def test_fresh_tokens_follow_the_seed():
    first = await run_behavior(main_of("a = new; b = new"), seed=5)
    second = await run_behavior(main_of("a = new; b = new"), seed=5)
    assert value(first, "a") == value(second, "a")
    assert value(first, "a") != value(first, "b")


def test_step_by_step():
    host = DetachedHost()
    process = ProcessInstance("p", main_of("x = 1; y = 2"), host)
    assert step_process(process) == ProcessStatus.RUNNING
    assert value(process, "x") == 1 and value(process, "y") is None
    assert step_process(process) == ProcessStatus.TERMINATED
    assert value(process, "y") == 2
    assert step_process(process) == ProcessStatus.TERMINATED


def test_receive_waits_for_a_message():
    process = ProcessInstance("p", main_of("ping(k); x = k.n"), DetachedHost())
    assert step_process(process) == ProcessStatus.AWAITING
    assert process.awaiting_ops() == ["ping"]
    assert not process.step()

    assert process.enqueue(MessageEnvelope("ping", ValueNode().add("n", ValueNode(4))))
    assert process.status == ProcessStatus.RUNNING
    while process.step():
        pass
    assert process.status == ProcessStatus.TERMINATED
    assert value(process, "x") == 4


# -- services without transports ------------------------------------------------

SESSIONS = """
type openReq: void { s?: string }
type pingReq: void { sid?: string, n?: int }
interface Sessions { OneWay: open(openReq), ping(pingReq), push(pingReq) }
inputPort In { Location: "local://sessions" Protocol: sodep-lite Interfaces: Sessions }
cset { sid: ping.sid push.sid }
"""


def envelope(operation: str, **fields) -> MessageEnvelope:
    payload = ValueNode()
    for name, item in fields.items():
        payload.add(name, ValueNode(item))
    return MessageEnvelope(operation, payload, origin="test", port="In")


def session_service(compile_source, body: str, seed: int = 0, **kwargs) -> Service:
    checked = compile_source(SESSIONS + f"main {{ {body} }}")
    return Service(checked, name="sessions", seed=seed, **kwargs)


def linear_scan(service: Service, sid) -> str:
    for info in service.processes():
        if info.csets.get("sid") == sid:
            return info.pid
    return None


@pytest.mark.asyncio
async def test_correlation_matches_linear_scan(compile_source):
    service = session_service(compile_source, "open(r) { csets.sid = r.s }; ping(k); push(m)")
    rng = random.Random(8)
    try:
        sids = [f"s{i}" for i in range(10)]
        for sid in sids:
            outcome = service.deliver_message(envelope("open", s=sid))
            assert outcome.kind == RouteKind.SPAWNED_NEW
        await until(lambda: all(linear_scan(service, sid) for sid in sids))

        for _ in range(100):
            sid = rng.choice(sids + ["unknown", "s99"])
            assert service.correlate("ping", envelope("ping", sid=sid).payload) == linear_scan(service, sid)
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_routing_outcomes(compile_source):
    service = session_service(compile_source, "open(r) { csets.sid = r.s }; ping(k); push(m)")
    try:
        spawned = service.deliver_message(envelope("open", s="a"))
        pid = spawned.pid
        await until(lambda: service.process(pid).awaiting_ops() == ["ping"])

        assert service.deliver_message(envelope("push", sid="a")).kind == RouteKind.BUFFERED
        delivered = service.deliver_message(envelope("ping", sid="a"))
        assert (delivered.kind, delivered.pid) == (RouteKind.DELIVERED_TO, pid)

        stray = service.deliver_message(envelope("ping", sid="zzz"))
        assert stray.kind == RouteKind.FAULT and stray.fault_kind == RuntimeFault.CORRELATION_ERROR

        unknown = service.deliver_message(envelope("nope"))
        assert unknown.fault_kind == RuntimeFault.UNKNOWN_OPERATION

        wrong = service.deliver_message(envelope("ping", sid=3))
        assert wrong.fault_kind == RuntimeFault.TYPE_MISMATCH
        assert wrong.fault.path == "sid"

        await service.wait_idle(timeout=2)
        kinds = [e.kind for e in service.events.filter(pid=pid)]
        assert kinds[0] == EventKind.SPAWN and kinds[-1] == EventKind.TERMINATE
        assert EventKind.BUFFER in kinds
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_late_bound_process_adopts_values(compile_source):
    service = session_service(compile_source, "open(r); ping(k); push(m)")
    try:
        first = service.deliver_message(envelope("open")).pid
        second = service.deliver_message(envelope("open")).pid
        await until(lambda: service.process(second).awaiting_ops() == ["ping"])
        await until(lambda: service.process(first).awaiting_ops() == ["ping"])

        assert service.deliver_message(envelope("ping", sid="a")).pid == first
        assert service.cset_values(service.process(first)) == {"sid": "a"}
        assert service.deliver_message(envelope("ping", sid="b")).pid == second
        assert service.correlate("push", envelope("push", sid="a").payload) == first
        assert service.correlate("push", envelope("push", sid="b").payload) == second
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_void_candidate_matches_nothing(compile_source):
    service = session_service(compile_source, "open(r); ping(k); push(m)")
    try:
        service.deliver_message(envelope("open"))
        outcome = service.deliver_message(envelope("ping"))
        assert outcome.fault_kind == RuntimeFault.CORRELATION_ERROR
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_duplicate_correlation_values_fault_the_newcomer(compile_source):
    service = session_service(compile_source, "open(r) { csets.sid = r.s }; ping(k); push(m)")
    try:
        first = service.deliver_message(envelope("open", s="same")).pid
        await until(lambda: linear_scan(service, "same") == first)
        second = service.deliver_message(envelope("open", s="same")).pid
        await until(lambda: service.process(second) is None)

        assert service.process_count() == 1
        faults = service.events.filter(pid=second, kind=EventKind.FAULT)
        assert [e.detail for e in faults] == [RuntimeFault.CORRELATION_ERROR]
        assert service.correlate("ping", envelope("ping", sid="same").payload) == first
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_buffered_messages_are_consumed_in_arrival_order(compile_source):
    for seed in range(20):
        service = session_service(
            compile_source, "open(r) { csets.sid = r.s }; sleep(50); push(first); push(second)", seed=seed
        )
        try:
            pid = service.deliver_message(envelope("open", s="fifo")).pid
            process = service.process(pid)
            await until(lambda: linear_scan(service, "fifo") == pid)
            for n in (1, 2):
                outcome = service.deliver_message(envelope("push", sid="fifo", n=n))
                assert (outcome.kind, outcome.pid) == (RouteKind.BUFFERED, pid)
            await service.wait_idle(timeout=2)
            assert value(process, "first.n") == 1
            assert value(process, "second.n") == 2
            pushes = [e.kind for e in service.events.filter(pid=pid, op="push")]
            assert pushes == [EventKind.BUFFER, EventKind.BUFFER, EventKind.RECV, EventKind.RECV], seed
        finally:
            await service.stop()


SEQUENTIAL_BODY = "open(r) { csets.sid = r.s }; ping(k)"


@pytest.mark.asyncio
async def test_sequential_mode_queues_starts(compile_source):
    service = session_service(compile_source, SEQUENTIAL_BODY, execution=ast.ExecutionMode.SEQUENTIAL)
    try:
        first = service.deliver_message(envelope("open", s="one"))
        queued = service.deliver_message(envelope("open", s="two"))
        assert first.kind == RouteKind.SPAWNED_NEW
        assert (queued.kind, queued.pid) == (RouteKind.BUFFERED, None)
        assert service.pending_starts == 1
        assert service.process_count() == 1

        await until(lambda: linear_scan(service, "one") is not None)
        service.deliver_message(envelope("ping", sid="one"))
        await until(lambda: linear_scan(service, "two") is not None)
        assert service.pending_starts == 0
        assert service.process_count() == 1
    finally:
        await service.stop()


@pytest.mark.asyncio
async def test_concurrent_mode_spawns_immediately(compile_source):
    service = session_service(compile_source, SEQUENTIAL_BODY)
    try:
        outcomes = [service.deliver_message(envelope("open", s=s)) for s in ("one", "two")]
        assert [o.kind for o in outcomes] == [RouteKind.SPAWNED_NEW] * 2
        assert service.process_count() == 2
        assert service.pending_starts == 0
    finally:
        await service.stop()


def session_order(service: Service):
    """(index of session 1's terminate, index of session 2's first event) in the log"""
    events = service.events.events
    first, second = [e.pid for e in service.events.filter(kind=EventKind.SPAWN)]
    terminated = next(i for i, e in enumerate(events) if e.pid == first and e.kind == EventKind.TERMINATE)
    started = next(i for i, e in enumerate(events) if e.pid == second)
    return terminated, started


async def run_two_sessions(service: Service) -> None:
    for sid in ("one", "two"):
        service.deliver_message(envelope("open", s=sid))
    for sid in ("one", "two"):
        await until(lambda: linear_scan(service, sid) is not None)
        service.deliver_message(envelope("ping", sid=sid))
    await service.wait_idle(timeout=2)


@pytest.mark.asyncio
async def test_sequential_sessions_never_overlap(compile_source):
    for seed in range(20):
        service = session_service(compile_source, SEQUENTIAL_BODY, seed=seed, execution=ast.ExecutionMode.SEQUENTIAL)
        try:
            await run_two_sessions(service)
            terminated, started = session_order(service)
            assert started > terminated, seed
        finally:
            await service.stop()


@pytest.mark.asyncio
async def test_concurrent_sessions_interleave(compile_source):
    interleaved = []
    for seed in range(20):
        service = session_service(compile_source, SEQUENTIAL_BODY, seed=seed)
        try:
            await run_two_sessions(service)
            terminated, started = session_order(service)
            interleaved.append(started < terminated)
        finally:
            await service.stop()
    assert any(interleaved)
