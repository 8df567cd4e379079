"""Running services: message routing, correlation and process lifecycle"""

import asyncio
import itertools
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FilePath
from threading import Lock
from typing import Deque, Dict, List, Mapping, Optional, Tuple

from .events import EventKind, EventLog
from .process import MessageEnvelope, ProcessHost, ProcessInstance, ProcessStatus
from ..checker.program import CheckedProgram
from ..lang import ast
from ..net.base import AbstractChannel, AbstractListener, PortHandler
from ..net.local import LocalRegistry
from ..net.location import Location
from ..net.network import dial, listen
from ..net.wire import SUPPORTED_PROTOCOLS, WireMessage
from ..values.paths import CSETS, Path, path_get, path_set
from ..values.tokens import TokenSource
from ..values.tree import BasicValue, ValueNode, basic_equal, kind_of
from ..values.types import TypeExpr, type_conforms
from ..utils.config import Config
from ..utils.exceptions import BindError, LocationError, RuntimeFault, TransportError, ValidationError
from ..utils.logger import Logger, logger


class RouteKind(str, Enum):
    SPAWNED_NEW = "SpawnedNew"
    DELIVERED_TO = "DeliveredTo"
    BUFFERED = "Buffered"
    FAULT = "Fault"


@dataclass(frozen=True)
class RoutingOutcome:
    """What deliver_message did with a message (exactly one kind per message)"""
    kind: RouteKind
    pid: Optional[str] = None
    fault: Optional[RuntimeFault] = None

    @classmethod
    def spawned_new(cls, pid: str) -> "RoutingOutcome":
        return cls(RouteKind.SPAWNED_NEW, pid)

    @classmethod
    def delivered_to(cls, pid: str) -> "RoutingOutcome":
        return cls(RouteKind.DELIVERED_TO, pid)

    @classmethod
    def buffered(cls, pid: Optional[str]) -> "RoutingOutcome":
        return cls(RouteKind.BUFFERED, pid)

    @classmethod
    def faulted(cls, fault: RuntimeFault) -> "RoutingOutcome":
        return cls(RouteKind.FAULT, fault=fault)

    @property
    def fault_kind(self) -> Optional[str]:
        return self.fault.kind if self.fault is not None else None

    def __str__(self) -> str:
        if self.kind == RouteKind.FAULT:
            return f"Fault({self.fault_kind})"
        return f"{self.kind.value}({self.pid})"


@dataclass(frozen=True)
class ProcessInfo:
    """Snapshot of a live process for introspection"""
    pid: str
    status: ProcessStatus
    awaiting: Tuple[str, ...]
    buffered: int
    csets: Dict[str, BasicValue]


@dataclass
class OutputBinding:
    """Current location and protocol of an output port"""
    port: str
    location: Optional[Location]
    protocol: str
    timeout: float
    delay_ms: float = 0.0
    channel: Optional[AbstractChannel] = None


CsetKey = Tuple[Tuple[str, BasicValue], ...]


def service_name(program: ast.Program) -> str:
    """Service name derived from the source file name"""
    name = FilePath(program.file).name
    for suffix in (Config.SOURCE_SUFFIX, ".svc", ".ml"):
        if name.endswith(suffix) and len(name) > len(suffix):
            return name[: -len(suffix)]
    return name


class InputPortHandler(PortHandler):
    """Connects one input port's listener to the owning service"""

    def __init__(self, service: "Service", port: ast.PortDecl):
        self.service = service
        self.port = port

    @property
    def types(self) -> Mapping[str, TypeExpr]:
        return self.service.checked.types

    def signature(self, operation: str) -> Optional[ast.OperationSig]:
        resolved = self.service.checked.port_interfaces.get(self.port.name)
        return resolved.get(operation) if resolved is not None else None

    def submit(self, msg: WireMessage, origin: str) -> "asyncio.Future[WireMessage]":
        reply = asyncio.get_running_loop().create_future()
        sig = self.signature(msg.operation)
        if sig is None:
            reply.set_result(WireMessage.fault(msg.operation, RuntimeFault.UNKNOWN_OPERATION))
            return reply

        request_response = sig.kind == ast.OperationKind.REQUEST_RESPONSE
        envelope = MessageEnvelope(
            operation=msg.operation,
            payload=msg.payload,
            reply=reply if request_response else None,
            origin=origin,
            port=self.port.name,
        )
        outcome = self.service.deliver_message(envelope)
        if not request_response:
            if outcome.kind == RouteKind.FAULT:
                reply.set_result(WireMessage.from_fault(msg.operation, outcome.fault))
            else:
                reply.set_result(WireMessage.response(msg.operation))
        return reply


class Service(ProcessHost):
    """
    A started microlang service

    Owns the input-port listeners, the output-port bindings and every live
    process. deliver_message is the single routing point: it runs
    synchronously on the event loop, so routing decisions are atomic with
    respect to process steps.

    Example:
        service = Service(check_program(program), seed=7)
        await service.start()
        ...
        await service.stop()
    """

    def __init__(
        self,
        checked: CheckedProgram,
        name: Optional[str] = None,
        seed: Optional[int] = None,
        events: Optional[EventLog] = None,
        bindings: Optional[Mapping[str, str]] = None,
        execution: Optional[ast.ExecutionMode] = None,
        registry: Optional[LocalRegistry] = None,
    ):
        if not checked.ok:
            raise ValidationError(f"program {checked.program.file} has check errors")

        self.checked = checked
        self.program = checked.program
        self.name = name or service_name(self.program)
        self.log = Logger.child(self.name)
        self.events = events if events is not None else EventLog()
        self.execution = execution or self.program.execution
        self.tokens = TokenSource(seed)
        self.registry = registry
        self.overrides = dict(bindings or {})

        self._procedures = {proc.name: proc for proc in self.program.procedures}
        self._cset_vars = checked.cset_variables
        self._processes: Dict[str, ProcessInstance] = {}
        self._tasks: Dict[str, asyncio.Task] = {}
        self._cset_index: Dict[CsetKey, str] = {}
        self._cset_keys: Dict[str, CsetKey] = {}
        self._pending_starts: Deque[MessageEnvelope] = deque()
        self._created = itertools.count()
        self._lock = Lock()
        self._idle = asyncio.Event()
        self._idle.set()

        self.listeners: Dict[str, AbstractListener] = {}
        self.outputs: Dict[str, OutputBinding] = {}
        self._retired: List[AbstractChannel] = []
        self._stopped = False

        for port in self.program.output_ports:
            self.outputs[port.name] = self._binding_for(port)

        self.log.debug(
            f"Created service '{self.name}' ({self.execution.value}, "
            f"starting ops: {sorted(checked.starting_ops)})"
        )

    def _binding_for(self, port: ast.PortDecl) -> OutputBinding:
        text = self.overrides.get(port.name, port.location)
        location = Location.parse(text) if text else None
        return OutputBinding(
            port=port.name,
            location=location,
            protocol=port.protocol.name,
            timeout=float(port.protocol.param("timeout", Config.get_call_timeout())),
            delay_ms=float(port.protocol.param("delay", 0)),
        )

    # -- lifecycle ----------------------------------------------------------

    async def start(self) -> "Service":
        """
        Bind every input port

        Raises:
            BindError: When a location cannot be bound (already bound
                listeners are closed again)
        """
        for port in self.program.input_ports:
            text = self.overrides.get(port.name, port.location)
            try:
                location = Location.parse(text)
            except LocationError as e:
                await self._close_listeners()
                raise BindError(port.name, str(text), e.reason)
            listener = listen(location, port.protocol.name, InputPortHandler(self, port), self.registry)
            try:
                await listener.start()
            except BindError as e:
                await self._close_listeners()
                raise BindError(port.name, str(location), e.reason)
            self.listeners[port.name] = listener
            logger.info(
                f"Service '{self.name}' port {port.name} listening at "
                f"{listener.bound_location} ({port.protocol.name})"
            )
        return self

    async def _close_listeners(self) -> None:
        for name, listener in list(self.listeners.items()):
            try:
                await listener.close()
            except Exception as e:
                self.log.error(f"Error closing port {name}: {e}")
        self.listeners.clear()

    async def stop(self) -> None:
        """Close listeners, terminate processes and release channels"""
        if self._stopped:
            return
        self._stopped = True
        await self._close_listeners()
        self._pending_starts.clear()
        for process in self.processes_snapshot():
            process.terminate()
        tasks = list(self._tasks.values())
        for task in tasks:
            task.cancel()
        if tasks:
            await asyncio.gather(*tasks, return_exceptions=True)
        channels = [b.channel for b in self.outputs.values() if b.channel is not None] + self._retired
        for channel in channels:
            try:
                await channel.close()
            except Exception as e:
                self.log.debug(f"Error closing channel {channel.location}: {e}")
        self._retired.clear()
        for binding in self.outputs.values():
            binding.channel = None
        from .registry import get_service_registry
        get_service_registry().unregister(self.name, self)
        logger.info(f"Service '{self.name}' stopped")

    async def __aenter__(self) -> "Service":
        return await self.start()

    async def __aexit__(self, exc_type, exc, tb) -> None:
        await self.stop()

    def location_of(self, port: str) -> Optional[Location]:
        """Bound location of an input port"""
        listener = self.listeners.get(port)
        return listener.bound_location if listener is not None else None

    # -- introspection ------------------------------------------------------

    def process_count(self) -> int:
        with self._lock:
            return len(self._processes)

    def processes_snapshot(self) -> List[ProcessInstance]:
        with self._lock:
            return list(self._processes.values())

    def processes(self) -> List[ProcessInfo]:
        return [
            ProcessInfo(
                pid=p.pid,
                status=p.status,
                awaiting=tuple(p.awaiting_ops()),
                buffered=p.buffered(),
                csets={k: v for k, v in self.cset_values(p).items() if v is not None},
            )
            for p in self.processes_snapshot()
        ]

    def process(self, pid: str) -> Optional[ProcessInstance]:
        with self._lock:
            return self._processes.get(pid)

    @property
    def pending_starts(self) -> int:
        return len(self._pending_starts)

    async def wait_idle(self, timeout: Optional[float] = None) -> None:
        """Wait until no process is live and no start is queued"""
        await asyncio.wait_for(self._idle.wait(), timeout)

    # -- correlation --------------------------------------------------------

    def cset_values(self, process: ProcessInstance) -> Dict[str, Optional[BasicValue]]:
        values = {}
        for var in self._cset_vars:
            values[var] = path_get(process.state, Path.of(CSETS, var)).root
        return values

    def candidate(self, operation: str, payload: ValueNode) -> Dict[str, Optional[BasicValue]]:
        """Correlation values carried by a message, read through the operation's aliases"""
        return {var: path_get(payload, path).root for var, path in self.checked.cset_aliases.get(operation, ())}

    def correlate(self, operation: str, payload: ValueNode) -> Optional[str]:
        """
        Pid of the live process a message belongs to, or None

        A process whose correlation variables equal every candidate value
        wins; otherwise the oldest process matching only through unset
        variables does. Operations without aliases never correlate.
        """
        candidate = self.candidate(operation, payload)
        if not candidate or any(value is None for value in candidate.values()):
            return None
        late_bound = None
        for process in self.processes_snapshot():
            if process.terminated:
                continue
            stored = self.cset_values(process)
            partial = False
            for var, value in candidate.items():
                current = stored.get(var)
                if current is None:
                    partial = True
                elif not basic_equal(current, value):
                    break
            else:
                if not partial:
                    return process.pid
                if late_bound is None or process.created < late_bound.created:
                    late_bound = process
        return late_bound.pid if late_bound is not None else None

    def _cset_key(self, process: ProcessInstance) -> Optional[CsetKey]:
        if not self._cset_vars:
            return None
        values = self.cset_values(process)
        if any(value is None for value in values.values()):
            return None
        return tuple((kind_of(values[var]).value, values[var]) for var in self._cset_vars)

    def _adopt(self, process: ProcessInstance, candidate: Mapping[str, Optional[BasicValue]]) -> None:
        stored = self.cset_values(process)
        changed = False
        for var, value in candidate.items():
            if value is not None and stored.get(var) is None:
                path_set(process.state, Path.of(CSETS, var), ValueNode(value))
                changed = True
        if changed:
            self.cset_written(process)

    def cset_written(self, process: ProcessInstance) -> None:
        key = self._cset_key(process)
        with self._lock:
            owner = self._cset_index.get(key) if key is not None else None
            if owner is not None and owner != process.pid and owner in self._processes:
                raise RuntimeFault(
                    RuntimeFault.CORRELATION_ERROR,
                    f"correlation values already held by process {owner}",
                )
            old = self._cset_keys.pop(process.pid, None)
            if old is not None and self._cset_index.get(old) == process.pid:
                del self._cset_index[old]
            if key is not None:
                self._cset_index[key] = process.pid
                self._cset_keys[process.pid] = key

    # -- routing ------------------------------------------------------------

    def deliver_message(self, envelope: MessageEnvelope) -> RoutingOutcome:
        """
        Route an incoming message: correlate, spawn, buffer or fault

        Faults are answered on the envelope's reply handle when present.
        """
        operation = envelope.operation
        sig = self.checked.input_operations.get(operation)
        if sig is None:
            return self._reject(envelope, RuntimeFault(RuntimeFault.UNKNOWN_OPERATION, f"unknown operation {operation}"))

        report = type_conforms(envelope.payload, sig.request, self.checked.types)
        if not report.ok:
            violation = report.first()
            return self._reject(envelope, RuntimeFault(RuntimeFault.TYPE_MISMATCH, str(violation), violation.path))

        pid = self.correlate(operation, envelope.payload)
        if pid is not None:
            process = self._processes[pid]
            try:
                self._adopt(process, self.candidate(operation, envelope.payload))
            except RuntimeFault as fault:
                return self._reject(envelope, fault)
            if process.enqueue(envelope):
                outcome = RoutingOutcome.delivered_to(pid)
            else:
                self.events.record(self.name, pid, EventKind.BUFFER, operation, envelope.port)
                outcome = RoutingOutcome.buffered(pid)
            self.log.debug(f"{operation} -> {outcome}")
            return outcome

        if operation in self.checked.starting_ops:
            if self.execution == ast.ExecutionMode.SEQUENTIAL and (self.process_count() or self._pending_starts):
                self._pending_starts.append(envelope)
                self._idle.clear()
                self.events.record(self.name, None, EventKind.BUFFER, operation, envelope.port)
                self.log.debug(f"{operation} queued ({len(self._pending_starts)} pending starts)")
                return RoutingOutcome.buffered(None)
            process = self._spawn(envelope)
            return RoutingOutcome.spawned_new(process.pid)

        return self._reject(
            envelope,
            RuntimeFault(RuntimeFault.CORRELATION_ERROR, f"{operation} matches no process and starts none"),
        )

    def _reject(self, envelope: MessageEnvelope, fault: RuntimeFault) -> RoutingOutcome:
        self.log.warning(f"rejected {envelope.operation} from {envelope.origin or '?'}: {fault}")
        self.events.record(self.name, None, EventKind.FAULT, envelope.operation, envelope.port, fault.kind)
        envelope.respond_fault(fault)
        return RoutingOutcome.faulted(fault)

    def _spawn(self, envelope: MessageEnvelope) -> ProcessInstance:
        process = ProcessInstance(
            pid=self.tokens.fresh(),
            behavior=self.program.main,
            host=self,
            tokens=self.tokens,
            rng=self.tokens.derive(),
            created=next(self._created),
        )
        for var, value in self.candidate(envelope.operation, envelope.payload).items():
            if value is not None:
                path_set(process.state, Path.of(CSETS, var), ValueNode(value))
        with self._lock:
            self._processes[process.pid] = process
        self._idle.clear()
        self.events.record(self.name, process.pid, EventKind.SPAWN, envelope.operation, envelope.port)
        self.log.debug(f"spawned process {process.pid} on {envelope.operation}")
        try:
            self.cset_written(process)
        except RuntimeFault as fault:
            process.fail(fault)
            envelope.respond_fault(fault)
            return process
        process.enqueue(envelope)
        task = asyncio.create_task(process.run())
        self._tasks[process.pid] = task
        task.add_done_callback(lambda t, p=process: self._process_done(p, t))
        return process

    def _process_done(self, process: ProcessInstance, task: asyncio.Task) -> None:
        self._tasks.pop(process.pid, None)
        if task.cancelled():
            return
        error = task.exception()
        if error is not None:
            self.log.error(f"Process {process.pid} crashed: {error!r}")
            process.fail(RuntimeFault(RuntimeFault.IO_FAULT, f"internal error: {error}"))

    # -- ProcessHost --------------------------------------------------------

    def record(self, process, kind, op=None, port=None, detail=None) -> None:
        self.events.record(self.name, process.pid, kind, op, port, detail)

    def procedure(self, name: str) -> Optional[ast.Procedure]:
        return self._procedures.get(name)

    def on_terminate(self, process: ProcessInstance) -> None:
        with self._lock:
            self._processes.pop(process.pid, None)
            key = self._cset_keys.pop(process.pid, None)
            if key is not None and self._cset_index.get(key) == process.pid:
                del self._cset_index[key]
        self.log.debug(f"process {process.pid} terminated")
        if not self._stopped and self._pending_starts and not self.process_count():
            self._spawn(self._pending_starts.popleft())
        if not self.process_count() and not self._pending_starts:
            self._idle.set()

    def binding(self, port: str) -> OutputBinding:
        binding = self.outputs.get(port)
        if binding is None:
            raise RuntimeFault(RuntimeFault.IO_FAULT, f"unknown output port {port}")
        if binding.location is None:
            raise RuntimeFault(RuntimeFault.IO_FAULT, f"output port {port} has no location")
        if binding.channel is None:
            binding.channel = dial(
                binding.location,
                binding.protocol,
                timeout=binding.timeout,
                delay_ms=binding.delay_ms,
                types=self.checked.types,
                registry=self.registry,
            )
        return binding

    async def _send(self, port: str, operation: str, payload: ValueNode) -> Tuple[ast.OperationSig, WireMessage]:
        sig = self.checked.output_operation(port, operation)
        if sig is None:
            raise RuntimeFault(RuntimeFault.UNKNOWN_OPERATION, f"{operation} is not declared on {port}")
        report = type_conforms(payload, sig.request, self.checked.types)
        if not report.ok:
            violation = report.first()
            raise RuntimeFault(RuntimeFault.TYPE_MISMATCH, f"request to {port}.{operation}: {violation}", violation.path)
        binding = self.binding(port)
        try:
            reply = await binding.channel.send(WireMessage.request(operation, payload), sig.response)
        except TransportError as e:
            raise RuntimeFault(RuntimeFault.IO_FAULT, str(e))
        return sig, reply

    async def solicit(self, process, port: str, operation: str, payload: ValueNode) -> ValueNode:
        sig, reply = await self._send(port, operation, payload)
        if reply.is_fault:
            raise reply.to_fault()
        report = type_conforms(reply.payload, sig.response, self.checked.types)
        if not report.ok:
            violation = report.first()
            raise RuntimeFault(RuntimeFault.TYPE_MISMATCH, f"response from {port}.{operation}: {violation}", violation.path)
        if not process.terminated:
            self.record(process, EventKind.RECV, operation, port)
        return reply.payload

    async def notify(self, process, port: str, operation: str, payload: ValueNode) -> None:
        _, reply = await self._send(port, operation, payload)
        if reply.is_fault:
            self.log.warning(f"{port}.{operation} was rejected with {reply.fault_name}")

    def rebind(self, process, port: str, location: str, protocol: str) -> None:
        binding = self.outputs.get(port)
        if binding is None:
            raise RuntimeFault(RuntimeFault.IO_FAULT, f"unknown output port {port}")
        try:
            target = Location.parse(location)
        except LocationError as e:
            raise RuntimeFault(RuntimeFault.IO_FAULT, str(e))
        if protocol not in SUPPORTED_PROTOCOLS:
            raise RuntimeFault(RuntimeFault.IO_FAULT, f"unsupported protocol {protocol}")
        if binding.channel is not None:
            self._retired.append(binding.channel)
        binding.location = target
        binding.protocol = protocol
        binding.channel = None
        self.log.info(f"output port {port} rebound to {target} ({protocol})")


async def start_service(
    checked: CheckedProgram,
    bindings: Optional[Mapping[str, str]] = None,
    seed: Optional[int] = None,
    events: Optional[EventLog] = None,
    execution: Optional[ast.ExecutionMode] = None,
    registry: Optional[LocalRegistry] = None,
    name: Optional[str] = None,
) -> Service:
    """
    Start a service for a checked program

    Args:
        checked: Program that passed the checker
        bindings: Location overrides by port name (input and output ports)
        seed: Seed for process ids, `new` tokens and thread scheduling
        events: Event log shared with other services
        execution: Override of the program's execution mode

    Returns:
        Running Service with zero processes

    Raises:
        BindError: If an input port cannot be bound
    """
    service = Service(checked, name, seed, events, bindings, execution, registry)
    await service.start()
    from .registry import get_service_registry
    get_service_registry().register(service.name, service)
    return service
