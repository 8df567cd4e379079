"""Process instances and the small-step workflow interpreter"""

import asyncio
import itertools
import random
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, List, Mapping, Optional, Tuple

from .events import EventKind, EventLog
from .expressions import Evaluator
from ..lang import ast
from ..net.wire import WireMessage
from ..values.paths import Path, path_set, path_unset
from ..values.tree import ValueNode
from ..values.tokens import TokenSource
from ..utils.config import Config
from ..utils.exceptions import RuntimeFault
from ..utils.logger import logger


@dataclass
class MessageEnvelope:
    """
    An incoming message as seen by the runtime

    `reply` is present iff the operation is request-response; it resolves
    to the WireMessage sent back to the caller.
    """
    operation: str
    payload: ValueNode
    reply: Optional[asyncio.Future] = None
    origin: str = ""
    port: str = ""
    seq: int = 0

    @property
    def awaits_reply(self) -> bool:
        return self.reply is not None

    def respond(self, payload: ValueNode) -> bool:
        if self.reply is None or self.reply.done():
            return False
        self.reply.set_result(WireMessage.response(self.operation, payload))
        return True

    def respond_fault(self, fault: RuntimeFault) -> bool:
        if self.reply is None or self.reply.done():
            return False
        self.reply.set_result(WireMessage.from_fault(self.operation, fault))
        return True


class ProcessStatus(str, Enum):
    RUNNING = "running"
    AWAITING = "awaiting"
    BLOCKED = "blocked"
    TERMINATED = "terminated"


class ThreadState(str, Enum):
    RUNNABLE = "runnable"
    AWAITING = "awaiting"
    BLOCKED = "blocked"
    JOINING = "joining"
    DONE = "done"


class FrameKind(str, Enum):
    EXEC = "exec"
    REPLY = "reply"


@dataclass
class Frame:
    kind: FrameKind
    node: Any
    envelope: Optional[MessageEnvelope] = None


@dataclass
class Thread:
    """One strand of control; `parallel` forks two children and joins them"""
    tid: int
    frames: List[Frame] = field(default_factory=list)
    state: ThreadState = ThreadState.RUNNABLE
    parent: Optional["Thread"] = None
    children_left: int = 0
    guards: Tuple[ast.InputBranch, ...] = ()
    provide: Optional[ast.ProvideUntil] = None

    def push(self, node: ast.Behavior) -> None:
        self.frames.append(Frame(FrameKind.EXEC, node))


class EffectKind(str, Enum):
    SOLICIT = "solicit"
    NOTIFY = "notify"
    SLEEP = "sleep"


@dataclass
class Effect:
    """Asynchronous work a blocked thread waits on"""
    kind: EffectKind
    thread: Thread
    port: Optional[str] = None
    operation: Optional[str] = None
    payload: Optional[ValueNode] = None
    response_path: Optional[Path] = None
    millis: float = 0.0


class ProcessHost(ABC):
    """Environment a process runs in (a service, or nothing at all)"""

    name: str = ""

    @abstractmethod
    def record(self, process: "ProcessInstance", kind: EventKind, op: Optional[str] = None,
               port: Optional[str] = None, detail: Optional[str] = None) -> None:
        pass

    @abstractmethod
    def procedure(self, name: str) -> Optional[ast.Procedure]:
        pass

    @abstractmethod
    async def solicit(self, process: "ProcessInstance", port: str, operation: str, payload: ValueNode) -> ValueNode:
        pass

    @abstractmethod
    async def notify(self, process: "ProcessInstance", port: str, operation: str, payload: ValueNode) -> None:
        pass

    @abstractmethod
    def rebind(self, process: "ProcessInstance", port: str, location: str, protocol: str) -> None:
        pass

    def cset_written(self, process: "ProcessInstance") -> None:
        """Called after every write under `csets`"""
        pass

    def on_terminate(self, process: "ProcessInstance") -> None:
        pass


class DetachedHost(ProcessHost):
    """Host without ports: communication raises IOFault"""

    def __init__(self, procedures: Optional[Mapping[str, ast.Procedure]] = None, events: Optional[EventLog] = None,
                 name: str = "detached"):
        self.procedures = dict(procedures or {})
        self.events = events or EventLog()
        self.name = name

    def record(self, process, kind, op=None, port=None, detail=None) -> None:
        self.events.record(self.name, process.pid, kind, op, port, detail)

    def procedure(self, name: str) -> Optional[ast.Procedure]:
        return self.procedures.get(name)

    async def solicit(self, process, port, operation, payload) -> ValueNode:
        raise RuntimeFault(RuntimeFault.IO_FAULT, f"no output port {port} outside a service")

    async def notify(self, process, port, operation, payload) -> None:
        raise RuntimeFault(RuntimeFault.IO_FAULT, f"no output port {port} outside a service")

    def rebind(self, process, port, location, protocol) -> None:
        raise RuntimeFault(RuntimeFault.IO_FAULT, f"no output port {port} outside a service")


class ProcessInstance:
    """
    A running instance of a workflow

    The state tree is private to the process. Incoming messages wait in
    per-operation FIFO queues; the oldest message across the guards of an
    input choice is consumed first.
    """

    def __init__(
        self,
        pid: str,
        behavior: ast.Behavior,
        host: ProcessHost,
        tokens: Optional[TokenSource] = None,
        rng: Optional[random.Random] = None,
        state: Optional[ValueNode] = None,
        created: int = 0,
    ):
        self.pid = pid
        self.host = host
        self.tokens = tokens
        self.rng = rng or random.Random(0)
        self.state = state if state is not None else ValueNode()
        self.created = created
        self.mailbox: Dict[str, Deque[MessageEnvelope]] = {}
        self.effects: List[Effect] = []
        self.current_op: Optional[Tuple[str, str]] = None
        self.terminated = False
        self.fault: Optional[RuntimeFault] = None
        self._tids = itertools.count()
        self._arrivals = itertools.count()
        root = Thread(next(self._tids))
        root.push(behavior)
        self.threads: List[Thread] = [root]
        self.wakeup: Optional[asyncio.Event] = None
        self._tasks: List[asyncio.Task] = []

    # -- introspection ------------------------------------------------------

    @property
    def status(self) -> ProcessStatus:
        if self.terminated:
            return ProcessStatus.TERMINATED
        if any(self._is_runnable(t) for t in self.threads):
            return ProcessStatus.RUNNING
        if any(t.state == ThreadState.AWAITING for t in self.threads):
            return ProcessStatus.AWAITING
        return ProcessStatus.BLOCKED

    def awaiting_ops(self) -> List[str]:
        ops = []
        for thread in self.threads:
            if thread.state == ThreadState.AWAITING:
                for branch in thread.guards:
                    if branch.operation not in ops:
                        ops.append(branch.operation)
        return ops

    def buffered(self, operation: Optional[str] = None) -> int:
        if operation is not None:
            return len(self.mailbox.get(operation, ()))
        return sum(len(q) for q in self.mailbox.values())

    def evaluator(self) -> Evaluator:
        return Evaluator(self.state, self.tokens)

    # -- mailbox ------------------------------------------------------------

    def enqueue(self, envelope: MessageEnvelope) -> bool:
        """
        Append a routed message to its operation queue

        Returns:
            True when a thread is currently waiting for the operation
        """
        envelope.seq = next(self._arrivals)
        self.mailbox.setdefault(envelope.operation, deque()).append(envelope)
        self.wake()
        return envelope.operation in self.awaiting_ops()

    def wake(self) -> None:
        if self.wakeup is not None:
            self.wakeup.set()

    # -- stepping -----------------------------------------------------------

    def _is_runnable(self, thread: Thread) -> bool:
        if thread.state == ThreadState.RUNNABLE:
            return True
        if thread.state == ThreadState.AWAITING:
            return any(self.mailbox.get(b.operation) for b in thread.guards)
        return False

    def runnable_threads(self) -> List[Thread]:
        return [t for t in self.threads if self._is_runnable(t)]

    def step(self) -> bool:
        """
        Execute one statement of one runnable thread (picked by the
        process's random generator)

        Returns:
            False when no thread could make progress
        """
        if self.terminated:
            return False
        runnable = self.runnable_threads()
        if not runnable:
            return False
        thread = runnable[0] if len(runnable) == 1 else self.rng.choice(runnable)
        try:
            self._advance(thread)
        except RuntimeFault as fault:
            self.fail(fault)
        return True

    def _advance(self, thread: Thread) -> None:
        if thread.state == ThreadState.AWAITING:
            self._consume(thread)
        else:
            while thread.frames:
                frame = thread.frames.pop()
                if self._execute(thread, frame):
                    break
        if not thread.frames and thread.state == ThreadState.RUNNABLE:
            self._finish(thread)

    def _finish(self, thread: Thread) -> None:
        thread.state = ThreadState.DONE
        if thread in self.threads:
            self.threads.remove(thread)
        parent = thread.parent
        if parent is None:
            self.terminate()
            return
        parent.children_left -= 1
        if parent.children_left == 0:
            parent.state = ThreadState.RUNNABLE
            if not parent.frames:
                self._finish(parent)

    def _consume(self, thread: Thread) -> None:
        chosen = None
        for branch in thread.guards:
            queue = self.mailbox.get(branch.operation)
            if queue and (chosen is None or queue[0].seq < chosen[1].seq):
                chosen = (branch, queue[0])
        branch, envelope = chosen
        self.mailbox[branch.operation].popleft()
        provide = thread.provide
        thread.state = ThreadState.RUNNABLE
        thread.guards = ()
        thread.provide = None

        self.current_op = (envelope.operation, envelope.port)
        self.host.record(self, EventKind.RECV, envelope.operation, envelope.port)
        if branch.request is not None:
            try:
                path = self.evaluator().path(branch.request)
                path_set(self.state, path, envelope.payload.copy())
                if path.is_cset:
                    self.host.cset_written(self)
            except RuntimeFault as fault:
                # no REPLY frame exists yet for fail() to answer
                envelope.respond_fault(fault)
                raise

        if provide is not None and any(b is branch for b in provide.provide):
            thread.push(provide)
        if isinstance(branch, ast.RequestResponseBranch):
            thread.frames.append(Frame(FrameKind.REPLY, branch, envelope))
        thread.push(branch.body)

    def _execute(self, thread: Thread, frame: Frame) -> bool:
        """Run one frame; True once a statement executed or the thread blocked"""
        if frame.kind == FrameKind.REPLY:
            self._reply(frame.node, frame.envelope)
            return True

        node = frame.node
        ev = self.evaluator()

        if isinstance(node, ast.Sequence):
            thread.push(node.second)
            thread.push(node.first)
            return False

        if isinstance(node, ast.Nil):
            return True

        if isinstance(node, ast.Assign):
            value = ev.eval(node.expr)
            path = ev.path(node.path)
            path_set(self.state, path, value)
            if path.is_cset:
                self.host.cset_written(self)
            return True

        if isinstance(node, ast.Undef):
            path = ev.path(node.path)
            path_unset(self.state, path)
            if path.is_cset:
                self.host.cset_written(self)
            return True

        if isinstance(node, ast.Parallel):
            for branch in (node.left, node.right):
                child = Thread(next(self._tids), parent=thread)
                child.push(branch)
                self.threads.append(child)
            thread.children_left = 2
            thread.state = ThreadState.JOINING
            return True

        if isinstance(node, ast.If):
            if ev.condition(node.condition):
                thread.push(node.then)
            elif node.otherwise is not None:
                thread.push(node.otherwise)
            return True

        if isinstance(node, ast.While):
            if ev.condition(node.condition):
                thread.push(node)
                thread.push(node.body)
            return True

        if isinstance(node, ast.CallProcedure):
            proc = self.host.procedure(node.name)
            if proc is None:
                raise RuntimeFault(RuntimeFault.IO_FAULT, f"unknown procedure {node.name}")
            self.host.record(self, EventKind.CALL, node.name)
            thread.push(proc.body)
            return True

        if isinstance(node, ast.InputChoice):
            thread.state = ThreadState.AWAITING
            thread.guards = node.branches
            thread.provide = None
            return True

        if isinstance(node, ast.ProvideUntil):
            thread.state = ThreadState.AWAITING
            thread.guards = node.provide + node.until
            thread.provide = node
            return True

        if isinstance(node, (ast.Notify, ast.SolicitResponse)):
            payload = ev.eval(node.request) if node.request is not None else ValueNode()
            effect = Effect(
                EffectKind.NOTIFY if isinstance(node, ast.Notify) else EffectKind.SOLICIT,
                thread,
                port=node.port,
                operation=node.operation,
                payload=payload,
            )
            if isinstance(node, ast.SolicitResponse):
                effect.response_path = ev.path(node.response)
            self.host.record(self, EventKind.SEND, node.operation, node.port)
            self._block(thread, effect)
            return True

        if isinstance(node, ast.Rebind):
            location = ev.eval(node.location).root
            protocol = ev.eval(node.protocol).root
            if not isinstance(location, str) or not isinstance(protocol, str):
                raise RuntimeFault(RuntimeFault.TYPE_MISMATCH, "rebind needs string location and protocol")
            self.host.rebind(self, node.port, location, protocol)
            return True

        if isinstance(node, ast.Sleep):
            millis = ev.eval(node.millis).root
            if isinstance(millis, bool) or not isinstance(millis, (int, float)) or millis < 0:
                raise RuntimeFault(RuntimeFault.TYPE_MISMATCH, "sleep needs a non-negative number of milliseconds")
            self._block(thread, Effect(EffectKind.SLEEP, thread, millis=float(millis)))
            return True

        raise TypeError(f"not a behavior: {node!r}")

    def _block(self, thread: Thread, effect: Effect) -> None:
        thread.state = ThreadState.BLOCKED
        self.effects.append(effect)

    def _reply(self, branch: ast.RequestResponseBranch, envelope: MessageEnvelope) -> None:
        payload = self.evaluator().eval(branch.response) if branch.response is not None else ValueNode()
        if envelope.respond(payload):
            self.host.record(self, EventKind.SEND, envelope.operation, envelope.port)

    # -- effects ------------------------------------------------------------

    @property
    def pending_effects(self) -> int:
        return len(self._tasks)

    def take_effects(self) -> List[Effect]:
        effects, self.effects = self.effects, []
        return effects

    def complete(self, effect: Effect, result: Optional[ValueNode] = None,
                 fault: Optional[RuntimeFault] = None) -> None:
        """Resume the thread blocked on `effect`"""
        if self.terminated:
            return
        if fault is not None:
            self.fail(fault)
            return
        if effect.kind == EffectKind.SOLICIT:
            path_set(self.state, effect.response_path, result if result is not None else ValueNode())
            if effect.response_path.is_cset:
                try:
                    self.host.cset_written(self)
                except RuntimeFault as e:
                    self.fail(e)
                    return
        effect.thread.state = ThreadState.RUNNABLE
        if not effect.thread.frames:
            self._finish(effect.thread)
        self.wake()

    # -- termination --------------------------------------------------------

    def fail(self, fault: RuntimeFault) -> None:
        """Terminate on a runtime fault, answering every pending reply with it"""
        if self.terminated:
            return
        self.fault = fault
        op, port = self.current_op or (None, None)
        logger.error(f"Process {self.pid} of {self.host.name} failed: {fault}")
        self.host.record(self, EventKind.FAULT, op, port, fault.kind)
        for thread in self.threads:
            for frame in thread.frames:
                if frame.kind == FrameKind.REPLY:
                    frame.envelope.respond_fault(fault)
        self.terminate()

    def terminate(self) -> None:
        if self.terminated:
            return
        self.terminated = True
        self.threads = []
        self.effects = []
        leftover = RuntimeFault(RuntimeFault.CORRELATION_ERROR, f"process {self.pid} terminated")
        for queue in self.mailbox.values():
            for envelope in queue:
                if envelope.respond_fault(leftover):
                    self.host.record(self, EventKind.FAULT, envelope.operation, envelope.port, leftover.kind)
        self.mailbox.clear()
        current = asyncio.current_task() if self._tasks else None
        for task in self._tasks:
            if task is not current and not task.done():
                task.cancel()
        self.host.record(self, EventKind.TERMINATE)
        self.host.on_terminate(self)
        self.wake()

    # -- driver -------------------------------------------------------------

    async def _perform(self, effect: Effect) -> None:
        try:
            if effect.kind == EffectKind.SLEEP:
                await asyncio.sleep(effect.millis / 1000.0)
                self.complete(effect)
            elif effect.kind == EffectKind.NOTIFY:
                await self.host.notify(self, effect.port, effect.operation, effect.payload)
                self.complete(effect)
            else:
                result = await self.host.solicit(self, effect.port, effect.operation, effect.payload)
                self.complete(effect, result)
        except asyncio.CancelledError:
            raise
        except RuntimeFault as fault:
            self.complete(effect, fault=fault)

    def _launch_effects(self) -> None:
        for effect in self.take_effects():
            task = asyncio.create_task(self._perform(effect))
            self._tasks.append(task)
            task.add_done_callback(self._forget)

    def _forget(self, task: asyncio.Task) -> None:
        if task in self._tasks:
            self._tasks.remove(task)

    async def run(self, yield_every: Optional[int] = None) -> None:
        """
        Drive the process to termination

        Runs steps back-to-back while a thread is runnable and yields to
        the event loop when every thread is waiting, or after
        `yield_every` consecutive steps.
        """
        yield_every = yield_every or Config.SCHEDULER_YIELD_EVERY
        self.wakeup = asyncio.Event()
        try:
            while not self.terminated:
                steps = 0
                while self.step():
                    self._launch_effects()
                    steps += 1
                    if steps >= yield_every:
                        steps = 0
                        await asyncio.sleep(0)
                self._launch_effects()
                if self.terminated:
                    break
                self.wakeup.clear()
                if self.runnable_threads():
                    continue
                await self.wakeup.wait()
        except asyncio.CancelledError:
            self.terminate()
            raise


def step_process(process: ProcessInstance) -> ProcessStatus:
    """Execute one step and report the resulting status"""
    process.step()
    return process.status


async def run_behavior(
    behavior: ast.Behavior,
    procedures: Optional[Mapping[str, ast.Procedure]] = None,
    state: Optional[ValueNode] = None,
    seed: Optional[int] = None,
    events: Optional[EventLog] = None,
) -> ProcessInstance:
    """
    Run a behavior detached from any service and return the finished process

    Receives never complete and communication statements fault with
    IOFault, so this is meant for behaviors built from assignments,
    control flow, parallel composition and sleeps.
    """
    tokens = TokenSource(seed)
    host = DetachedHost(procedures, events)
    process = ProcessInstance(tokens.fresh(), behavior, host, tokens, tokens.derive(), state)
    host.record(process, EventKind.SPAWN)
    runner = asyncio.create_task(process.run())
    while not runner.done():
        if process.status == ProcessStatus.AWAITING and not process.effects and not process.pending_effects:
            # nothing can ever arrive for a detached process
            runner.cancel()
            break
        await asyncio.wait({runner}, timeout=0.005)
    try:
        await runner
    except asyncio.CancelledError:
        pass
    return process
