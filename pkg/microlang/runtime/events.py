"""Structured runtime event log (line-delimited JSON)"""

import json
import time
from dataclasses import asdict, dataclass
from enum import Enum
from threading import Lock
from typing import Callable, Iterable, List, Optional, TextIO, Tuple


class EventKind(str, Enum):
    SPAWN = "spawn"
    RECV = "recv"
    SEND = "send"
    BUFFER = "buffer"
    FAULT = "fault"
    TERMINATE = "terminate"
    CALL = "call"


@dataclass(frozen=True)
class Event:
    ts: float
    service: str
    pid: Optional[str]
    kind: EventKind
    op: Optional[str] = None
    port: Optional[str] = None
    detail: Optional[str] = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data["kind"] = self.kind.value
        if self.detail is None:
            del data["detail"]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False)

    def stable(self) -> Tuple:
        """Event without its timestamp, for log comparisons"""
        return (self.service, self.pid, self.kind.value, self.op, self.port, self.detail)

    @classmethod
    def from_dict(cls, data: dict) -> "Event":
        return cls(
            ts=float(data.get("ts", 0.0)),
            service=data.get("service", ""),
            pid=data.get("pid"),
            kind=EventKind(data["kind"]),
            op=data.get("op"),
            port=data.get("port"),
            detail=data.get("detail"),
        )


class EventLog:
    """
    Thread-safe append-only event log

    Records are kept in memory and, when sinks are attached, written to
    each of them as one JSON object per line and flushed immediately.
    """

    def __init__(self, sink: Optional[TextIO] = None, clock: Callable[[], float] = time.time):
        self._events: List[Event] = []
        self._sinks: List[TextIO] = [sink] if sink is not None else []
        self._clock = clock
        self._lock = Lock()

    def add_sink(self, sink: TextIO) -> None:
        with self._lock:
            self._sinks.append(sink)

    def record(
        self,
        service: str,
        pid: Optional[str],
        kind: EventKind,
        op: Optional[str] = None,
        port: Optional[str] = None,
        detail: Optional[str] = None,
    ) -> Event:
        with self._lock:
            event = Event(self._clock(), service, pid, kind, op, port, detail)
            self._events.append(event)
            for sink in self._sinks:
                sink.write(event.to_json() + "\n")
                sink.flush()
            return event

    @property
    def events(self) -> List[Event]:
        """Snapshot copy of the recorded events"""
        with self._lock:
            return list(self._events)

    def filter(
        self,
        pid: Optional[str] = None,
        kind: Optional[EventKind] = None,
        service: Optional[str] = None,
        op: Optional[str] = None,
    ) -> List[Event]:
        return [
            e for e in self.events
            if (pid is None or e.pid == pid)
            and (kind is None or e.kind == kind)
            and (service is None or e.service == service)
            and (op is None or e.op == op)
        ]

    def clear(self) -> None:
        with self._lock:
            self._events.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)


def load_events(lines: Iterable[str]) -> List[Event]:
    """Parse line-delimited JSON events, skipping blank lines"""
    events = []
    for line in lines:
        line = line.strip()
        if line:
            events.append(Event.from_dict(json.loads(line)))
    return events


def normalize(events: Iterable[Event]) -> List[Tuple]:
    """
    Timestamp-free view with pids renamed to first-appearance ordinals,
    so logs of equivalent runs compare equal
    """
    names = {}
    result = []
    for event in events:
        pid = event.pid
        if pid is not None:
            pid = names.setdefault(pid, f"p{len(names)}")
        result.append((event.service, pid, event.kind.value, event.op, event.port, event.detail))
    return result
