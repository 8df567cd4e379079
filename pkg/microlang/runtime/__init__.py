"""Process runtime: interpreter, services and the event log"""

from .events import Event, EventKind, EventLog, load_events, normalize
from .expressions import Evaluator, evaluate
from .process import (
    DetachedHost,
    MessageEnvelope,
    ProcessHost,
    ProcessInstance,
    ProcessStatus,
    run_behavior,
    step_process,
)
from .registry import ServiceRegistry, get_service_registry
from .service import (
    InputPortHandler,
    OutputBinding,
    ProcessInfo,
    RouteKind,
    RoutingOutcome,
    Service,
    start_service,
)

__all__ = [
    "Event",
    "EventKind",
    "EventLog",
    "load_events",
    "normalize",
    "Evaluator",
    "evaluate",
    "DetachedHost",
    "MessageEnvelope",
    "ProcessHost",
    "ProcessInstance",
    "ProcessStatus",
    "run_behavior",
    "step_process",
    "ServiceRegistry",
    "get_service_registry",
    "InputPortHandler",
    "OutputBinding",
    "ProcessInfo",
    "RouteKind",
    "RoutingOutcome",
    "Service",
    "start_service",
]
