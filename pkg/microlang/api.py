"""Public API for microlang"""

from pathlib import Path
from typing import List, Mapping, Optional, Union

from .checker import CheckedProgram, check_program
from .lang import ast, parse_source
from .net import WireMessage, dial
from .net.local import LocalRegistry
from .net.location import Location
from .runtime import EventLog, Service, get_service_registry
from .runtime import start_service as _start_service
from .values.tree import ValueNode
from .utils.config import Config
from .utils.exceptions import ValidationError
from .utils.logger import logger


def load_program(path: Union[str, Path]) -> ast.Program:
    """
    Read and parse a service file

    Args:
        path: Path to a `.ml.svc` source file

    Returns:
        Parsed Program (not yet checked)

    Raises:
        OSError: If the file cannot be read
        LexError: On malformed tokens
        ParseError: On a syntax error
    """
    path = Path(path)
    source = path.read_text(encoding="utf-8")
    program = parse_source(source, str(path))
    logger.debug(f"Parsed {path}")
    return program


def check_file(path: Union[str, Path]) -> CheckedProgram:
    """
    Load and statically check a service file

    Returns:
        CheckedProgram; inspect `.ok` and `.diagnostics`
    """
    return check_program(load_program(path))


async def start_service(
    source: Union[str, Path, CheckedProgram],
    bindings: Optional[Mapping[str, str]] = None,
    seed: Optional[int] = None,
    events: Optional[EventLog] = None,
    execution: Optional[ast.ExecutionMode] = None,
    registry: Optional[LocalRegistry] = None,
    name: Optional[str] = None,
) -> Service:
    """
    Start a service from a file or an already checked program

    Args:
        source: Service file path or CheckedProgram
        bindings: Location overrides by port name
        seed: Seed for reproducible process ids, tokens and scheduling
        events: Event log to record into (shared across services)
        execution: Override of the declared execution mode
        registry: Local transport registry (defaults to the global one)
        name: Service name (defaults to the file name without suffix)

    Returns:
        Running Service

    Raises:
        ValidationError: If the program has check errors
        BindError: If an input port cannot be bound

    Example:
        >>> service = await start_service("services/shop.ml.svc", seed=7)
        >>> service.process_count()
        0
        >>> await service.stop()
    """
    checked = source if isinstance(source, CheckedProgram) else check_file(source)
    if not checked.ok:
        details = "; ".join(d.render() for d in checked.errors)
        raise ValidationError(f"{checked.program.file} does not check: {details}")
    return await _start_service(checked, bindings, seed, events, execution, registry, name)


async def call_operation(
    location: Union[str, Location],
    protocol: str,
    operation: str,
    payload: Optional[ValueNode] = None,
    timeout: Optional[float] = None,
    registry: Optional[LocalRegistry] = None,
) -> WireMessage:
    """
    Invoke one operation on a running service

    Args:
        location: `socket://host:port` or `local://name`
        protocol: `http` or `sodep-lite`
        operation: Operation name
        payload: Request value (void when omitted)
        timeout: Seconds to wait for the reply (default from Config)

    Returns:
        Reply message: response, one-way acknowledgement or fault

    Raises:
        LocationError: If the location does not parse
        ValidationError: If the protocol is not supported
        TransportError: On connection failure or timeout
    """
    if isinstance(location, str):
        location = Location.parse(location)
    channel = dial(
        location,
        protocol,
        timeout=timeout if timeout is not None else Config.get_call_timeout(),
        registry=registry,
    )
    try:
        return await channel.send(WireMessage.request(operation, payload))
    finally:
        await channel.close()


def list_services() -> List[str]:
    """Names of the services running in this interpreter"""
    return get_service_registry().list_all()


def get_service(name: str) -> Optional[Service]:
    return get_service_registry().get(name)


async def stop_all_services() -> None:
    """Stop every running service"""
    await get_service_registry().stop_all()
