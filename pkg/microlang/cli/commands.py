"""CLI command implementations

Every command returns its process exit code:
0 success, 1 semantic failure (check errors, bind errors), 2 usage or
input error, 3 fault reply, 4 transport failure.
"""

import asyncio
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple

import yaml
from tabulate import tabulate

from ..api import call_operation, load_program, start_service
from ..checker import CheckedProgram, check_program
from ..lang import ast
from ..net.json_codec import decode_json, encode_json
from ..net.http import fault_body
from ..net.location import Location
from ..runtime import EventKind, EventLog, load_events
from ..utils.exceptions import (
    BindError,
    DecodeError,
    LexError,
    LocationError,
    ParseError,
    TransportError,
    ValidationError,
)
from ..utils.logger import logger

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_USAGE = 2
EXIT_FAULT = 3
EXIT_TRANSPORT = 4


@dataclass
class RunConfig:
    """Everything `microlang run` needs to host a set of services"""
    files: List[str] = field(default_factory=list)
    bindings: Dict[str, str] = field(default_factory=dict)
    trace: bool = False
    trace_file: Optional[str] = None
    seed: Optional[int] = None
    execution: Optional[ast.ExecutionMode] = None

    @classmethod
    def from_yaml(cls, path: str) -> "RunConfig":
        """
        Load a run configuration file

        Keys: services (list), bind (mapping), trace (bool), seed (int),
        execution (concurrent | sequential). Relative service paths are
        resolved against the file's directory.

        Raises:
            ValidationError: On unreadable or malformed configuration
        """
        config_path = Path(path)
        try:
            data = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ValidationError(f"cannot read run configuration {path}: {e}")
        if not isinstance(data, dict):
            raise ValidationError(f"run configuration {path} must be a mapping")

        services = data.get("services") or []
        bind = data.get("bind") or {}
        if not isinstance(services, list) or not isinstance(bind, dict):
            raise ValidationError("'services' must be a list and 'bind' a mapping")

        config = cls(
            files=[str((config_path.parent / s) if not Path(s).is_absolute() else s) for s in services],
            bindings={str(k): str(v) for k, v in bind.items()},
            trace=bool(data.get("trace", False)),
            seed=data.get("seed"),
        )
        if config.seed is not None and not isinstance(config.seed, int):
            raise ValidationError("'seed' must be an integer")
        if "execution" in data:
            config.execution = parse_execution(str(data["execution"]))
        return config

    def merge(
        self,
        files: Optional[List[str]] = None,
        bindings: Optional[Dict[str, str]] = None,
        trace: bool = False,
        trace_file: Optional[str] = None,
        seed: Optional[int] = None,
        execution: Optional[ast.ExecutionMode] = None,
    ) -> "RunConfig":
        """Command-line values override file values"""
        return RunConfig(
            files=list(self.files) + list(files or []),
            bindings={**self.bindings, **(bindings or {})},
            trace=self.trace or trace,
            trace_file=trace_file or self.trace_file,
            seed=seed if seed is not None else self.seed,
            execution=execution or self.execution,
        )


def parse_execution(text: str) -> ast.ExecutionMode:
    try:
        return ast.ExecutionMode(text)
    except ValueError:
        raise ValidationError(f"execution must be 'concurrent' or 'sequential', not {text!r}")


def parse_bindings(items: Optional[List[str]]) -> Dict[str, str]:
    """Parse PORT=LOCATION pairs"""
    bindings = {}
    for item in items or []:
        if "=" not in item:
            raise ValidationError(f"invalid binding (should be PORT=LOCATION): {item}")
        port, location = item.split("=", 1)
        bindings[port.strip()] = location.strip()
    return bindings


def _syntax_message(error: Exception) -> str:
    if isinstance(error, LexError):
        return f"{error.span}: error: {error.message}"
    expected = ", ".join(error.expected) or "nothing"
    return f"{error.span}: error: expected {expected}, found {error.found}"


def load_and_check(files: List[str], err: TextIO) -> Tuple[int, List[CheckedProgram]]:
    """
    Parse and check every file, printing diagnostics to `err`

    Returns:
        (exit code, checked programs)
    """
    code = EXIT_OK
    checked_programs = []
    for file in files:
        try:
            program = load_program(file)
        except OSError as e:
            print(f"{file}: error: cannot read file: {e.strerror or e}", file=err)
            code = max(code, EXIT_USAGE)
            continue
        except (LexError, ParseError) as e:
            print(_syntax_message(e), file=err)
            code = max(code, EXIT_USAGE)
            continue
        checked = check_program(program)
        for diagnostic in checked.diagnostics:
            print(diagnostic.render(), file=err)
        if not checked.ok:
            code = max(code, EXIT_SEMANTIC)
        checked_programs.append(checked)
    return code, checked_programs


def cmd_check(files: List[str], err: Optional[TextIO] = None) -> int:
    """Check service files; diagnostics go to `err`"""
    err = err or sys.stderr
    code, checked_programs = load_and_check(files, err)
    if code == EXIT_OK:
        logger.info(f"✓ {len(checked_programs)} file(s) checked")
    return code


def validate_bindings(bindings: Dict[str, str], programs: List[CheckedProgram]) -> None:
    """
    Raises:
        ValidationError: If a binding names an undeclared port or a bad location
    """
    declared = {port.name for checked in programs for port in checked.program.ports}
    for port, location in bindings.items():
        if port not in declared:
            raise ValidationError(f"--bind names unknown port {port}")
        try:
            Location.parse(location)
        except LocationError as e:
            raise ValidationError(str(e))


async def run_services(
    config: RunConfig,
    stop: Optional[asyncio.Event] = None,
    out: Optional[TextIO] = None,
    err: Optional[TextIO] = None,
) -> int:
    """
    Start every configured service and serve until `stop` is set or the
    task is cancelled
    """
    out, err = out or sys.stdout, err or sys.stderr
    code, programs = load_and_check(config.files, err)
    if code != EXIT_OK:
        return code
    if not programs:
        print("error: no service files given", file=err)
        return EXIT_USAGE
    try:
        validate_bindings(config.bindings, programs)
    except ValidationError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE

    events = EventLog(sink=out if config.trace else None)
    trace_handle = None
    if config.trace_file:
        try:
            trace_handle = open(config.trace_file, "a", encoding="utf-8")
        except OSError as e:
            print(f"error: cannot open trace file {config.trace_file}: {e.strerror or e}", file=err)
            return EXIT_USAGE
        events.add_sink(trace_handle)

    started = []
    try:
        for index, checked in enumerate(programs):
            seed = config.seed + index if config.seed is not None else None
            try:
                service = await start_service(
                    checked,
                    bindings=config.bindings,
                    seed=seed,
                    events=events,
                    execution=config.execution,
                )
            except BindError as e:
                print(f"{checked.program.file}: error: {e}", file=err)
                return EXIT_SEMANTIC
            started.append(service)
            logger.info(f"✓ Service '{service.name}' started")

        await (stop or asyncio.Event()).wait()
        return EXIT_OK
    finally:
        for service in started:
            await service.stop()
        if trace_handle is not None:
            trace_handle.close()


async def cmd_call(
    location: str,
    protocol: str,
    operation: str,
    payload_json: str,
    oneway: bool = False,
    timeout: Optional[float] = None,
    out: Optional[TextIO] = None,
    err: Optional[TextIO] = None,
) -> int:
    """Invoke one operation and print the canonical JSON reply"""
    out, err = out or sys.stdout, err or sys.stderr
    try:
        payload = decode_json(payload_json)
    except DecodeError as e:
        print(f"error: invalid JSON payload: {e}", file=err)
        return EXIT_USAGE

    logger.debug(f"Calling {operation} at {location} ({protocol})")
    try:
        reply = await call_operation(location, protocol, operation, payload, timeout)
    except (LocationError, ValidationError) as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    except TransportError as e:
        print(f"error: {e}", file=err)
        return EXIT_TRANSPORT

    if reply.is_fault:
        fault = reply.to_fault()
        print(json.dumps(fault_body(fault.kind, fault.path), separators=(",", ":")), file=out)
        return EXIT_FAULT
    if not oneway:
        print(encode_json(reply.payload), file=out)
    return EXIT_OK


def cmd_trace(
    file: str,
    pid: Optional[str] = None,
    kind: Optional[str] = None,
    out: Optional[TextIO] = None,
    err: Optional[TextIO] = None,
) -> int:
    """Render a recorded event log as a table"""
    out, err = out or sys.stdout, err or sys.stderr
    try:
        wanted = EventKind(kind) if kind else None
    except ValueError:
        print(f"error: unknown event kind {kind!r}", file=err)
        return EXIT_USAGE
    try:
        with open(file, encoding="utf-8") as f:
            events = load_events(f)
    except OSError as e:
        print(f"error: cannot read {file}: {e.strerror or e}", file=err)
        return EXIT_USAGE
    except (ValueError, KeyError) as e:
        print(f"error: malformed event log {file}: {e}", file=err)
        return EXIT_USAGE

    rows = [
        [f"{e.ts:.6f}", e.service, e.pid or "-", e.kind.value, e.op or "", e.port or "", e.detail or ""]
        for e in events
        if (pid is None or e.pid == pid) and (wanted is None or e.kind == wanted)
    ]
    print(tabulate(rows, headers=["ts", "service", "pid", "kind", "op", "port", "detail"]), file=out)
    return EXIT_OK
