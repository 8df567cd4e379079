"""Whole-program static checks and the CheckedProgram handed to the runtime"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from .diagnostics import Diagnostic
from .interfaces import ResolvedInterface, resolve_interface
from .starting import analyze_entry, procedure_table
from ..lang import ast
from ..net.location import Location, Scheme
from ..net.wire import PROTOCOL_PARAMS, SUPPORTED_PROTOCOLS, Protocol
from ..values.paths import Path
from ..values.types import NodeType, TypeExpr, TypeRef, resolve_type
from ..utils.exceptions import (
    CheckError,
    ConflictingSignature,
    LocationError,
    UnknownInterface,
    UnknownTypeError,
)
from ..utils.logger import logger


@dataclass
class CheckedProgram:
    """A program plus everything the runtime needs to route messages"""
    program: ast.Program
    port_interfaces: Dict[str, ResolvedInterface] = field(default_factory=dict)
    routing: Dict[str, List[str]] = field(default_factory=dict)
    input_operations: Dict[str, ast.OperationSig] = field(default_factory=dict)
    starting_ops: FrozenSet[str] = frozenset()
    cset_aliases: Dict[str, List[Tuple[str, Path]]] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    types: Dict[str, TypeExpr] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)

    @property
    def errors(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if not d.is_error]

    @property
    def cset_variables(self) -> List[str]:
        return [decl.variable for decl in self.program.csets]

    def input_port(self, name: str) -> Optional[ast.PortDecl]:
        for port in self.program.input_ports:
            if port.name == name:
                return port
        return None

    def output_port(self, name: str) -> Optional[ast.PortDecl]:
        for port in self.program.output_ports:
            if port.name == name:
                return port
        return None

    def output_operation(self, port: str, op_name: str) -> Optional[ast.OperationSig]:
        resolved = self.port_interfaces.get(port)
        return resolved.get(op_name) if resolved is not None else None


def _type_refs(type_expr: TypeExpr) -> Iterator[TypeRef]:
    if isinstance(type_expr, TypeRef):
        yield type_expr
    elif isinstance(type_expr, NodeType):
        for item in type_expr.fields:
            yield from _type_refs(item.type)


def _walk(node: ast.Behavior) -> Iterator[ast.Behavior]:
    """Pre-order traversal of a behavior tree"""
    yield node
    if isinstance(node, ast.Sequence):
        yield from _walk(node.first)
        yield from _walk(node.second)
    elif isinstance(node, ast.Parallel):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, ast.If):
        yield from _walk(node.then)
        if node.otherwise is not None:
            yield from _walk(node.otherwise)
    elif isinstance(node, ast.While):
        yield from _walk(node.body)
    elif isinstance(node, ast.InputChoice):
        for branch in node.branches:
            yield from _walk(branch.body)
    elif isinstance(node, ast.ProvideUntil):
        for branch in node.provide + node.until:
            yield from _walk(branch.body)


def _branches(node: ast.Behavior) -> Tuple[ast.InputBranch, ...]:
    if isinstance(node, ast.InputChoice):
        return node.branches
    if isinstance(node, ast.ProvideUntil):
        return node.provide + node.until
    return ()


class ProgramChecker:
    """
    Runs the checks in a fixed order (declarations first, then behaviors)
    so the diagnostic list is deterministic for a given program
    """

    def __init__(self, program: ast.Program):
        self.program = program
        self.result = CheckedProgram(program=program, types=program.type_env())
        self.interface_env = {decl.name: decl for decl in program.interfaces}
        self.procedures = procedure_table(program)

    def error(self, span, message: str, code: str) -> None:
        self.result.diagnostics.append(Diagnostic.error(span, message, code))

    def warning(self, span, message: str, code: str) -> None:
        self.result.diagnostics.append(Diagnostic.warning(span, message, code))

    def conflict(self, exc: ConflictingSignature, fallback_span) -> None:
        second = exc.second_span or fallback_span
        first = exc.first_span or fallback_span
        self.error(
            second,
            f"conflicting signatures for operation {exc.op_name}: {exc.first} (declared at {first}) vs {exc.second}",
            "conflicting-signature",
        )

    # -- declarations -------------------------------------------------------

    def check_unique_names(self) -> None:
        categories = (
            ("type", self.program.types),
            ("interface", self.program.interfaces),
            ("port", self.program.ports),
            ("procedure", self.program.procedures),
            ("cset variable", self.program.csets),
        )
        for label, items in categories:
            seen = {}
            for item in items:
                name = getattr(item, "name", None) or getattr(item, "variable")
                if name in seen:
                    self.error(item.span, f"duplicate {label} name {name} (first declared at {seen[name]})", "duplicate-name")
                else:
                    seen[name] = item.span

    def check_type_expr(self, type_expr: TypeExpr, span) -> None:
        for ref in _type_refs(type_expr):
            if ref.name not in self.result.types:
                self.error(ref.span or span, f"unknown type {ref.name}", "unknown-type")

    def check_types(self) -> None:
        for typedef in self.program.types:
            self.check_type_expr(typedef.type, typedef.span)
            try:
                resolve_type(typedef.type, self.result.types)
            except UnknownTypeError:
                pass  # already reported above
            except CheckError as e:
                self.error(typedef.span, f"type {typedef.name}: {e}", "type-cycle")

    def check_interfaces(self) -> None:
        for decl in self.program.interfaces:
            if isinstance(decl.expr, ast.InterfaceLiteral):
                for sig in decl.expr.operations:
                    self.check_type_expr(sig.request, sig.span)
                    if sig.response is not None:
                        self.check_type_expr(sig.response, sig.span)
            try:
                resolve_interface(decl.expr, self.interface_env, decl.name)
            except UnknownInterface as e:
                self.error(e.span or decl.span, f"unknown interface {e.name}", "unknown-interface")
            except ConflictingSignature as e:
                self.conflict(e, decl.span)
            except CheckError as e:
                self.error(decl.span, str(e), "interface")

    def check_protocol(self, port: ast.PortDecl, location: Optional[Location]) -> None:
        protocol = port.protocol
        if protocol.name == "https":
            self.error(
                protocol.span or port.span,
                f"port {port.name}: protocol https is not supported (TLS is out of scope); use http",
                "https",
            )
            return
        if protocol.name not in SUPPORTED_PROTOCOLS:
            self.error(
                protocol.span or port.span,
                f"port {port.name}: unknown protocol {protocol.name} (supported: {', '.join(SUPPORTED_PROTOCOLS)})",
                "unknown-protocol",
            )
            return
        if (
            protocol.name == Protocol.HTTP.value
            and port.direction == ast.PortDirection.INPUT
            and location is not None
            and location.scheme != Scheme.SOCKET
        ):
            self.error(port.span, f"port {port.name}: http input ports need a socket location", "http-location")
        for key, literal in protocol.params:
            if key not in PROTOCOL_PARAMS:
                self.error(literal.span or port.span, f"port {port.name}: unknown protocol parameter {key}", "protocol-param")
                continue
            value = literal.value
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                self.error(literal.span or port.span, f"port {port.name}: parameter {key} must be a non-negative number", "protocol-param")

    def check_ports(self) -> None:
        for port in self.program.ports:
            location = None
            if port.location is None:
                if port.direction == ast.PortDirection.INPUT:
                    self.error(port.span, f"input port {port.name} has no Location", "missing-location")
            else:
                try:
                    location = Location.parse(port.location)
                except LocationError as e:
                    self.error(port.span, f"port {port.name}: {e}", "bad-location")
            self.check_protocol(port, location)

            resolved = ResolvedInterface(port.name)
            for iface_name in port.interfaces:
                try:
                    current = resolve_interface(iface_name, self.interface_env)
                    resolved = resolved.union(current, port.name)
                except UnknownInterface as e:
                    self.error(port.span, f"port {port.name}: unknown interface {e.name}", "unknown-interface")
                except ConflictingSignature as e:
                    self.conflict(e, port.span)
                except CheckError as e:
                    self.error(port.span, f"port {port.name}: {e}", "interface")
            self.result.port_interfaces[port.name] = resolved

    def check_routing(self) -> None:
        """Operations exposed on several input ports must agree"""
        for port in self.program.input_ports:
            for op_name, sig in self.result.port_interfaces[port.name].ops.items():
                existing = self.result.input_operations.get(op_name)
                if existing is not None and existing != sig:
                    self.conflict(ConflictingSignature(op_name, existing, sig, existing.span, sig.span), port.span)
                    continue
                self.result.input_operations.setdefault(op_name, sig)
                self.result.routing.setdefault(op_name, []).append(port.name)

    def check_csets(self) -> None:
        for decl in self.program.csets:
            for alias in decl.aliases:
                if alias.operation not in self.result.input_operations:
                    self.error(
                        alias.span or decl.span,
                        f"cset alias to unknown operation {alias.operation}",
                        "alias-unknown-op",
                    )
                    continue
                self.check_alias_path(alias, decl)
                self.result.cset_aliases.setdefault(alias.operation, []).append((decl.variable, alias.path))

    def check_alias_path(self, alias: ast.CsetAlias, decl: ast.CsetDecl) -> None:
        """Every alias segment must be a field the request type declares"""
        current: TypeExpr = self.result.input_operations[alias.operation].request
        for segment in alias.path.segments:
            try:
                resolved = resolve_type(current, self.result.types)
            except CheckError:
                return  # reported by check_types
            item = resolved.field_named(segment.name) if isinstance(resolved, NodeType) else None
            if item is None:
                self.error(
                    alias.span or decl.span,
                    f"cset alias {alias.operation}.{alias.path}: no field {segment.name} in {current}",
                    "alias-unknown-field",
                )
                return
            if item.hi is not None and segment.index >= item.hi:
                self.error(
                    alias.span or decl.span,
                    f"cset alias {alias.operation}.{alias.path}: {segment} is beyond {item.cardinality()}",
                    "alias-index",
                )
                return
            current = item.type

    # -- behaviors ----------------------------------------------------------

    def check_recursion(self) -> None:
        calls = {
            name: [n.name for n in _walk(proc.body) if isinstance(n, ast.CallProcedure)]
            for name, proc in self.procedures.items()
        }
        for proc in self.program.procedures:
            stack = list(calls.get(proc.name, ()))
            seen = set()
            while stack:
                callee = stack.pop()
                if callee == proc.name:
                    self.error(proc.span, f"procedure {proc.name} calls itself recursively", "recursive-procedure")
                    break
                if callee in seen:
                    continue
                seen.add(callee)
                stack.extend(calls.get(callee, ()))

    def check_receive(self, branch: ast.InputBranch) -> None:
        sig = self.result.input_operations.get(branch.operation)
        if sig is None:
            self.error(branch.span, f"operation {branch.operation} not provided by any input port", "unknown-op")
            return
        received_rr = isinstance(branch, ast.RequestResponseBranch)
        if received_rr != (sig.kind == ast.OperationKind.REQUEST_RESPONSE):
            shape = "request-response" if received_rr else "one-way"
            self.error(
                branch.span,
                f"operation {branch.operation} is {sig.kind.value} but is received as {shape}",
                "kind-mismatch",
            )

    def check_send(self, node, one_way: bool) -> None:
        port = self._output_port(node.port)
        if port is None:
            self.error(node.span, f"unknown output port {node.port}", "unknown-port")
            return
        sig = self.result.output_operation(node.port, node.operation)
        if sig is None:
            self.error(node.span, f"operation {node.operation} not declared on output port {node.port}", "unknown-op")
            return
        expected = ast.OperationKind.ONE_WAY if one_way else ast.OperationKind.REQUEST_RESPONSE
        if sig.kind != expected:
            verb = "notified" if one_way else "solicited"
            self.error(node.span, f"operation {node.operation} is {sig.kind.value} but is {verb}", "kind-mismatch")

    def _output_port(self, name: str) -> Optional[ast.PortDecl]:
        return self.result.output_port(name)

    def check_behavior(self, body: ast.Behavior) -> None:
        for node in _walk(body):
            for branch in _branches(node):
                self.check_receive(branch)
            if isinstance(node, ast.Notify):
                self.check_send(node, one_way=True)
            elif isinstance(node, ast.SolicitResponse):
                self.check_send(node, one_way=False)
            elif isinstance(node, ast.Rebind):
                if self._output_port(node.port) is None:
                    self.error(node.span, f"rebind of unknown output port {node.port}", "unknown-port")
            elif isinstance(node, ast.CallProcedure):
                if node.name not in self.procedures:
                    self.error(node.span, f"unknown procedure {node.name}", "unknown-procedure")

    def check_entry(self) -> None:
        main = self.program.main
        entry = analyze_entry(main, self.procedures)
        starting = [op for op in entry.ops if op in self.result.input_operations]
        self.result.starting_ops = frozenset(starting)
        span = getattr(main, "span", None) or self.program.span
        if not entry.ops:
            self.warning(span, "main has no starting operation; the service can never spawn a process", "empty-start-set")
        elif entry.may_pass:
            self.warning(span, "main can terminate without receiving any message", "empty-start-set")
        if entry.sends_first:
            self.warning(span, "main may send before its first receive", "send-before-receive")

    def run(self) -> CheckedProgram:
        self.check_unique_names()
        self.check_types()
        self.check_interfaces()
        self.check_ports()
        self.check_routing()
        self.check_csets()
        self.check_recursion()
        for proc in self.program.procedures:
            self.check_behavior(proc.body)
        self.check_behavior(self.program.main)
        self.check_entry()
        logger.debug(
            f"Checked {self.program.file}: {len(self.result.errors)} error(s), "
            f"{len(self.result.warnings)} warning(s), starting ops {sorted(self.result.starting_ops)}"
        )
        return self.result


def check_program(program: ast.Program) -> CheckedProgram:
    """
    Statically check a parsed program

    Args:
        program: Parsed Program

    Returns:
        CheckedProgram; `ok` is False iff an error diagnostic was produced
    """
    return ProgramChecker(program).run()
