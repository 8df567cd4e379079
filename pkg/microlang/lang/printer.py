"""Canonical pretty-printer for microlang programs

Output always re-parses to a structurally equal Program. Binary
sub-expressions are fully parenthesized and parallel operands are always
braced, so no precedence reasoning is needed on the way back in.
"""

import json
from typing import List

from . import ast
from ..values.types import BasicType, FieldType, NodeType, TypeRef

INDENT = "    "


def format_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise ValueError(f"literal {value!r} has no source form")


def format_cardinality(item: FieldType) -> str:
    if (item.lo, item.hi) == (1, 1):
        return ""
    if (item.lo, item.hi) == (0, 1):
        return "?"
    if (item.lo, item.hi) == (0, None):
        return "*"
    return f"[{item.lo},{'*' if item.hi is None else item.hi}]"


def format_type(type_expr) -> str:
    if isinstance(type_expr, BasicType):
        return type_expr.kind.value
    if isinstance(type_expr, TypeRef):
        return type_expr.name
    if isinstance(type_expr, NodeType):
        if not type_expr.fields:
            return f"{type_expr.root.value} {{ }}"
        fields = " ".join(
            f"{item.name}{format_cardinality(item)}: {format_type(item.type)}"
            for item in type_expr.fields
        )
        return f"{type_expr.root.value} {{ {fields} }}"
    raise TypeError(f"not a type expression: {type_expr!r}")


# ---------------------------------------------------------------------------
# Expressions

def _operand(expr) -> str:
    text = format_expr(expr)
    if isinstance(expr, (ast.BinaryOp, ast.UnaryOp)):
        return f"({text})"
    return text


def format_path(path: ast.PathExpr) -> str:
    parts = []
    for segment in path.segments:
        if segment.index is None:
            parts.append(segment.name)
        else:
            parts.append(f"{segment.name}[{format_expr(segment.index)}]")
    return ".".join(parts)


def format_expr(expr) -> str:
    if isinstance(expr, ast.Literal):
        return format_literal(expr.value)
    if isinstance(expr, ast.PathExpr):
        return format_path(expr)
    if isinstance(expr, ast.NewToken):
        return "new"
    if isinstance(expr, ast.SizeOf):
        return f"#{format_path(expr.path)}"
    if isinstance(expr, ast.UnaryOp):
        if expr.op == "-":
            return f"-({format_expr(expr.operand)})"
        return f"!{_operand(expr.operand)}"
    if isinstance(expr, ast.BinaryOp):
        return f"{_operand(expr.left)} {expr.op} {_operand(expr.right)}"
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Behaviors

class Printer:
    """Line-oriented printer; `lines` accumulates the output"""

    def __init__(self):
        self.lines: List[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(f"{INDENT * depth}{text}")

    def append(self, text: str) -> None:
        self.lines[-1] += text

    def block(self, body: ast.Behavior, depth: int) -> None:
        """Print ` {`, the body one level deeper, then `}` at `depth`"""
        self.append(" {")
        self.behavior(body, depth + 1)
        self.emit(depth, "}")

    def braced(self, body: ast.Behavior, depth: int) -> None:
        self.emit(depth, "{")
        self.behavior(body, depth + 1)
        self.emit(depth, "}")

    def behavior(self, node: ast.Behavior, depth: int) -> None:
        if isinstance(node, ast.Sequence):
            if isinstance(node.first, (ast.Sequence, ast.Parallel)):
                self.braced(node.first, depth)
            else:
                self.behavior(node.first, depth)
            self.append(";")
            if isinstance(node.second, ast.Parallel):
                self.braced(node.second, depth)
            else:
                self.behavior(node.second, depth)
        elif isinstance(node, ast.Parallel):
            self.braced(node.left, depth)
            self.emit(depth, "|")
            self.braced(node.right, depth)
        else:
            self.statement(node, depth)

    def statement(self, node: ast.Behavior, depth: int) -> None:
        if isinstance(node, ast.Nil):
            self.emit(depth, "nil")
        elif isinstance(node, ast.Assign):
            self.emit(depth, f"{format_path(node.path)} = {format_expr(node.expr)}")
        elif isinstance(node, ast.Undef):
            self.emit(depth, f"undef({format_path(node.path)})")
        elif isinstance(node, ast.CallProcedure):
            self.emit(depth, node.name)
        elif isinstance(node, ast.If):
            self.emit(depth, f"if ({format_expr(node.condition)})")
            self.block(node.then, depth)
            otherwise = node.otherwise
            while otherwise is not None:
                if isinstance(otherwise, ast.If):
                    self.append(f" else if ({format_expr(otherwise.condition)})")
                    self.block(otherwise.then, depth)
                    otherwise = otherwise.otherwise
                else:
                    self.append(" else")
                    self.block(otherwise, depth)
                    otherwise = None
        elif isinstance(node, ast.While):
            self.emit(depth, f"while ({format_expr(node.condition)})")
            self.block(node.body, depth)
        elif isinstance(node, ast.InputChoice):
            if len(node.branches) == 1:
                self.input(node.branches[0], depth, bracketed=False)
            else:
                for branch in node.branches:
                    self.input(branch, depth, bracketed=True)
        elif isinstance(node, ast.ProvideUntil):
            self.emit(depth, "provide")
            for branch in node.provide:
                self.input(branch, depth + 1, bracketed=True)
            self.emit(depth, "until")
            for branch in node.until:
                self.input(branch, depth + 1, bracketed=True)
        elif isinstance(node, ast.Notify):
            request = format_expr(node.request) if node.request is not None else ""
            self.emit(depth, f"{node.operation}@{node.port}({request})")
        elif isinstance(node, ast.SolicitResponse):
            request = format_expr(node.request) if node.request is not None else ""
            self.emit(depth, f"{node.operation}@{node.port}({request})({format_path(node.response)})")
        elif isinstance(node, ast.Rebind):
            self.emit(depth, f"rebind {node.port} ({format_expr(node.location)}) ({format_expr(node.protocol)})")
        elif isinstance(node, ast.Sleep):
            self.emit(depth, f"sleep({format_expr(node.millis)})")
        elif isinstance(node, (ast.Sequence, ast.Parallel)):
            self.braced(node, depth)
        else:
            raise TypeError(f"not a behavior: {node!r}")

    def input(self, branch: ast.InputBranch, depth: int, bracketed: bool) -> None:
        request = format_path(branch.request) if branch.request is not None else ""
        head = f"{branch.operation}({request})"
        if isinstance(branch, ast.RequestResponseBranch):
            response = format_expr(branch.response) if branch.response is not None else ""
            head += f"({response})"
        self.emit(depth, f"[{head}]" if bracketed else head)
        if not isinstance(branch.body, ast.Nil):
            self.block(branch.body, depth)

    # -- declarations -------------------------------------------------------

    def interface_expr(self, expr, parent: str = "") -> str:
        if isinstance(expr, ast.InterfaceRef):
            return expr.name
        if isinstance(expr, ast.InterfaceUnion):
            text = f"{self.interface_expr(expr.left, '|')} | {self.interface_expr(expr.right, '|R')}"
            return f"({text})" if parent in ("&", "&R", "|R") else text
        if isinstance(expr, ast.InterfaceIntersection):
            text = f"{self.interface_expr(expr.left, '&')} & {self.interface_expr(expr.right, '&R')}"
            return f"({text})" if parent == "&R" else text
        raise TypeError(f"interface literals cannot be nested: {expr!r}")

    def interface(self, decl: ast.InterfaceDecl) -> None:
        if not isinstance(decl.expr, ast.InterfaceLiteral):
            self.emit(0, f"interface {decl.name} = {self.interface_expr(decl.expr)}")
            return
        self.emit(0, f"interface {decl.name} {{")
        groups: List[List[ast.OperationSig]] = []
        for sig in decl.expr.operations:
            if groups and groups[-1][0].kind == sig.kind:
                groups[-1].append(sig)
            else:
                groups.append([sig])
        for group in groups:
            label = "OneWay" if group[0].kind == ast.OperationKind.ONE_WAY else "RequestResponse"
            sigs = []
            for sig in group:
                text = f"{sig.name}({format_type(sig.request)})"
                if sig.kind == ast.OperationKind.REQUEST_RESPONSE:
                    text += f"({format_type(sig.response)})"
                sigs.append(text)
            self.emit(1, f"{label}: {', '.join(sigs)}")
        self.emit(0, "}")

    def port(self, port: ast.PortDecl) -> None:
        keyword = "inputPort" if port.direction == ast.PortDirection.INPUT else "outputPort"
        self.emit(0, f"{keyword} {port.name} {{")
        if port.location is not None:
            self.emit(1, f"Location: {format_literal(port.location)}")
        protocol = port.protocol.name
        if port.protocol.params:
            params = " ".join(f"{key} = {format_literal(lit.value)}" for key, lit in port.protocol.params)
            protocol += f" {{ {params} }}"
        self.emit(1, f"Protocol: {protocol}")
        if port.interfaces:
            self.emit(1, f"Interfaces: {', '.join(port.interfaces)}")
        self.emit(0, "}")

    def program(self, program: ast.Program) -> str:
        for typedef in program.types:
            self.emit(0, f"type {typedef.name}: {format_type(typedef.type)}")
        for decl in program.interfaces:
            self.interface(decl)
        for port in program.input_ports + program.output_ports:
            self.port(port)
        if program.csets:
            self.emit(0, "cset {")
            for decl in program.csets:
                aliases = " ".join(f"{alias.operation}.{alias.path}" for alias in decl.aliases)
                self.emit(1, f"{decl.variable}: {aliases}")
            self.emit(0, "}")
        self.emit(0, f"execution {{ {program.execution.value} }}")
        for proc in program.procedures:
            self.emit(0, f"define {proc.name} {{")
            self.behavior(proc.body, 1)
            self.emit(0, "}")
        self.emit(0, "main {")
        self.behavior(program.main, 1)
        self.emit(0, "}")
        return "\n".join(self.lines) + "\n"


def pretty_print(program: ast.Program) -> str:
    """Render a Program in canonical source form"""
    return Printer().program(program)
