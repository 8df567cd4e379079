"""AST for microlang programs

Every node carries a SourceSpan that is excluded from equality, so two
programs compare equal iff they are structurally the same.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Tuple, Union

from ..values.paths import Path
from ..values.tree import BasicValue, basic_equal, kind_of
from ..values.types import TypeExpr


@dataclass(frozen=True)
class SourceSpan:
    """1-based source range; the end position is exclusive"""
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def to(self, other: "SourceSpan") -> "SourceSpan":
        """Span covering self through other"""
        return SourceSpan(self.file, self.start_line, self.start_col, other.end_line, other.end_col)

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


NO_SPAN = SourceSpan("<unknown>", 1, 1, 1, 1)


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True, eq=False)
class Literal:
    value: BasicValue
    span: SourceSpan = _span()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Literal):
            return NotImplemented
        return basic_equal(self.value, other.value)

    def __hash__(self) -> int:
        return hash((kind_of(self.value), self.value))


@dataclass(frozen=True)
class PathSegment:
    name: str
    index: Optional["Expr"] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PathExpr:
    segments: Tuple[PathSegment, ...]
    span: SourceSpan = _span()

    @property
    def is_cset(self) -> bool:
        return self.segments[0].name == "csets"

    def dotted(self) -> str:
        return ".".join(s.name for s in self.segments)


@dataclass(frozen=True)
class NewToken:
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SizeOf:
    path: PathExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # '-' or '!'
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: SourceSpan = _span()


Expr = Union[Literal, PathExpr, NewToken, SizeOf, UnaryOp, BinaryOp]


# ---------------------------------------------------------------------------
# Behaviors

@dataclass(frozen=True)
class Nil:
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assign:
    path: PathExpr
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Undef:
    path: PathExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Sequence:
    first: "Behavior"
    second: "Behavior"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Parallel:
    left: "Behavior"
    right: "Behavior"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class If:
    condition: Expr
    then: "Behavior"
    otherwise: Optional["Behavior"] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class While:
    condition: Expr
    body: "Behavior"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CallProcedure:
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class OneWayBranch:
    operation: str
    request: Optional[PathExpr]
    body: "Behavior"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class RequestResponseBranch:
    operation: str
    request: Optional[PathExpr]
    response: Optional[Expr]
    body: "Behavior"
    span: SourceSpan = _span()


InputBranch = Union[OneWayBranch, RequestResponseBranch]


@dataclass(frozen=True)
class InputChoice:
    branches: Tuple[InputBranch, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ProvideUntil:
    provide: Tuple[InputBranch, ...]
    until: Tuple[InputBranch, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SolicitResponse:
    port: str
    operation: str
    request: Optional[Expr]
    response: PathExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Notify:
    port: str
    operation: str
    request: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Rebind:
    port: str
    location: Expr
    protocol: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Sleep:
    millis: Expr
    span: SourceSpan = _span()


Behavior = Union[
    Nil, Assign, Undef, Sequence, Parallel, If, While, CallProcedure,
    InputChoice, ProvideUntil, SolicitResponse, Notify, Rebind, Sleep,
]


# ---------------------------------------------------------------------------
# Declarations

class OperationKind(str, Enum):
    ONE_WAY = "one-way"
    REQUEST_RESPONSE = "request-response"


class PortDirection(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class ExecutionMode(str, Enum):
    CONCURRENT = "concurrent"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class TypeDef:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class OperationSig:
    name: str
    kind: OperationKind
    request: TypeExpr
    response: Optional[TypeExpr] = None
    span: SourceSpan = _span()

    def __str__(self) -> str:
        if self.kind == OperationKind.ONE_WAY:
            return f"OneWay {self.name}({self.request})"
        return f"RequestResponse {self.name}({self.request})({self.response})"


@dataclass(frozen=True)
class InterfaceLiteral:
    operations: Tuple[OperationSig, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InterfaceRef:
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InterfaceUnion:
    left: "InterfaceExpr"
    right: "InterfaceExpr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InterfaceIntersection:
    left: "InterfaceExpr"
    right: "InterfaceExpr"
    span: SourceSpan = _span()


InterfaceExpr = Union[InterfaceLiteral, InterfaceRef, InterfaceUnion, InterfaceIntersection]


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    expr: InterfaceExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    params: Tuple[Tuple[str, Literal], ...] = ()
    span: SourceSpan = _span()

    def param(self, key: str, default: Any = None) -> Any:
        for name, literal in self.params:
            if name == key:
                return literal.value
        return default


@dataclass(frozen=True)
class PortDecl:
    name: str
    direction: PortDirection
    location: Optional[str]
    protocol: ProtocolSpec
    interfaces: Tuple[str, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CsetAlias:
    operation: str
    path: Path
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CsetDecl:
    variable: str
    aliases: Tuple[CsetAlias, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Procedure:
    name: str
    body: Behavior
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Program:
    types: Tuple[TypeDef, ...] = ()
    interfaces: Tuple[InterfaceDecl, ...] = ()
    input_ports: Tuple[PortDecl, ...] = ()
    output_ports: Tuple[PortDecl, ...] = ()
    csets: Tuple[CsetDecl, ...] = ()
    execution: ExecutionMode = ExecutionMode.CONCURRENT
    procedures: Tuple[Procedure, ...] = ()
    main: Behavior = Nil()
    file: str = field(default="<source>", compare=False)
    span: SourceSpan = _span()

    def procedure(self, name: str) -> Optional[Procedure]:
        for proc in self.procedures:
            if proc.name == name:
                return proc
        return None

    def type_env(self) -> dict:
        return {t.name: t.type for t in self.types}

    @property
    def ports(self) -> Tuple[PortDecl, ...]:
        return self.input_ports + self.output_ports
