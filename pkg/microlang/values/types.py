"""Type expressions over value trees and structural conformance checking"""

from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Tuple, Union

from .tree import Kind, ValueNode
from ..utils.exceptions import CheckError, UnknownTypeError

UNBOUNDED = None

BASIC_KINDS = {kind.value: kind for kind in Kind}


@dataclass(frozen=True)
class BasicType:
    kind: Kind
    span: Any = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class TypeRef:
    name: str
    span: Any = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FieldType:
    """A named child: element type and cardinality range [lo, hi] (hi None = unbounded)"""
    name: str
    type: "TypeExpr"
    lo: int = 1
    hi: Optional[int] = 1
    span: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and self.hi < self.lo):
            raise ValueError(f"invalid cardinality [{self.lo},{self.hi}] for field {self.name}")

    def cardinality(self) -> str:
        return f"[{self.lo},{'*' if self.hi is None else self.hi}]"


@dataclass(frozen=True)
class NodeType:
    root: Kind
    fields: Tuple[FieldType, ...] = ()
    span: Any = field(default=None, compare=False, repr=False)

    def field_named(self, name: str) -> Optional[FieldType]:
        for item in self.fields:
            if item.name == name:
                return item
        return None

    def __str__(self) -> str:
        inner = " ".join(f"{f.name}{f.cardinality()}: {f.type}" for f in self.fields)
        return f"{self.root.value} {{ {inner} }}"


TypeExpr = Union[BasicType, TypeRef, NodeType]

TypeEnv = Mapping[str, TypeExpr]


@dataclass(frozen=True)
class Violation:
    path: str
    reason: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.reason} at {self.path or '(root)'}"


@dataclass
class ConformanceReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "OK" if self.ok else "; ".join(str(v) for v in self.violations)


def resolve_type(type_expr: TypeExpr, env: TypeEnv) -> Union[BasicType, NodeType]:
    """Follow named references until a structural type is reached"""
    seen = set()
    current = type_expr
    while isinstance(current, TypeRef):
        if current.name in seen:
            raise CheckError(f"type {current.name} refers to itself outside a field")
        seen.add(current.name)
        if current.name not in env:
            raise UnknownTypeError(current.name)
        current = env[current.name]
    return current


def _root_matches(expected: Kind, node: ValueNode) -> bool:
    return expected == Kind.ANY or node.kind == expected


def _join(prefix: str, label: str) -> str:
    return f"{prefix}.{label}" if prefix else label


def _conform(node: ValueNode, type_expr: TypeExpr, env: TypeEnv, path: str, out: List[Violation]):
    resolved = resolve_type(type_expr, env)
    expected_root = resolved.kind if isinstance(resolved, BasicType) else resolved.root

    if not _root_matches(expected_root, node):
        out.append(Violation(
            path, "wrong root kind", f"expected {expected_root.value}, found {node.kind.value}"
        ))

    fields = resolved.fields if isinstance(resolved, NodeType) else ()
    declared = set()
    for item in fields:
        declared.add(item.name)
        vec = node.vector(item.name)
        count = len(vec)
        if count < item.lo or (item.hi is not None and count > item.hi):
            out.append(Violation(
                _join(path, item.name),
                f"cardinality {count} not in {item.cardinality()}"
            ))
        for index, element in enumerate(vec):
            label = item.name if index == 0 else f"{item.name}[{index}]"
            _conform(element, item.type, env, _join(path, label), out)

    # closed world: undeclared children are violations
    for name in node.children:
        if name not in declared:
            out.append(Violation(_join(path, name), "unexpected child"))


def type_conforms(value: ValueNode, type_expr: TypeExpr, env: Optional[TypeEnv] = None) -> ConformanceReport:
    """
    Check `value` against `type_expr`

    Args:
        value: Value tree to check
        type_expr: Expected type
        env: Named type definitions (name -> TypeExpr)

    Returns:
        ConformanceReport listing every violation (empty when conforming)

    Raises:
        UnknownTypeError: If a referenced type name is not in `env`
    """
    report = ConformanceReport()
    _conform(value, type_expr, env or {}, "", report.violations)
    return report


def basic_type(name: str) -> Optional[BasicType]:
    """BasicType for a kind name, or None when `name` is not a basic kind"""
    kind = BASIC_KINDS.get(name)
    return BasicType(kind) if kind is not None else None
