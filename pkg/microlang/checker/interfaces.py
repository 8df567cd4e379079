"""Interface algebra: literal, reference, union and intersection"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Set, Union

from ..lang import ast
from ..utils.exceptions import CheckError, ConflictingSignature, UnknownInterface

InterfaceEnv = Mapping[str, Union[ast.InterfaceDecl, ast.InterfaceExpr]]


@dataclass
class ResolvedInterface:
    """Named operation map (op name -> signature), in declaration order"""
    name: str
    ops: Dict[str, ast.OperationSig] = field(default_factory=dict)

    def __contains__(self, op_name: str) -> bool:
        return op_name in self.ops

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[str]:
        return iter(self.ops)

    def get(self, op_name: str) -> Optional[ast.OperationSig]:
        return self.ops.get(op_name)

    def names(self) -> Set[str]:
        return set(self.ops)

    def union(self, other: "ResolvedInterface", name: Optional[str] = None) -> "ResolvedInterface":
        merged = dict(self.ops)
        for op_name, sig in other.ops.items():
            existing = merged.get(op_name)
            if existing is None:
                merged[op_name] = sig
            elif existing != sig:
                raise ConflictingSignature(op_name, existing, sig, existing.span, sig.span)
        return ResolvedInterface(name or f"({self.name} | {other.name})", merged)

    def intersection(self, other: "ResolvedInterface", name: Optional[str] = None) -> "ResolvedInterface":
        common = {}
        for op_name, sig in self.ops.items():
            theirs = other.ops.get(op_name)
            if theirs is None:
                continue
            if theirs != sig:
                raise ConflictingSignature(op_name, sig, theirs, sig.span, theirs.span)
            common[op_name] = sig
        return ResolvedInterface(name or f"({self.name} & {other.name})", common)


def _literal(expr: ast.InterfaceLiteral, name: str) -> ResolvedInterface:
    ops: Dict[str, ast.OperationSig] = {}
    for sig in expr.operations:
        if sig.name in ops:
            raise CheckError(f"operation {sig.name} declared twice in interface {name}")
        ops[sig.name] = sig
    return ResolvedInterface(name, ops)


def resolve_interface(
    expr: Union[ast.InterfaceExpr, str],
    env: InterfaceEnv,
    name: Optional[str] = None,
    _visiting: Optional[Set[str]] = None,
) -> ResolvedInterface:
    """
    Evaluate an interface expression to its operation map

    Union keeps every operation of both sides; intersection keeps the
    operations present on both. On either side an operation carrying two
    different signatures is a conflict; identical signatures merge.

    Args:
        expr: Interface expression, or the name of a declared interface
        env: Declared interfaces by name (declarations or bare expressions)
        name: Name given to the result

    Raises:
        UnknownInterface: A referenced name is not declared
        ConflictingSignature: Same operation with different signatures
        CheckError: Duplicate operation in a literal or a reference cycle
    """
    visiting = _visiting if _visiting is not None else set()

    if isinstance(expr, str):
        expr = ast.InterfaceRef(expr)

    if isinstance(expr, ast.InterfaceRef):
        if expr.name in visiting:
            raise CheckError(f"interface {expr.name} is defined in terms of itself")
        target = env.get(expr.name)
        if target is None:
            raise UnknownInterface(expr.name, expr.span)
        if isinstance(target, ast.InterfaceDecl):
            target = target.expr
        visiting.add(expr.name)
        try:
            return resolve_interface(target, env, name or expr.name, visiting)
        finally:
            visiting.discard(expr.name)

    if isinstance(expr, ast.InterfaceLiteral):
        return _literal(expr, name or "<literal>")

    if isinstance(expr, ast.InterfaceUnion):
        left = resolve_interface(expr.left, env, None, visiting)
        right = resolve_interface(expr.right, env, None, visiting)
        return left.union(right, name)

    if isinstance(expr, ast.InterfaceIntersection):
        left = resolve_interface(expr.left, env, None, visiting)
        right = resolve_interface(expr.right, env, None, visiting)
        return left.intersection(right, name)

    raise TypeError(f"not an interface expression: {expr!r}")
