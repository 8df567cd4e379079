"""JSON mapping of value trees

A node becomes a JSON object: the root value sits under "$" (omitted when
void) and every child name maps to an array of encoded elements. Elements
that are plain leaves are written as bare scalars.
"""

import json
import math
from typing import Any, Mapping, Optional

from ..values.tree import MAX_DEPTH, Kind, ValueNode, in_int64
from ..values.types import BasicType, NodeType, TypeExpr, resolve_type
from ..utils.exceptions import CheckError, DecodeError, EncodeError

ROOT_KEY = "$"


def _element(node: ValueNode, depth: int) -> Any:
    if depth > MAX_DEPTH:
        raise EncodeError(f"value nested deeper than {MAX_DEPTH} levels")
    if not node.children and node.root is not None:
        return node.root
    return to_json_object(node, depth)


def to_json_object(node: ValueNode, depth: int = 0) -> dict:
    """Canonical JSON-compatible object for a node"""
    obj = {}
    if node.root is not None:
        obj[ROOT_KEY] = node.root
    for name, vec in node.children.items():
        obj[name] = [_element(child, depth + 1) for child in vec]
    return obj


def encode_json(value: ValueNode) -> str:
    """
    Encode a value tree as compact canonical JSON text

    Children appear in insertion order and are always arrays.

    Raises:
        EncodeError: The value is nested deeper than MAX_DEPTH
    """
    return json.dumps(to_json_object(value), separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _label(prefix: str, name: str, index: int) -> str:
    label = name if index == 0 else f"{name}[{index}]"
    return f"{prefix}.{label}" if prefix else label


class _Decoder:
    def __init__(self, types: Optional[Mapping[str, TypeExpr]]):
        self.types = types or {}

    def resolve(self, expected: Optional[TypeExpr]):
        if expected is None:
            return None
        try:
            return resolve_type(expected, self.types)
        except CheckError:
            return None

    def scalar(self, value: Any, expected, path: str):
        if value is None or isinstance(value, (bool, str)):
            return value
        if isinstance(value, int):
            if not in_int64(value):
                raise DecodeError("integer out of 64-bit range", path=path)
            root_kind = expected.kind if isinstance(expected, BasicType) else getattr(expected, "root", None)
            if root_kind == Kind.DOUBLE:
                return float(value)
            return value
        if isinstance(value, float):
            if not math.isfinite(value):
                raise DecodeError("non-finite number", path=path)
            return value
        raise DecodeError(f"unexpected JSON value of type {type(value).__name__}", path=path)

    def node(self, raw: Any, expected: Optional[TypeExpr], path: str, depth: int = 0) -> ValueNode:
        if depth > MAX_DEPTH:
            raise DecodeError(f"value nested deeper than {MAX_DEPTH} levels", path=path)
        resolved = self.resolve(expected)
        if isinstance(raw, list):
            raise DecodeError("arrays are only allowed as child vectors", path=path)
        if not isinstance(raw, dict):
            return ValueNode(self.scalar(raw, resolved, path))

        node = ValueNode()
        for key, item in raw.items():
            if key == ROOT_KEY:
                if isinstance(item, (dict, list)):
                    raise DecodeError("root value must be a scalar", path=path)
                node.root = self.scalar(item, resolved, path)
                continue
            field_type = None
            if isinstance(resolved, NodeType):
                declared = resolved.field_named(key)
                field_type = declared.type if declared is not None else None
            elements = item if isinstance(item, list) else [item]
            for index, element in enumerate(elements):
                node.add(key, self.node(element, field_type, _label(path, key, index), depth + 1))
        return node


def decode_json(text: str, expected: Optional[TypeExpr] = None, types: Optional[Mapping[str, TypeExpr]] = None) -> ValueNode:
    """
    Decode JSON text into a value tree

    Bare scalars are accepted both at top level and in place of singleton
    arrays. JSON integers become int, fractional numbers double, unless the
    expected type asks for a double at that position.

    Args:
        text: JSON document
        expected: Optional type steering numeric interpretation
        types: Named types used to resolve references in `expected`

    Raises:
        DecodeError: Invalid JSON, nested arrays, out-of-range integers, nesting
            beyond MAX_DEPTH
    """
    def reject_constant(name: str):
        raise DecodeError(f"non-finite number {name}", path="")

    try:
        raw = json.loads(text, parse_constant=reject_constant)
    except json.JSONDecodeError as e:
        raise DecodeError(f"invalid JSON: {e.msg} (line {e.lineno} column {e.colno})", path="")
    except RecursionError:
        raise DecodeError(f"value nested deeper than {MAX_DEPTH} levels", path="")
    return _Decoder(types).node(raw, expected, "")
