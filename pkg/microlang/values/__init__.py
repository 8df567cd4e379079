"""Value layer - tree data model, paths, types and fresh tokens"""

from .tree import BasicValue, Kind, ValueNode, kind_of, basic_equal, render_basic, in_int64, MAX_DEPTH
from .paths import Path, Segment, CSETS, path_get, path_set, path_unset
from .types import (
    BasicType,
    TypeRef,
    FieldType,
    NodeType,
    TypeExpr,
    Violation,
    ConformanceReport,
    type_conforms,
    resolve_type,
    basic_type,
)
from .tokens import TokenSource, fresh_token, TOKEN_RE

__all__ = [
    "BasicValue",
    "Kind",
    "ValueNode",
    "kind_of",
    "basic_equal",
    "render_basic",
    "in_int64",
    "MAX_DEPTH",
    "Path",
    "Segment",
    "CSETS",
    "path_get",
    "path_set",
    "path_unset",
    "BasicType",
    "TypeRef",
    "FieldType",
    "NodeType",
    "TypeExpr",
    "Violation",
    "ConformanceReport",
    "type_conforms",
    "resolve_type",
    "basic_type",
    "TokenSource",
    "fresh_token",
    "TOKEN_RE",
]
