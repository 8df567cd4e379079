"""Tree-structured values: a basic root plus ordered vectors of named children"""

from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple, Union

# void is represented by None
BasicValue = Union[None, bool, int, float, str]

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1

# deepest tree either wire codec will encode or decode
MAX_DEPTH = 256


class Kind(str, Enum):
    """Basic value kinds; ANY is only meaningful inside type expressions"""
    VOID = "void"
    BOOL = "bool"
    INT = "int"
    DOUBLE = "double"
    STRING = "string"
    ANY = "any"


def kind_of(value: BasicValue) -> Kind:
    """Kind of a basic value (bool is checked before int)"""
    if value is None:
        return Kind.VOID
    if isinstance(value, bool):
        return Kind.BOOL
    if isinstance(value, int):
        return Kind.INT
    if isinstance(value, float):
        return Kind.DOUBLE
    if isinstance(value, str):
        return Kind.STRING
    raise TypeError(f"not a basic value: {value!r}")


def basic_equal(a: BasicValue, b: BasicValue) -> bool:
    """Kind-aware equality: 1, 1.0 and True are three different values"""
    return kind_of(a) == kind_of(b) and a == b


def in_int64(value: int) -> bool:
    return INT64_MIN <= value <= INT64_MAX


def render_basic(value: BasicValue) -> str:
    """Textual rendering used by string concatenation and diagnostics"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


class ValueNode:
    """
    A node of a value tree

    `root` holds the basic value (None for void); `children` maps each child
    name to a non-empty vector of nodes, in insertion order.
    """

    __slots__ = ("root", "children")

    def __init__(
        self,
        root: BasicValue = None,
        children: Optional[Dict[str, List["ValueNode"]]] = None
    ):
        kind_of(root)
        self.root = root
        self.children: Dict[str, List[ValueNode]] = children if children is not None else {}

    @classmethod
    def leaf(cls, value: BasicValue) -> "ValueNode":
        """Node with a root value and no children"""
        return cls(value)

    @property
    def kind(self) -> Kind:
        return kind_of(self.root)

    def is_void(self) -> bool:
        """True for a void root with no children"""
        return self.root is None and not self.children

    def vector(self, name: str) -> List["ValueNode"]:
        """Child vector, empty if absent (the returned list is live)"""
        return self.children.get(name, [])

    def size(self, name: str) -> int:
        return len(self.children.get(name, ()))

    def child(self, name: str, index: int = 0) -> Optional["ValueNode"]:
        vec = self.children.get(name)
        if vec is None or index >= len(vec):
            return None
        return vec[index]

    def add(self, name: str, node: "ValueNode") -> "ValueNode":
        """Append a child node, returning self for chaining"""
        self.children.setdefault(name, []).append(node)
        return self

    def copy(self) -> "ValueNode":
        """Deep copy"""
        return ValueNode(
            self.root,
            {name: [node.copy() for node in vec] for name, vec in self.children.items()}
        )

    def walk(self, prefix: str = "") -> Iterator[Tuple[str, "ValueNode"]]:
        """Depth-first (path, node) pairs, root first"""
        yield prefix, self
        for name, vec in self.children.items():
            for index, node in enumerate(vec):
                label = f"{name}[{index}]"
                yield from node.walk(f"{prefix}.{label}" if prefix else label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValueNode):
            return NotImplemented
        if not basic_equal(self.root, other.root):
            return False
        # child order within a node is part of its identity
        if list(self.children) != list(other.children):
            return False
        for name, vec in self.children.items():
            other_vec = other.children[name]
            if len(vec) != len(other_vec):
                return False
            if any(a != b for a, b in zip(vec, other_vec)):
                return False
        return True

    def __ne__(self, other: object) -> bool:
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self) -> str:
        parts = []
        if self.root is not None:
            parts.append(f"root={self.root!r}")
        for name, vec in self.children.items():
            parts.append(f"{name}={vec!r}")
        return f"ValueNode({', '.join(parts)})"
