"""Dotted paths into value trees and the read/write/remove operations over them"""

import re
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

from .tree import ValueNode

CSETS = "csets"

_SEGMENT_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\[(\d+)\])?$")


@dataclass(frozen=True)
class Segment:
    name: str
    index: int = 0

    def __str__(self) -> str:
        return self.name if self.index == 0 else f"{self.name}[{self.index}]"


@dataclass(frozen=True)
class Path:
    """
    Non-empty sequence of (child-name, index) segments

    A leading `csets` segment addresses the correlation scope of a process.
    """

    segments: Tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a path needs at least one segment")
        for segment in self.segments:
            if segment.index < 0:
                raise ValueError(f"negative index in path segment {segment.name}")

    @classmethod
    def of(cls, *parts: Union[str, Tuple[str, int], Segment]) -> "Path":
        """Build from names, (name, index) pairs or segments"""
        segments = []
        for part in parts:
            if isinstance(part, Segment):
                segments.append(part)
            elif isinstance(part, tuple):
                segments.append(Segment(part[0], part[1]))
            else:
                segments.append(Segment(part))
        return cls(tuple(segments))

    @classmethod
    def parse(cls, text: str) -> "Path":
        """Parse `a.b[2].c` (static indices only)"""
        segments = []
        for raw in text.split("."):
            match = _SEGMENT_RE.match(raw.strip())
            if not match:
                raise ValueError(f"invalid path {text!r}")
            name, index = match.groups()
            segments.append(Segment(name, int(index) if index else 0))
        return cls(tuple(segments))

    @property
    def is_cset(self) -> bool:
        return self.segments[0].name == CSETS

    def child(self, name: str, index: int = 0) -> "Path":
        return Path(self.segments + (Segment(name, index),))

    def concat(self, other: "Path") -> "Path":
        return Path(self.segments + other.segments)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __str__(self) -> str:
        return ".".join(str(s) for s in self.segments)


def path_get(state: ValueNode, path: Union[Path, Iterable[Segment]]) -> ValueNode:
    """
    Node at `path`, or a fresh void node when any segment is absent

    The read never mutates `state`; the returned node is live (not copied)
    when present.
    """
    node = state
    for segment in path:
        node = node.child(segment.name, segment.index)
        if node is None:
            return ValueNode()
    return node


def path_set(state: ValueNode, path: Path, value: ValueNode) -> ValueNode:
    """
    Replace the node at `path` with `value`, creating void intermediate
    nodes and padding vectors as needed; returns `state`
    """
    node = state
    last = len(path.segments) - 1
    for position, segment in enumerate(path.segments):
        vec = node.children.setdefault(segment.name, [])
        while len(vec) <= segment.index:
            vec.append(ValueNode())
        if position == last:
            vec[segment.index] = value
        else:
            node = vec[segment.index]
    return state


def path_unset(state: ValueNode, path: Path) -> ValueNode:
    """
    Remove the node at `path` from its vector; an emptied vector drops the
    child name. Absent paths are left untouched. Returns `state`.
    """
    node = state
    for segment in path.segments[:-1]:
        node = node.child(segment.name, segment.index)
        if node is None:
            return state
    tail = path.segments[-1]
    vec = node.children.get(tail.name)
    if vec is None or tail.index >= len(vec):
        return state
    del vec[tail.index]
    if not vec:
        del node.children[tail.name]
    return state
