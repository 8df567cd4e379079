"""sodep-lite: length-prefixed big-endian binary framing of WireMessages

    frame := len:u32 body
    body  := kind:u8 corrId:u64 str(operation) value
    str   := len:u32 utf8-bytes
    value := tag:u8 payload childCount:u32 (str(name) elemCount:u32 value*)*

Tags: 0 void, 1 bool (u8), 2 int (i64), 3 double (binary64), 4 string (str).
"""

import struct
from typing import Iterator, Tuple

from .wire import MessageKind, WireMessage
from ..values.tree import MAX_DEPTH, ValueNode
from ..utils.exceptions import DecodeError, EncodeError

HEADER_SIZE = 4
MAX_FRAME_BYTES = 16 * 1024 * 1024

TAG_VOID = 0
TAG_BOOL = 1
TAG_INT = 2
TAG_DOUBLE = 3
TAG_STRING = 4

_U8 = struct.Struct(">B")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I64 = struct.Struct(">q")
_F64 = struct.Struct(">d")


def _put_str(out: bytearray, text: str) -> None:
    data = text.encode("utf-8")
    out += _U32.pack(len(data))
    out += data


def _put_value(out: bytearray, node: ValueNode, depth: int = 0) -> None:
    if depth > MAX_DEPTH:
        raise EncodeError(f"value nested deeper than {MAX_DEPTH} levels")
    root = node.root
    if root is None:
        out += _U8.pack(TAG_VOID)
    elif isinstance(root, bool):
        out += _U8.pack(TAG_BOOL)
        out += _U8.pack(1 if root else 0)
    elif isinstance(root, int):
        out += _U8.pack(TAG_INT)
        out += _I64.pack(root)
    elif isinstance(root, float):
        out += _U8.pack(TAG_DOUBLE)
        out += _F64.pack(root)
    else:
        out += _U8.pack(TAG_STRING)
        _put_str(out, root)

    out += _U32.pack(len(node.children))
    for name, vec in node.children.items():
        _put_str(out, name)
        out += _U32.pack(len(vec))
        for child in vec:
            _put_value(out, child, depth + 1)


def encode_body(msg: WireMessage) -> bytes:
    out = bytearray()
    out += _U8.pack(int(msg.kind))
    out += _U64.pack(msg.corr_id)
    _put_str(out, msg.operation)
    _put_value(out, msg.payload)
    return bytes(out)


def encode_sodep_lite(msg: WireMessage) -> bytes:
    """
    Encode one message as a self-delimiting frame

    Raises:
        EncodeError: The payload is nested deeper than MAX_DEPTH
    """
    body = encode_body(msg)
    return _U32.pack(len(body)) + body


class _Reader:
    """Cursor over a buffer; offsets in errors are absolute"""

    def __init__(self, data: bytes, offset: int = 0, end: int = None):
        self.data = data
        self.offset = offset
        self.end = len(data) if end is None else end

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > self.end:
            raise DecodeError(f"truncated {what}", offset=self.offset)
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct, what: str):
        return fmt.unpack(self.take(fmt.size, what))[0]

    def string(self, what: str) -> str:
        size = self.unpack(_U32, f"{what} length")
        start = self.offset
        raw = self.take(size, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodeError(f"invalid UTF-8 in {what}", offset=start + e.start)

    def value(self, depth: int = 0) -> ValueNode:
        tag_offset = self.offset
        if depth > MAX_DEPTH:
            raise DecodeError(f"value nested deeper than {MAX_DEPTH} levels", offset=tag_offset)
        tag = self.unpack(_U8, "value tag")
        if tag == TAG_VOID:
            root = None
        elif tag == TAG_BOOL:
            flag_offset = self.offset
            flag = self.unpack(_U8, "bool")
            if flag not in (0, 1):
                raise DecodeError(f"bad bool byte {flag}", offset=flag_offset)
            root = flag == 1
        elif tag == TAG_INT:
            root = self.unpack(_I64, "int")
        elif tag == TAG_DOUBLE:
            root = self.unpack(_F64, "double")
        elif tag == TAG_STRING:
            root = self.string("string")
        else:
            raise DecodeError(f"bad value tag {tag}", offset=tag_offset)

        node = ValueNode(root)
        for _ in range(self.unpack(_U32, "child count")):
            name = self.string("child name")
            count = self.unpack(_U32, "element count")
            for _ in range(count):
                node.add(name, self.value(depth + 1))
        return node


def decode_body(data: bytes, base: int = 0, end: int = None) -> WireMessage:
    """Decode a frame body occupying data[base:end]"""
    reader = _Reader(data, base, end)
    kind_offset = reader.offset
    kind = reader.unpack(_U8, "message kind")
    try:
        kind = MessageKind(kind)
    except ValueError:
        raise DecodeError(f"bad message kind {kind}", offset=kind_offset)
    corr_id = reader.unpack(_U64, "correlation id")
    operation = reader.string("operation name")
    payload = reader.value()
    if reader.offset != reader.end:
        raise DecodeError("frame body has trailing bytes", offset=reader.offset)
    return WireMessage(kind, operation, payload, corr_id)


def _frame_at(data: bytes, offset: int) -> Tuple[WireMessage, int]:
    if len(data) - offset < HEADER_SIZE:
        raise DecodeError("truncated frame header", offset=offset)
    length = _U32.unpack_from(data, offset)[0]
    body_start = offset + HEADER_SIZE
    available = len(data) - body_start
    if available < length:
        raise DecodeError(
            f"truncated frame: header announces {length} bytes, {available} available",
            offset=body_start,
        )
    return decode_body(data, body_start, body_start + length), body_start + length


def decode_sodep_lite(data: bytes) -> WireMessage:
    """
    Decode exactly one frame

    Raises:
        DecodeError: With the byte offset of truncation, a bad tag or kind,
            invalid UTF-8, nesting beyond MAX_DEPTH, or bytes
            left over after the frame
    """
    msg, end = _frame_at(data, 0)
    if end != len(data):
        raise DecodeError("trailing bytes after frame", offset=end)
    return msg


def decode_sodep_lite_stream(data: bytes) -> Iterator[WireMessage]:
    """Yield the successive frames of a concatenated buffer"""
    offset = 0
    while offset < len(data):
        msg, offset = _frame_at(data, offset)
        yield msg


def frame_length(header: bytes) -> int:
    """Body length announced by a 4-byte header"""
    if len(header) != HEADER_SIZE:
        raise DecodeError("truncated frame header", offset=0)
    length = _U32.unpack(header)[0]
    if length > MAX_FRAME_BYTES:
        raise DecodeError(f"frame of {length} bytes exceeds the {MAX_FRAME_BYTES} byte limit", offset=0)
    return length
