"""Protocol-neutral message exchanged between ports"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from ..values.tree import ValueNode
from ..utils.exceptions import RuntimeFault


class Protocol(str, Enum):
    HTTP = "http"
    SODEP_LITE = "sodep-lite"


SUPPORTED_PROTOCOLS = tuple(p.value for p in Protocol)

# protocol parameters accepted on any port: name -> description
PROTOCOL_PARAMS = {
    "timeout": "client-side call timeout in seconds",
    "delay": "fixed per-message delay in milliseconds (local links)",
}


class MessageKind(IntEnum):
    REQUEST = 0
    RESPONSE = 1
    FAULT = 2


@dataclass
class WireMessage:
    kind: MessageKind
    operation: str
    payload: ValueNode = field(default_factory=ValueNode)
    corr_id: int = 0

    @classmethod
    def request(cls, operation: str, payload: Optional[ValueNode] = None, corr_id: int = 0) -> "WireMessage":
        return cls(MessageKind.REQUEST, operation, payload if payload is not None else ValueNode(), corr_id)

    @classmethod
    def response(cls, operation: str, payload: Optional[ValueNode] = None, corr_id: int = 0) -> "WireMessage":
        return cls(MessageKind.RESPONSE, operation, payload if payload is not None else ValueNode(), corr_id)

    @classmethod
    def fault(cls, operation: str, name: str, path: Optional[str] = None, corr_id: int = 0) -> "WireMessage":
        """Fault reply: fault name at the payload root, optional `path` child"""
        payload = ValueNode(name)
        if path is not None:
            payload.add("path", ValueNode(path))
        return cls(MessageKind.FAULT, operation, payload, corr_id)

    @classmethod
    def from_fault(cls, operation: str, fault: RuntimeFault, corr_id: int = 0) -> "WireMessage":
        return cls.fault(operation, fault.kind, fault.path, corr_id)

    @property
    def is_fault(self) -> bool:
        return self.kind == MessageKind.FAULT

    @property
    def fault_name(self) -> Optional[str]:
        if not self.is_fault:
            return None
        return self.payload.root if isinstance(self.payload.root, str) else "IOFault"

    def to_fault(self) -> RuntimeFault:
        """RuntimeFault equivalent of a fault message"""
        path_node = self.payload.child("path")
        path = path_node.root if path_node is not None and isinstance(path_node.root, str) else None
        return RuntimeFault(self.fault_name or RuntimeFault.IO_FAULT, f"fault reply to {self.operation}", path)

    def copy(self) -> "WireMessage":
        return WireMessage(self.kind, self.operation, self.payload.copy(), self.corr_id)
