"""Location literals: `socket://host:port` and `local://name`"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..utils.exceptions import LocationError

_HOST_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


class Scheme(str, Enum):
    SOCKET = "socket"
    LOCAL = "local"


@dataclass(frozen=True)
class Location:
    """
    Transport endpoint

    Socket locations carry host and port (port 0 asks the listener for an
    ephemeral port); local locations carry a registry name.
    """

    scheme: Scheme
    host: Optional[str] = None
    port: Optional[int] = None
    name: Optional[str] = None

    @classmethod
    def socket(cls, host: str, port: int) -> "Location":
        return cls(Scheme.SOCKET, host=host, port=port)

    @classmethod
    def local(cls, name: str) -> "Location":
        return cls(Scheme.LOCAL, name=name)

    @classmethod
    def parse(cls, text: str) -> "Location":
        """
        Parse a location literal

        Raises:
            LocationError: On unknown scheme, missing host/port or bad name
        """
        scheme, sep, rest = text.partition("://")
        if not sep:
            raise LocationError(text, "missing '://'")

        if scheme == Scheme.LOCAL.value:
            if not _NAME_RE.match(rest):
                raise LocationError(text, "local name must be non-empty [A-Za-z0-9_.-]")
            return cls.local(rest)

        if scheme == Scheme.SOCKET.value:
            host, colon, port_text = rest.rpartition(":")
            if not colon or not host:
                raise LocationError(text, "expected socket://host:port")
            if not _HOST_RE.match(host):
                raise LocationError(text, f"invalid host {host!r}")
            if not port_text.isdigit():
                raise LocationError(text, f"invalid port {port_text!r}")
            port = int(port_text)
            if port > 65535:
                raise LocationError(text, f"port {port} out of range")
            return cls.socket(host, port)

        raise LocationError(text, f"unknown scheme {scheme!r} (supported: socket, local)")

    @property
    def is_local(self) -> bool:
        return self.scheme == Scheme.LOCAL

    def with_port(self, port: int) -> "Location":
        return Location(self.scheme, self.host, port, self.name)

    def __str__(self) -> str:
        if self.scheme == Scheme.LOCAL:
            return f"local://{self.name}"
        return f"socket://{self.host}:{self.port}"
