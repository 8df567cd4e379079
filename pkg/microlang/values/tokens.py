"""Fresh session identifiers (the value of the `new` keyword)"""

import random
import re
import secrets
from typing import Optional

TOKEN_RE = re.compile(r"^[0-9a-f]{32}$")


class TokenSource:
    """
    Source of 32-hex-character tokens

    Seeded sources are reproducible (used by `--seed`); unseeded sources draw
    from the operating system's CSPRNG.
    """

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed
        self._rng = random.Random(seed) if seed is not None else None

    def fresh(self) -> str:
        if self._rng is None:
            return secrets.token_hex(16)
        return f"{self._rng.getrandbits(128):032x}"

    def derive(self) -> random.Random:
        """Independent generator for a sub-component (e.g. a process scheduler)"""
        if self._rng is None:
            return random.Random(secrets.randbits(64))
        return random.Random(self._rng.getrandbits(64))


_default_source = TokenSource()


def fresh_token(source: Optional[TokenSource] = None) -> str:
    """Return a fresh 32-character lowercase hexadecimal token"""
    return (source or _default_source).fresh()
