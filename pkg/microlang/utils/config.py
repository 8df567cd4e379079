"""Global configuration with environment variable overrides"""

import os


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return float(value)
    except ValueError:
        return default


class Config:
    """Global configuration with sensible defaults"""

    # Logging
    LOG_LEVEL: str = os.getenv("MICROLANG_LOG_LEVEL", "INFO")

    # Client side timeout for output ports and `microlang call`
    CALL_TIMEOUT: float = _env_float("MICROLANG_CALL_TIMEOUT", 30.0)  # seconds

    # HTTP client connection limits
    HTTP_MAX_CONNECTIONS: int = _env_int("MICROLANG_HTTP_MAX_CONNECTIONS", 100)
    HTTP_MAX_KEEPALIVE: int = 20

    # Consecutive process steps before yielding to the event loop
    SCHEDULER_YIELD_EVERY: int = _env_int("MICROLANG_SCHEDULER_YIELD_EVERY", 256)

    # Service source files
    SOURCE_SUFFIX: str = ".ml.svc"

    @classmethod
    def get_log_level(cls) -> str:
        """Get log level from env or default"""
        return os.getenv("MICROLANG_LOG_LEVEL", cls.LOG_LEVEL)

    @classmethod
    def get_call_timeout(cls) -> float:
        """Get call timeout from env or default"""
        return _env_float("MICROLANG_CALL_TIMEOUT", cls.CALL_TIMEOUT)
