"""
microlang: a small microservice orchestration language

Services declare interfaces, input and output ports, correlation sets and
a workflow behavior. The runtime spawns one process per session on its
starting operation and routes later messages to it by correlation values,
over local, sodep-lite/TCP or HTTP+JSON transports.

Basic Usage:
    >>> from microlang import check_file, start_service, call_operation
    >>> checked = check_file("services/catalog.ml.svc")
    >>> checked.ok
    True

    >>> service = await start_service(checked, bindings={"Customers": "local://catalog"})
    >>> reply = await call_operation("local://catalog", "http", "getList")
    >>> await service.stop()
"""

from .__version__ import __version__
from .api import (
    load_program,
    check_file,
    start_service,
    call_operation,
    list_services,
    get_service,
    stop_all_services,
)

__all__ = [
    "__version__",
    "load_program",
    "check_file",
    "start_service",
    "call_operation",
    "list_services",
    "get_service",
    "stop_all_services",
]
