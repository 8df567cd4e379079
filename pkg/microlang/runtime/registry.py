"""Global registry of running services"""

import asyncio
from threading import Lock
from typing import Dict, List, Optional

from ..utils.logger import logger


class ServiceRegistry:
    """
    Singleton registry for tracking running services

    `microlang run` hosts several services in one interpreter; the
    registry gives the CLI a single place to stop them all on interrupt.
    """

    _instance = None
    _lock = Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self._services: Dict[str, "Service"] = {}
        self._lock = Lock()
        self._initialized = True

        logger.debug("ServiceRegistry initialized")

    def register(self, name: str, service: "Service") -> None:
        """
        Register a running service

        Args:
            name: Service name
            service: Service instance
        """
        with self._lock:
            if name in self._services and self._services[name] is not service:
                logger.warning(f"Service '{name}' already registered, replacing")
            self._services[name] = service
            logger.debug(f"Registered service '{name}'")

    def unregister(self, name: str, service: Optional["Service"] = None) -> None:
        with self._lock:
            current = self._services.get(name)
            if current is not None and (service is None or current is service):
                del self._services[name]
                logger.debug(f"Unregistered service '{name}'")

    def get(self, name: str) -> Optional["Service"]:
        with self._lock:
            return self._services.get(name)

    def list_all(self) -> List[str]:
        with self._lock:
            return list(self._services.keys())

    def count(self) -> int:
        with self._lock:
            return len(self._services)

    async def stop_all(self) -> None:
        """Stop every registered service"""
        with self._lock:
            services = list(self._services.items())

        for name, service in services:
            try:
                logger.debug(f"Stopping service '{name}'")
                await service.stop()
            except Exception as e:
                logger.error(f"Error stopping service '{name}': {e}")
            finally:
                self.unregister(name, service)

        if services:
            # let cancelled process tasks settle
            await asyncio.sleep(0)
            logger.debug("All services stopped")


_registry = ServiceRegistry()


def get_service_registry() -> ServiceRegistry:
    """
    Get global service registry instance

    Returns:
        ServiceRegistry singleton
    """
    return _registry
