"""Service modules"""
from .config_service import ConfigService
from .run_service import RunService

__all__ = ["ConfigService", "RunService"]
