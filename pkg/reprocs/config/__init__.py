"""
Configuration package exposing process-wide settings.

Version: 1.0
"""

from reprocs.config.settings import Settings, get_settings

__all__ = ["Settings", "get_settings"]
