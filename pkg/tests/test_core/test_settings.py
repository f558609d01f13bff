"""
Tests for process settings read from REPROCS_* variables.

Version: 1.0
"""

# External imports with versions
import pytest  # pytest v7.3+
from pydantic import ValidationError  # pydantic v1.10+

# Internal imports
from reprocs.config import settings as settings_module
from reprocs.config.settings import Settings


@pytest.mark.unit
class TestSettings:
    """Environment-driven settings and the worker count."""

    def test_only_prefixed_variables_are_read(self, monkeypatch):
        monkeypatch.setenv("ENVIRONMENT", "staging")
        monkeypatch.setenv("REPROCS_ENVIRONMENT", "production")
        monkeypatch.setenv("REPROCS_LOG_LEVEL", "debug")

        settings = Settings()

        assert settings.ENVIRONMENT == "production"
        assert settings.LOG_LEVEL == "DEBUG"

    def test_module_exports_the_settings_api(self):
        assert settings_module.__all__ == ["Settings", "get_settings", "PROJECT_NAME"]
        for name in ("ENVIRONMENT", "DEBUG", "CONFIG_VERSION", "BASE_DIR"):
            assert not hasattr(settings_module, name)

    def test_invalid_values(self, monkeypatch):
        monkeypatch.setenv("REPROCS_ENVIRONMENT", "moon")
        with pytest.raises(ValidationError):
            Settings()
        with pytest.raises(ValidationError):
            Settings(ENVIRONMENT="test", DEFAULT_JOBS=0)

    def test_resolve_jobs(self):
        assert Settings(ENVIRONMENT="test").resolve_jobs(3) == 3
        assert Settings(ENVIRONMENT="test").resolve_jobs(0) == 1
        assert Settings(ENVIRONMENT="test", DEFAULT_JOBS=2).resolve_jobs() == 2
