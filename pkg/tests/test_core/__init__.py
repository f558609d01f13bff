"""
Tests for logging and process settings.

Version: 1.0
"""
