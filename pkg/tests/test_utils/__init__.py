"""
Tests for validators, frame and checkpoint files, and brute-force diagnostics.

Version: 1.0
"""
