"""
Command-line test suite.

Version: 1.0
"""
