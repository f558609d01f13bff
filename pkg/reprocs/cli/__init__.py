"""
Command-line front end: presets and command handlers.

Version: 1.0
"""
