"""
Utility package: input validation, file formats and diagnostic oracles.

Version: 1.0
"""
