"""
ReProCS - recursive projected compressive sensing for sparse + low-rank separation.

Version: 1.0
"""

__version__ = "1.0.0"
