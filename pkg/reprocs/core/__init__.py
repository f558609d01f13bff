"""
Core package: exceptions, logging, constants and experiment configuration loading.

Version: 1.0
"""
