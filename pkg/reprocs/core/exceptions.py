"""
Common exceptions for validation, numerical failures and runtime errors.

Version: 1.0
"""

from typing import Any, Dict, Optional

# Process exit codes used by the CLI
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class ReProCSException(Exception):
    """Base exception class for library errors."""
    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_RUNTIME,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}


class ValidationException(ReProCSException):
    """Raised when input validation fails."""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, exit_code=EXIT_VALIDATION, details=details)


class DimensionMismatchException(ValidationException):
    """Raised when vector or matrix dimensions disagree."""
    def __init__(self, expected: int, actual: int, name: str = "vector"):
        super().__init__(
            message=f"Dimension mismatch for {name}: expected {expected}, got {actual}",
            details={"expected": expected, "actual": actual, "name": name}
        )


class ConfigurationException(ReProCSException):
    """Raised when an experiment configuration is malformed."""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, exit_code=EXIT_VALIDATION, details=details)


class IllConditionedException(ReProCSException):
    """Raised when a restricted least-squares system exceeds the conditioning cap."""
    def __init__(self, condition_number: float, support_size: int):
        super().__init__(
            message=f"Restricted operator is ill-conditioned (cond={condition_number:.3e}, |T|={support_size})",
            details={"condition_number": condition_number, "support_size": support_size}
        )


class SolverException(ReProCSException):
    """Raised when the sparse solver cannot produce any usable iterate."""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, exit_code=EXIT_RUNTIME, details=details)


class TrackLostException(ReProCSException):
    """Raised when a track's support estimate no longer overlaps its object."""
    def __init__(self, misses: int, half_width: int):
        super().__init__(
            message=f"Track lost: {misses} misses for an object of size {2 * half_width + 1}",
            details={"misses": misses, "half_width": half_width}
        )


class ProcessingException(ReProCSException):
    """Raised for runtime failures in experiments and I/O."""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, exit_code=EXIT_RUNTIME, details=details)


def handle_exception(exc: Exception) -> Dict[str, Any]:
    """
    Global exception handler for CLI commands.

    Args:
        exc: The exception to handle

    Returns:
        Dict containing the exit code and error details
    """
    if isinstance(exc, ReProCSException):
        return {
            "exit_code": exc.exit_code,
            "detail": exc.message,
            "error_details": exc.details
        }
    elif isinstance(exc, (ValueError, KeyError)):
        return {
            "exit_code": EXIT_VALIDATION,
            "detail": "Invalid input",
            "error_details": {"message": str(exc)}
        }
    else:
        return {
            "exit_code": EXIT_RUNTIME,
            "detail": "Internal processing error",
            "error_details": {"message": str(exc), "type": type(exc).__name__}
        }
