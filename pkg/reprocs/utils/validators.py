"""
Validators module for array, vector and index-set inputs.

Version: 1.0
"""

from typing import Iterable, Optional

import numpy as np

from reprocs.core.exceptions import DimensionMismatchException, ValidationException


def validate_finite(array: np.ndarray, name: str = "array") -> np.ndarray:
    """
    Validates that an array holds only finite real values.

    Args:
        array: Input array-like
        name: Name used in the error message

    Returns:
        np.ndarray: float64 view of the input

    Raises:
        ValidationException: If any entry is NaN or infinite
    """
    values = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationException(
            message=f"{name} contains non-finite entries",
            details={"name": name, "bad_entries": int(np.count_nonzero(~np.isfinite(values)))}
        )
    return values


def validate_vector(v: np.ndarray, n: int, name: str = "vector") -> np.ndarray:
    """
    Validates a length-n finite vector.

    Raises:
        DimensionMismatchException: If the vector length is not n
    """
    values = validate_finite(v, name)
    if values.ndim != 1:
        values = values.reshape(-1)
    if values.shape[0] != n:
        raise DimensionMismatchException(expected=n, actual=values.shape[0], name=name)
    return values


def validate_index_set(indices: Optional[Iterable[int]], n: int, name: str = "index set") -> np.ndarray:
    """
    Validates a duplicate-free index set within [0, n).

    Returns:
        np.ndarray: sorted int64 array of indices
    """
    if indices is None:
        return np.zeros(0, dtype=np.int64)
    idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        return idx
    if idx.min() < 0 or idx.max() >= n:
        raise ValidationException(
            message=f"{name} has indices outside [0, {n})",
            details={"name": name, "min": int(idx.min()), "max": int(idx.max()), "n": n}
        )
    unique = np.unique(idx)
    if unique.size != idx.size:
        raise ValidationException(
            message=f"{name} contains duplicate indices",
            details={"name": name}
        )
    return unique


def validate_orthonormal(basis: np.ndarray, tol: float = 1e-9, name: str = "basis") -> None:
    """
    Checks ||B'B - I||_F < tol.

    Raises:
        ValidationException: If the columns are not orthonormal
    """
    if basis.shape[1] == 0:
        return
    gram = basis.T @ basis
    deviation = float(np.linalg.norm(gram - np.eye(basis.shape[1])))
    if deviation >= tol:
        raise ValidationException(
            message=f"{name} columns are not orthonormal",
            details={"deviation": deviation, "tol": tol}
        )
