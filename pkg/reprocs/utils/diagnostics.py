"""
Brute-force diagnostics for tiny instances: the null-space property check and an
exhaustive support-enumeration reference for equality-constrained l1 minimization.

Version: 1.0
"""

# External imports with versions
import itertools  # built-in
from dataclasses import dataclass  # built-in
from typing import Iterable, Optional  # built-in

import numpy as np  # numpy v1.24+
import scipy.linalg  # scipy v1.10+
import structlog  # structlog v23.1+
from scipy.optimize import linprog  # scipy v1.10+

# Internal imports
from reprocs.core.exceptions import SolverException, ValidationException
from reprocs.services.sparse_solver_service import SenseOperator
from reprocs.utils.validators import validate_index_set

# Configure structured logging
logger = structlog.get_logger(__name__)

MAX_DIAGNOSTIC_SIZE = 12
NSP_MARGIN = 0.5


def dense_matrix(op: SenseOperator) -> np.ndarray:
    """Materializes an operator column by column."""
    return op.columns(np.arange(op.n, dtype=np.int64))


def _check_size(n: int) -> None:
    if n > MAX_DIAGNOSTIC_SIZE:
        raise ValidationException(
            f"Brute-force diagnostics are limited to n <= {MAX_DIAGNOSTIC_SIZE}",
            details={"n": n}
        )


@dataclass
class NullSpaceReport:
    """Worst null-space concentration over supports of the requested size."""
    holds: bool
    worst_ratio: float
    worst_support: tuple
    sparsity: int


def null_space_property(matrix: np.ndarray, sparsity: int) -> NullSpaceReport:
    """
    Checks the null-space property of order `sparsity`.

    For every support S with |S| = sparsity and sign pattern on S, solves the linear program
    max sign' v_S over v in null(A) with ||v||_1 <= 1. The property holds when every
    optimum stays below 1/2, i.e. ||v_S||_1 < ||v_{S^c}||_1 for all nonzero null vectors.

    Raises:
        ValidationException: If n exceeds the brute-force limit or sparsity is out of range
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[1]
    _check_size(n)
    if not 0 < sparsity <= n:
        raise ValidationException("sparsity must lie in [1, n]", details={"sparsity": sparsity, "n": n})
    null = scipy.linalg.null_space(matrix)
    k = null.shape[1]
    if k == 0:
        return NullSpaceReport(holds=True, worst_ratio=0.0, worst_support=(), sparsity=sparsity)

    # variables [z (k), t (n)]: v = N z, -t <= v <= t, sum t <= 1
    a_ub = np.block([
        [null, -np.eye(n)],
        [-null, -np.eye(n)],
        [np.zeros((1, k)), np.ones((1, n))],
    ])
    b_ub = np.concatenate([np.zeros(2 * n), [1.0]])
    bounds = [(None, None)] * k + [(0.0, None)] * n

    worst, worst_support = 0.0, ()
    for support in itertools.combinations(range(n), sparsity):
        # v -> -v is symmetric, so the first sign stays positive
        for tail in itertools.product((1.0, -1.0), repeat=sparsity - 1):
            signs = np.array((1.0, *tail))
            c = np.concatenate([-(signs @ null[list(support), :]), np.zeros(n)])
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status != 0:
                raise SolverException("Null-space LP failed", details={"support": support, "status": res.status})
            if -res.fun > worst:
                worst, worst_support = float(-res.fun), support
    logger.debug("null_space_checked", n=n, sparsity=sparsity, worst=worst)
    return NullSpaceReport(holds=worst < NSP_MARGIN, worst_ratio=worst, worst_support=worst_support, sparsity=sparsity)


@dataclass
class EnumerationResult:
    """Best feasible point found by support enumeration."""
    s: np.ndarray
    objective: float
    support: tuple


def enumerate_l1(
    matrix: np.ndarray,
    y: np.ndarray,
    known_support: Optional[Iterable[int]] = None,
    max_size: Optional[int] = None,
    tol: float = 1e-9
) -> EnumerationResult:
    """
    min ||s_{T^c}||_1 subject to A s = y, by enumerating every support whose columns are
    linearly independent and keeping the best exactly consistent least-squares solution.
    Some optimum of the linear program is such a basic solution.

    Args:
        matrix: Dense m x n sensing matrix
        y: Measurements
        known_support: T; entries on T carry no l1 weight
        max_size: Largest support size enumerated (default rank(A))
        tol: Relative residual accepted as consistent

    Raises:
        ValidationException: If n exceeds the brute-force limit
        SolverException: If no consistent support exists
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = matrix.shape[1]
    _check_size(n)
    known = validate_index_set(known_support, n, "known_support")
    weights = np.ones(n)
    weights[known] = 0.0
    rank = int(np.linalg.matrix_rank(matrix))
    limit = rank if max_size is None else min(max_size, rank)
    scale = max(1.0, float(np.linalg.norm(y)))

    best: Optional[EnumerationResult] = None
    for size in range(limit + 1):
        for support in itertools.combinations(range(n), size):
            s = np.zeros(n)
            if size:
                cols = matrix[:, list(support)]
                if np.linalg.matrix_rank(cols) < size:
                    continue
                s[list(support)] = np.linalg.lstsq(cols, y, rcond=None)[0]
            if np.linalg.norm(matrix @ s - y) > tol * scale:
                continue
            objective = float(np.sum(weights * np.abs(s)))
            if best is None or objective < best.objective - tol:
                best = EnumerationResult(s=s, objective=objective, support=support)
    if best is None:
        raise SolverException("No support of the enumerated sizes is consistent with y", details={"max_size": limit})
    return best
