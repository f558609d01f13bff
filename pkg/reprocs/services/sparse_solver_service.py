"""
Sparse recovery service.
Solves min ||w * s||_1 subject to ||y - A s||_2 <= epsilon, where w is zero on a known
partial support T (modified-CS) and one elsewhere, for explicit matrices and for the
implicit operators (I - P P') and (I - P P') Psi. Also provides least squares restricted
to an index set with a conditioning check.

Version: 1.0
"""

# External imports with versions
from abc import ABC, abstractmethod  # built-in
from functools import cached_property  # built-in
from typing import List, Optional, Tuple  # built-in

import numpy as np  # numpy v1.24+
import scipy.linalg  # scipy v1.10+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.core.constants import (
    EPSILON_ZERO_FLOOR,
    FEASIBILITY_ABS_SLACK,
    MAX_CONDITION_NUMBER,
)
from reprocs.core.exceptions import DimensionMismatchException, IllConditionedException
from reprocs.models.recovery import SolveResult
from reprocs.schemas.solver import SolveConfig
from reprocs.utils.validators import validate_finite, validate_index_set, validate_vector

# Configure structured logging
logger = structlog.get_logger(__name__)

# Residual balancing: adjust rho every BALANCE_EVERY iterations when one residual
# exceeds the other by BALANCE_RATIO
BALANCE_EVERY = 10
BALANCE_RATIO = 10.0
BALANCE_FACTOR = 2.0

# Relative cutoffs used to read a support off the sparse iterate when polishing
POLISH_CUTOFFS = (1e-2, 1e-4, 1e-6)


class SenseOperator(ABC):
    """
    Linear operator A mapping R^n (sparse domain) to R^m (measurements).
    """

    @property
    @abstractmethod
    def n(self) -> int:
        """Input (sparse-domain) dimension."""

    @property
    @abstractmethod
    def m(self) -> int:
        """Output (measurement) dimension."""

    @property
    @abstractmethod
    def measurement_count(self) -> int:
        """Number of independent measurements, the rank of A."""

    @property
    def psi(self) -> Optional[np.ndarray]:
        return None

    @abstractmethod
    def apply(self, v: np.ndarray) -> np.ndarray:
        """A v"""

    @abstractmethod
    def apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        """A' u"""

    @abstractmethod
    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solves (I + A'A) x = rhs."""

    @abstractmethod
    def columns(self, idx: np.ndarray) -> np.ndarray:
        """Dense m x |idx| restriction (A)_idx."""

    @abstractmethod
    def min_norm_solve(self, r: np.ndarray) -> np.ndarray:
        """Minimum-norm least-squares solution of A x = r."""


class MatrixOperator(SenseOperator):
    """Explicit m x n matrix."""

    def __init__(self, matrix: np.ndarray):
        self._matrix = validate_finite(matrix, "sensing matrix")
        if self._matrix.ndim != 2:
            raise DimensionMismatchException(expected=2, actual=self._matrix.ndim, name="sensing matrix rank")

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def m(self) -> int:
        return int(self._matrix.shape[0])

    @cached_property
    def measurement_count(self) -> int:
        return int(np.linalg.matrix_rank(self._matrix))

    @cached_property
    def _gram_factor(self) -> Tuple[np.ndarray, bool]:
        gram = np.eye(self.n) + self._matrix.T @ self._matrix
        return scipy.linalg.cho_factor(gram, check_finite=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._matrix @ v

    def apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        return self._matrix.T @ u

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._gram_factor, rhs, check_finite=False)

    def columns(self, idx: np.ndarray) -> np.ndarray:
        return self._matrix[:, idx]

    def min_norm_solve(self, r: np.ndarray) -> np.ndarray:
        return scipy.linalg.lstsq(self._matrix, r, check_finite=False)[0]


class ProjectorOperator(SenseOperator):
    """
    A = I - P P' for an n x r orthonormal P. The complement basis is never formed.
    With r = 0 this is the identity.
    """

    def __init__(self, basis: np.ndarray):
        self._basis = np.asarray(basis, dtype=np.float64)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def n(self) -> int:
        return int(self._basis.shape[0])

    @property
    def m(self) -> int:
        return self.n

    @property
    def measurement_count(self) -> int:
        return self.n - int(self._basis.shape[1])

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self._basis.shape[1] == 0:
            return np.array(v, dtype=np.float64, copy=True)
        return v - self._basis @ (self._basis.T @ v)

    def apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        return self.apply(u)

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        # (I + Pi)^-1 = I - Pi / 2 for an orthogonal projector Pi
        return rhs - 0.5 * self.apply(rhs)

    def columns(self, idx: np.ndarray) -> np.ndarray:
        cols = np.zeros((self.n, len(idx)))
        cols[idx, np.arange(len(idx))] = 1.0
        if self._basis.shape[1]:
            cols -= self._basis @ self._basis[idx, :].T
        return cols

    def min_norm_solve(self, r: np.ndarray) -> np.ndarray:
        return self.apply(r)


class ProjectedPsiOperator(SenseOperator):
    """A = (I - P P') Psi for an n x k dictionary Psi; sparse vectors live in R^k."""

    def __init__(self, basis: np.ndarray, psi: np.ndarray):
        self._projector = ProjectorOperator(basis)
        self._psi = validate_finite(psi, "psi")
        if self._psi.ndim != 2 or self._psi.shape[0] != self._projector.n:
            raise DimensionMismatchException(
                expected=self._projector.n,
                actual=int(self._psi.shape[0]),
                name="psi rows"
            )

    @property
    def psi(self) -> np.ndarray:
        return self._psi

    @property
    def n(self) -> int:
        return int(self._psi.shape[1])

    @property
    def m(self) -> int:
        return self._projector.n

    @cached_property
    def _dense(self) -> np.ndarray:
        return self._projector.apply(self._psi)

    @cached_property
    def measurement_count(self) -> int:
        return int(np.linalg.matrix_rank(self._dense))

    @cached_property
    def _gram_factor(self) -> Tuple[np.ndarray, bool]:
        gram = np.eye(self.n) + self._dense.T @ self._dense
        return scipy.linalg.cho_factor(gram, check_finite=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._projector.apply(self._psi @ v)

    def apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        return self._psi.T @ self._projector.apply(u)

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._gram_factor, rhs, check_finite=False)

    def columns(self, idx: np.ndarray) -> np.ndarray:
        return self._dense[:, idx]

    def min_norm_solve(self, r: np.ndarray) -> np.ndarray:
        return scipy.linalg.lstsq(self._dense, r, check_finite=False)[0]


def make_operator(basis: np.ndarray, psi: Optional[np.ndarray] = None) -> SenseOperator:
    """Operator for the projected measurements of the current basis."""
    if psi is None:
        return ProjectorOperator(basis)
    return ProjectedPsiOperator(basis, psi)


def soft_threshold(x: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    """Soft-threshold operator for the weighted l1 norm."""
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def project_ball(z: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {u : ||u - center||_2 <= radius}."""
    offset = z - center
    norm = float(np.linalg.norm(offset))
    if norm <= radius:
        return z
    return center + offset * (radius / norm)


def residual_norm(op: SenseOperator, y: np.ndarray, s: np.ndarray) -> float:
    return float(np.linalg.norm(y - op.apply(s)))


def least_squares_on(op: SenseOperator, y: np.ndarray, support) -> np.ndarray:
    """
    Least squares restricted to an index set.

    Args:
        op: Sensing operator
        y: Measurements (length m)
        support: Index set T

    Returns:
        np.ndarray: s with s_T = pinv(A_T) y and zeros elsewhere

    Raises:
        IllConditionedException: If |T| exceeds the measurement count or cond(A_T) > 1e8
    """
    y = validate_vector(y, op.m, "y")
    idx = validate_index_set(support, op.n, "support")
    s = np.zeros(op.n)
    if idx.size == 0:
        return s
    if idx.size > op.measurement_count:
        raise IllConditionedException(condition_number=float("inf"), support_size=int(idx.size))
    cols = op.columns(idx)
    coef, _, _, singvals = scipy.linalg.lstsq(cols, y, check_finite=False, lapack_driver="gelsd")
    cond = float(singvals[0] / singvals[-1]) if singvals[-1] > 0 else float("inf")
    if cond > MAX_CONDITION_NUMBER:
        raise IllConditionedException(condition_number=cond, support_size=int(idx.size))
    s[idx] = coef
    return s


def _objective(s: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(weights * np.abs(s)))


def _repair(
    op: SenseOperator,
    y: np.ndarray,
    s: np.ndarray,
    limit: float,
    target: float
) -> Tuple[np.ndarray, bool]:
    """
    Moves s the shortest distance along the least-squares correction until the residual
    reaches `target`. Returns the point and whether it satisfies `limit`.
    """
    r = y - op.apply(s)
    if np.linalg.norm(r) <= limit:
        return s, True
    delta = op.min_norm_solve(r)
    reach = op.apply(delta)
    floor = float(np.linalg.norm(r - reach))
    reach_norm = float(np.linalg.norm(reach))
    if floor > limit or reach_norm == 0.0:
        return s + delta, False
    remaining = np.sqrt(max(target ** 2 - floor ** 2, 0.0))
    step = float(np.clip(1.0 - remaining / reach_norm, 0.0, 1.0))
    candidate = s + step * delta
    return candidate, residual_norm(op, y, candidate) <= limit


def _polish_supports(v: np.ndarray, known: np.ndarray, n: int) -> List[np.ndarray]:
    outside = np.ones(n, dtype=bool)
    outside[known] = False
    peak = float(np.max(np.abs(v[outside]))) if outside.any() else 0.0
    supports: List[np.ndarray] = []
    for cutoff in POLISH_CUTOFFS:
        extra = np.flatnonzero(outside & (np.abs(v) > cutoff * peak)) if peak > 0 else np.zeros(0, dtype=np.int64)
        support = np.union1d(known, extra).astype(np.int64)
        if not any(np.array_equal(support, seen) for seen in supports):
            supports.append(support)
    return supports


def solve(op: SenseOperator, y: np.ndarray, cfg: Optional[SolveConfig] = None) -> SolveResult:
    """
    Weighted-l1 recovery under a Euclidean residual constraint, by ADMM.

    The splitting uses v = s for the l1 term and u = A s for the ball constraint
    ||u - y|| <= epsilon; the s-update solves (I + A'A) s = (v - d1) + A'(u - d2).
    rho follows residual balancing. After the iterations the solver tries least squares
    on supports read off the sparse iterate and keeps it when it is feasible and its
    objective is not worse; otherwise the iterate is pulled back onto the constraint.
    epsilon = 0 is solved with an epsilon floor of 1e-10 ||y||.

    Args:
        op: Sensing operator
        y: Measurements
        cfg: Solver configuration (epsilon, known support, iteration limits)

    Returns:
        SolveResult: solution with convergence and feasibility flags
    """
    cfg = cfg or SolveConfig()
    y = validate_vector(y, op.m, "y")
    known = validate_index_set(cfg.known_support, op.n, "known_support")
    weights = np.ones(op.n)
    weights[known] = 0.0

    y_norm = float(np.linalg.norm(y))
    eps = max(cfg.epsilon, EPSILON_ZERO_FLOOR * y_norm)
    slack = FEASIBILITY_ABS_SLACK * y_norm
    limit = cfg.epsilon * (1.0 + cfg.tol) + slack
    target = eps + 0.5 * slack

    if y_norm <= eps:
        return SolveResult(
            s=np.zeros(op.n), converged=True, iterations=0, objective=0.0,
            residual_norm=y_norm, epsilon=cfg.epsilon
        )

    rho = cfg.rho
    s = np.zeros(op.n)
    v = np.zeros(op.n)
    u = project_ball(np.zeros(op.m), y, eps)
    d1 = np.zeros(op.n)
    d2 = np.zeros(op.m)
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iters + 1):
        s_prev = s
        s = op.gram_solve((v - d1) + op.apply_adjoint(u - d2))
        As = op.apply(s)
        v_prev, u_prev = v, u
        v = soft_threshold(s + d1, weights / rho)
        u = project_ball(As + d2, y, eps)
        r1 = s - v
        r2 = As - u
        d1 = d1 + r1
        d2 = d2 + r2

        scale = max(float(np.linalg.norm(s)), y_norm)
        primal = float(np.sqrt(r1 @ r1 + r2 @ r2))
        change = float(np.linalg.norm(s - s_prev)) / scale
        if change < cfg.tol and primal < cfg.tol * scale:
            converged = True
            break

        if iterations % BALANCE_EVERY == 0:
            dual = rho * float(np.linalg.norm((v - v_prev) + op.apply_adjoint(u - u_prev)))
            if primal > BALANCE_RATIO * dual:
                rho *= BALANCE_FACTOR
                d1, d2 = d1 / BALANCE_FACTOR, d2 / BALANCE_FACTOR
            elif dual > BALANCE_RATIO * primal:
                rho /= BALANCE_FACTOR
                d1, d2 = d1 * BALANCE_FACTOR, d2 * BALANCE_FACTOR

    if not converged:
        logger.warning("solver_not_converged", iterations=iterations, n=op.n, epsilon=cfg.epsilon)

    best: Optional[np.ndarray] = None
    best_obj = np.inf
    fallback = s
    for iterate in (s, v):
        candidate, feasible = _repair(op, y, iterate, limit, target)
        if feasible and _objective(candidate, weights) < best_obj:
            best, best_obj = candidate, _objective(candidate, weights)
        elif best is None:
            fallback = candidate

    polished = False
    if cfg.polish:
        for support in _polish_supports(v, known, op.n):
            try:
                candidate = least_squares_on(op, y, support)
            except IllConditionedException:
                continue
            if residual_norm(op, y, candidate) > limit:
                continue
            obj = _objective(candidate, weights)
            if best is None or obj <= best_obj + cfg.tol * (1.0 + best_obj):
                best, best_obj, polished = candidate, obj, True
                break

    if best is None:
        res = residual_norm(op, y, fallback)
        logger.warning("solver_residual_floor", residual=res, epsilon=cfg.epsilon)
        return SolveResult(
            s=fallback, converged=converged, iterations=iterations,
            objective=_objective(fallback, weights), residual_norm=res,
            epsilon=cfg.epsilon, infeasible=True
        )

    return SolveResult(
        s=best, converged=converged, iterations=iterations, objective=best_obj,
        residual_norm=residual_norm(op, y, best), epsilon=cfg.epsilon, polished=polished
    )
