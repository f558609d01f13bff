"""
Support estimation and debiasing of sparse solver outputs.

Version: 1.0
"""

# External imports with versions
from typing import Optional, Tuple  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.core.exceptions import IllConditionedException, ValidationException
from reprocs.models.recovery import RecoveryResult
from reprocs.models.subspace import SubspaceEstimate
from reprocs.services.sparse_solver_service import (
    SenseOperator,
    least_squares_on,
    residual_norm,
)
from reprocs.services.subspace_service import project_perp
from reprocs.utils.validators import validate_index_set, validate_vector

# Configure structured logging
logger = structlog.get_logger(__name__)


def adapt_epsilon(est: SubspaceEstimate, l_hat_prev: np.ndarray) -> float:
    """||(I - P P') l_hat_prev||_2 for an already mean-subtracted previous estimate."""
    return float(np.linalg.norm(project_perp(est, l_hat_prev)))


def resolve_gamma(
    gamma: Optional[float],
    gamma_fraction: Optional[float],
    min_magnitude: Optional[float]
) -> float:
    """
    Support threshold: gamma when given, else gamma_fraction * min_magnitude.

    Raises:
        ValidationException: If neither form can be evaluated
    """
    if gamma is not None:
        return float(gamma)
    if gamma_fraction is None or min_magnitude is None or min_magnitude <= 0:
        raise ValidationException(
            "gamma needs either a value or a fraction of a positive foreground magnitude",
            details={"gamma_fraction": gamma_fraction, "min_magnitude": min_magnitude}
        )
    return float(gamma_fraction * min_magnitude)


def lowrank_estimate(
    measurement: np.ndarray,
    s_hat: np.ndarray,
    psi: Optional[np.ndarray] = None
) -> np.ndarray:
    """L_hat = M - S_hat, or M - Psi S_hat for a dictionary Psi."""
    if psi is None:
        return measurement - s_hat
    return measurement - psi @ s_hat


def _ranked(s_raw: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    order = np.argsort(-np.abs(s_raw[candidates]), kind="stable")
    return candidates[order]


def _fit_largest(
    op: SenseOperator,
    y: np.ndarray,
    base: np.ndarray,
    ranked: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Least squares on base plus the longest prefix of `ranked` that stays well conditioned.
    Conditioning only worsens as columns are added, so the prefix length is bisected.
    """
    full = np.union1d(base, ranked).astype(np.int64)
    try:
        return full, least_squares_on(op, y, full)
    except IllConditionedException as e:
        failure = e

    lo, hi = 0, len(ranked)
    best: Optional[Tuple[np.ndarray, np.ndarray]] = None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        support = np.union1d(base, ranked[:mid]).astype(np.int64)
        try:
            best = (support, least_squares_on(op, y, support))
            lo = mid
        except IllConditionedException:
            hi = mid
    if best is None:
        if base.size == 0 and ranked.size > 0:
            raise failure
        best = (base, least_squares_on(op, y, base))
    logger.debug(
        "support_truncated",
        requested=int(full.size),
        kept=int(best[0].size),
        condition_number=failure.details.get("condition_number")
    )
    return best


def threshold_ls(
    op: SenseOperator,
    y: np.ndarray,
    s_raw: np.ndarray,
    gamma: float,
    measurement: Optional[np.ndarray] = None,
    epsilon: float = 0.0
) -> RecoveryResult:
    """
    Thresholds |s_raw| >= gamma and debiases by least squares on the detected support.

    When the restricted system is ill conditioned the support is cut to the largest
    well-conditioned set of highest-magnitude entries.

    Args:
        op: Sensing operator
        y: Projected measurements
        s_raw: Solver output
        gamma: Support threshold (> 0)
        measurement: M_t; when given, l_hat = M_t - S_hat (Psi S_hat with a dictionary)
        epsilon: Constraint radius used by the solver (reported only)

    Returns:
        RecoveryResult: support, debiased estimate and residual

    Raises:
        ValidationException: If gamma <= 0
        IllConditionedException: If even a single-entry support is ill conditioned
    """
    if gamma <= 0:
        raise ValidationException("gamma must be positive", details={"gamma": gamma})
    y = validate_vector(y, op.m, "y")
    s_raw = validate_vector(s_raw, op.n, "s_raw")

    detected = _ranked(s_raw, np.flatnonzero(np.abs(s_raw) >= gamma))
    support, s_hat = _fit_largest(op, y, np.zeros(0, dtype=np.int64), detected)
    return _result(op, y, s_raw, support, s_hat, measurement, epsilon)


def add_ls_del(
    op: SenseOperator,
    y: np.ndarray,
    s_raw: np.ndarray,
    known_support,
    alpha_add: float,
    alpha_del: float,
    measurement: Optional[np.ndarray] = None,
    epsilon: float = 0.0
) -> RecoveryResult:
    """
    Add-LS-Del support refinement.

    T_add = T plus entries outside T with |s_raw| > alpha_add (largest first, capped at the
    conditioning limit); least squares on T_add; entries with |LS value| < alpha_del are
    deleted; a final least squares on the remaining support gives S_hat.

    Args:
        op: Sensing operator
        y: Projected measurements
        s_raw: Modified-CS solver output
        known_support: Predicted support T
        alpha_add: Addition threshold
        alpha_del: Deletion threshold (alpha_add <= alpha_del)
        measurement: M_t for l_hat
        epsilon: Constraint radius used by the solver (reported only)

    Returns:
        RecoveryResult: with support_add set to T_add

    Raises:
        ValidationException: If the thresholds are not 0 < alpha_add <= alpha_del
        IllConditionedException: If least squares on T itself is ill conditioned
    """
    if not 0 < alpha_add <= alpha_del:
        raise ValidationException(
            "Thresholds must satisfy 0 < alpha_add <= alpha_del",
            details={"alpha_add": alpha_add, "alpha_del": alpha_del}
        )
    y = validate_vector(y, op.m, "y")
    s_raw = validate_vector(s_raw, op.n, "s_raw")
    known = validate_index_set(known_support, op.n, "known_support")

    outside = np.ones(op.n, dtype=bool)
    outside[known] = False
    candidates = _ranked(s_raw, np.flatnonzero(outside & (np.abs(s_raw) > alpha_add)))
    support_add, s_add = _fit_largest(op, y, known, candidates)

    support = support_add[np.abs(s_add[support_add]) >= alpha_del]
    s_hat = least_squares_on(op, y, support)
    result = _result(op, y, s_raw, support, s_hat, measurement, epsilon)
    result.support_add = support_add
    return result


def _result(
    op: SenseOperator,
    y: np.ndarray,
    s_raw: np.ndarray,
    support: np.ndarray,
    s_hat: np.ndarray,
    measurement: Optional[np.ndarray],
    epsilon: float
) -> RecoveryResult:
    if measurement is not None:
        l_hat = lowrank_estimate(measurement, s_hat, op.psi)
    else:
        l_hat = np.zeros(op.m)
    return RecoveryResult(
        s_raw=s_raw,
        support=np.asarray(support, dtype=np.int64),
        s_hat=s_hat,
        l_hat=l_hat,
        epsilon_used=float(epsilon),
        residual_norm=residual_norm(op, y, s_hat),
    )
