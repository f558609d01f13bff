"""
Recursive PCA service.
Initializes the principal-components estimate by truncated SVD of training frames and
keeps it current with decay removal, incremental SVD over the buffered low-rank
estimates, and retention of new high-variance directions.

Version: 1.0
"""

# External imports with versions
import dataclasses  # built-in
from typing import Optional, Sequence, Union  # built-in

import numpy as np  # numpy v1.24+
import scipy.linalg  # scipy v1.10+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.core.constants import QR_DEGENERATE_TOL, SIGN_TOL
from reprocs.core.exceptions import DimensionMismatchException, ValidationException
from reprocs.models.subspace import SubspaceEstimate
from reprocs.utils.validators import validate_finite, validate_vector

# Configure structured logging
logger = structlog.get_logger(__name__)

# alpha = ALPHA_SIGMA_FRACTION * sigma_min^2 per frame when not configured
ALPHA_SIGMA_FRACTION = 0.5


def fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flips columns so that the first nonzero entry of each is nonnegative."""
    if basis.size == 0:
        return basis
    mask = np.abs(basis) > SIGN_TOL
    first = mask.argmax(axis=0)
    signs = np.sign(basis[first, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def _as_matrix(frames: Union[np.ndarray, Sequence[np.ndarray]]) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        matrix = frames if frames.ndim == 2 else frames.reshape(-1, 1)
    else:
        frames = list(frames)
        if not frames:
            raise ValidationException("Training set is empty", details={"frames": 0})
        matrix = np.column_stack(frames)
    return validate_finite(matrix, "training")


def energy_rank(singvals: np.ndarray, percent: float) -> int:
    """Size of the smallest leading set holding at least `percent` of sum(singvals**2)."""
    energy = singvals ** 2
    total = energy.sum()
    if total <= 0:
        return 0
    cumulative = np.cumsum(energy) / total
    return int(np.searchsorted(cumulative, percent / 100.0 - 1e-12) + 1)


def init_truncated_svd(
    training: Union[np.ndarray, Sequence[np.ndarray]],
    alpha0: float = 0.0,
    subtract_mean: bool = False,
    tau: int = 20,
    alpha: Optional[float] = None,
    energy: Optional[float] = None
) -> SubspaceEstimate:
    """
    Initial estimate from training frames (columns of an n x t0 matrix).

    Keeps the left singular vectors with singular value > alpha0, or the p%-energy set when
    `energy` is given. Singular values at round-off level (below max(n, t0) * eps * scale) are
    never retained, so exact-rank data with alpha0 = 0 yields its true rank. scale is s_max,
    or the Frobenius norm of the uncentered frames when the mean is subtracted.

    Args:
        training: n x t0 matrix or list of n-vectors
        alpha0: singular-value threshold
        subtract_mean: estimate and subtract the empirical column mean
        tau: update period
        alpha: variance threshold; defaults to 0.5 * sigma_min^2 / t0
        energy: optional p%-energy request (0, 100]

    Returns:
        SubspaceEstimate: initialized estimate with an empty buffer

    Raises:
        ValidationException: If training is empty, non-finite or alpha0 < 0
    """
    matrix = _as_matrix(training)
    n, count = matrix.shape
    if count == 0:
        raise ValidationException("Training set is empty", details={"frames": 0})
    if alpha0 < 0:
        raise ValidationException("alpha0 must be nonnegative", details={"alpha0": alpha0})

    mean = matrix.mean(axis=1) if subtract_mean else None
    centered = matrix - mean[:, None] if mean is not None else matrix

    left, singvals, _ = scipy.linalg.svd(centered, full_matrices=False, check_finite=False)
    # centering leaves round-off proportional to the uncentered data
    scale = float(singvals[0]) if singvals.size else 0.0
    if mean is not None:
        scale = max(scale, float(np.linalg.norm(matrix)))
    floor = max(n, count) * np.finfo(np.float64).eps * scale
    numeric = singvals > floor
    if energy is not None:
        k = min(energy_rank(singvals, energy), int(numeric.sum()))
    else:
        k = int(np.count_nonzero(numeric & (singvals > alpha0)))

    sigma_min_sq = float(singvals[k - 1] ** 2) if k > 0 else 0.0
    if alpha is None:
        alpha = ALPHA_SIGMA_FRACTION * sigma_min_sq / count

    logger.info(
        "subspace_initialized",
        n=n, frames=count, rank=k, sigma_min_sq=sigma_min_sq, alpha=alpha, mean=subtract_mean
    )
    return SubspaceEstimate(
        basis=fix_signs(left[:, :k].copy()),
        singvals=singvals[:k].copy(),
        tau=tau,
        alpha=float(alpha),
        alpha0=alpha0,
        sigma_min_sq=sigma_min_sq,
        mean=mean,
        buffer=[],
        train_count=count,
        frames_seen=count,
    )


def project_perp(est: SubspaceEstimate, v: np.ndarray) -> np.ndarray:
    """
    Applies (I - P P') to a vector or to the columns of an n x k matrix.

    Raises:
        DimensionMismatchException: If v does not have n rows
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != est.n:
        raise DimensionMismatchException(expected=est.n, actual=v.shape[0], name="projector input")
    if est.rank == 0:
        return v.copy()
    return v - est.basis @ (est.basis.T @ v)


def _buffer_width(est: SubspaceEstimate) -> int:
    return len(est.buffer) if est.buffer else est.tau


def remove_decayed(est: SubspaceEstimate) -> SubspaceEstimate:
    """
    Drops basis directions whose variance over the buffered frames, diag(P'DD'P)/tau,
    falls below alpha.
    """
    if est.rank == 0 or not est.buffer:
        return est
    coeffs = est.basis.T @ est.buffer_matrix()
    variances = (coeffs ** 2).sum(axis=1) / _buffer_width(est)
    keep = variances >= est.alpha
    removed = int(est.rank - keep.sum())
    if removed:
        logger.debug("decayed_directions_removed", removed=removed, rank=int(keep.sum()))
    return dataclasses.replace(est, basis=est.basis[:, keep], singvals=est.singvals[keep])


def incremental_update(est: SubspaceEstimate) -> SubspaceEstimate:
    """
    Rotates the basis with the buffered frames D.

    C = P'D and E = D - PC split D into parallel and orthogonal parts; a column-pivoted QR
    of E keeps the q directions with |R_ii| above the degenerate tolerance, giving E = JK.
    The SVD of [[diag(lambda), C], [0, K]] = P_r Lambda_r V_r' then yields the new basis
    [P J] P_r with singular values diag(Lambda_r). The buffer is left in place.
    """
    if not est.buffer:
        return est
    frames = est.buffer_matrix()
    basis, singvals = est.basis, est.singvals
    r = est.rank

    parallel = basis.T @ frames
    residual = frames - basis @ parallel
    # one reorthogonalization pass
    correction = basis.T @ residual
    parallel += correction
    residual -= basis @ correction

    tol = QR_DEGENERATE_TOL * max(1.0, float(np.linalg.norm(frames)))
    q_factor, r_factor, _ = scipy.linalg.qr(residual, mode="economic", pivoting=True, check_finite=False)
    q = int(np.count_nonzero(np.abs(np.diag(r_factor)) > tol))
    new_dirs = q_factor[:, :q]
    k_block = new_dirs.T @ residual

    if r + q == 0:
        return est

    width = frames.shape[1]
    block = np.zeros((r + q, r + width))
    block[:r, :r] = np.diag(singvals)
    block[:r, r:] = parallel
    block[r:, r:] = k_block
    rotation, new_singvals, _ = scipy.linalg.svd(block, full_matrices=False, check_finite=False)

    floor = max(block.shape) * np.finfo(np.float64).eps * (new_singvals[0] if new_singvals.size else 0.0)
    k = int(np.count_nonzero(new_singvals > floor))
    new_basis = np.hstack([basis, new_dirs]) @ rotation[:, :k]
    return dataclasses.replace(est, basis=fix_signs(new_basis), singvals=new_singvals[:k].copy())


def retain_new(est: SubspaceEstimate, r_before: int) -> SubspaceEstimate:
    """
    Keeps indices [0, r_before) and any later index with lambda_i^2 / tau >= alpha,
    then clears the buffer.
    """
    width = _buffer_width(est)
    index = np.arange(est.rank)
    keep = (index < r_before) | (est.singvals ** 2 / width >= est.alpha)
    return dataclasses.replace(
        est,
        basis=est.basis[:, keep],
        singvals=est.singvals[keep],
        buffer=[],
    )


def update_cycle(est: SubspaceEstimate) -> SubspaceEstimate:
    """Runs decay removal, incremental SVD and new-direction retention on the buffer."""
    rank_in = est.rank
    trimmed = remove_decayed(est)
    r_before = trimmed.rank
    updated = retain_new(incremental_update(trimmed), r_before)
    logger.info(
        "subspace_updated",
        frames=len(est.buffer),
        removed=rank_in - r_before,
        added=updated.rank - r_before,
        rank=updated.rank,
        seen=updated.frames_seen,
    )
    return updated


def push_frame(est: SubspaceEstimate, lhat: np.ndarray, force_update: bool = False) -> SubspaceEstimate:
    """
    Buffers a low-rank estimate (mean-subtracted when a mean is set) and runs the update
    cycle once tau frames are buffered, or immediately when `force_update` is set.

    Raises:
        DimensionMismatchException: If lhat has the wrong length
    """
    lhat = validate_vector(lhat, est.n, "lhat")
    buffered = dataclasses.replace(
        est,
        buffer=[*est.buffer, est.centered(lhat)],
        frames_seen=est.frames_seen + 1,
    )
    if len(buffered.buffer) >= est.tau or force_update:
        return update_cycle(buffered)
    return buffered
