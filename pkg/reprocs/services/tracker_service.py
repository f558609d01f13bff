"""
Kalman support tracking service.
Constant-velocity Kalman filtering of object position, support prediction from the
predicted position, observed-location extraction from an updated support estimate,
the observation-error bound diagnostic and intensity-based support assignment.

Version: 1.0
"""

# External imports with versions
import dataclasses  # built-in
import math  # built-in
from typing import Iterable, List, Optional, Sequence, Tuple  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+
from filterpy.kalman import predict as kf_predict, update as kf_update  # filterpy v1.4.5

# Internal imports
from reprocs.core.exceptions import ConfigurationException, TrackLostException, ValidationException
from reprocs.models.tracking import OBSERVATION, TRANSITION, ObjectTrack, TrackState
from reprocs.schemas.tracker import TrackerConfig

# Configure structured logging
logger = structlog.get_logger(__name__)

OBSERVE_MODES = ("centroid", "median")


def round_half_away(x: float) -> int:
    """Rounds half away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _symmetrize(sigma: np.ndarray) -> np.ndarray:
    return 0.5 * (sigma + sigma.T)


def predicted_support(state: TrackState) -> Tuple[np.ndarray, bool]:
    """
    [round(p) - w, round(p) + w] clipped to [0, extent).

    Returns:
        Tuple of the clipped index array and whether clipping occurred
    """
    center = round_half_away(state.position)
    lo, hi = center - state.w, center + state.w
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    clipped = lo < 0 or hi >= state.extent
    return idx[(idx >= 0) & (idx < state.extent)], clipped


def predict(state: TrackState) -> Tuple[TrackState, np.ndarray]:
    """
    g <- G g, Sigma <- G Sigma G' + diag(0, Q), and the predicted support.

    Returns:
        Tuple of the predicted state and its support interval
    """
    process = np.diag([0.0, state.Q])
    g, sigma = kf_predict(state.g, state.Sigma, TRANSITION, process)
    predicted = dataclasses.replace(state, g=np.asarray(g, dtype=np.float64), Sigma=_symmetrize(sigma))
    support, clipped = predicted_support(predicted)
    predicted.clipped = clipped
    if clipped:
        logger.debug("support_clipped", position=predicted.position, extent=state.extent)
    return predicted, support


def observe(support: Iterable[int], mode: str = "median") -> Optional[float]:
    """
    Observed location of a support: centroid (mean) or lower median of its indices.

    Returns:
        The location, or None for an empty support (no observation this frame)
    """
    if mode not in OBSERVE_MODES:
        raise ValidationException(f"Unknown observe mode '{mode}'", details={"mode": mode})
    idx = np.sort(np.asarray(list(support) if not isinstance(support, np.ndarray) else support, dtype=np.float64))
    if idx.size == 0:
        return None
    if mode == "centroid":
        return float(idx.mean())
    return float(idx[(idx.size - 1) // 2])


def update(state: TrackState, p_obs: float) -> TrackState:
    """
    Kalman update with a position observation.
    A zero innovation variance (Sigma_11 = 0 and R = 0) gives zero gain.
    """
    innovation_var = (OBSERVATION @ state.Sigma @ OBSERVATION.T)[0, 0] + state.R
    if innovation_var <= 0.0:
        return dataclasses.replace(state, gain=np.zeros(2))
    g, sigma, _, gain, _, _ = kf_update(
        state.g, state.Sigma, np.array([p_obs]), np.array([[state.R]]), OBSERVATION, return_all=True
    )
    return dataclasses.replace(
        state,
        g=np.asarray(g, dtype=np.float64).reshape(2),
        Sigma=_symmetrize(np.asarray(sigma, dtype=np.float64)),
        gain=np.asarray(gain, dtype=np.float64).reshape(2),
    )


def omega_bound(state: TrackState, misses: int, extras_indices: Iterable[int]) -> float:
    """
    Bound on the centroid observation error given the misses and extras of the updated
    support around the object position p = state.position:
    |misses| w / (2w + 1 - |misses|) + |extras| max_j |j - p| / (2w).

    Raises:
        TrackLostException: If misses >= 2w + 1
    """
    w = state.w
    if misses >= 2 * w + 1:
        raise TrackLostException(misses=misses, half_width=w)
    extras = np.asarray(list(extras_indices), dtype=np.float64)
    bound = misses * w / (2 * w + 1 - misses)
    if extras.size:
        if w == 0:
            return math.inf
        bound += extras.size * float(np.max(np.abs(extras - state.position))) / (2 * w)
    return float(bound)


def observation_variance_from_bound(bound: float) -> float:
    """R = B^2 / 3, the variance of a uniform error on [-B, B]."""
    return bound ** 2 / 3.0


def validate_intensity_ranges(ranges: Sequence[Optional[Tuple[float, float]]]) -> None:
    """
    Half-open ranges [lo, hi) must be disjoint; several tracks all need a range.

    Raises:
        ConfigurationException: On overlap or a missing range
    """
    if len(ranges) > 1 and any(r is None for r in ranges):
        raise ConfigurationException(
            "Every track needs an intensity_range when several objects are tracked",
            details={"tracks": len(ranges)}
        )
    bounded = sorted((r for r in ranges if r is not None), key=lambda r: r[0])
    for (lo_a, hi_a), (lo_b, hi_b) in zip(bounded, bounded[1:]):
        if lo_b < hi_a:
            raise ConfigurationException(
                f"Intensity ranges [{lo_a}, {hi_a}) and [{lo_b}, {hi_b}) overlap",
                details={"ranges": [list(r) for r in bounded]}
            )


def assign_supports(
    s_hat: np.ndarray,
    tracks: Sequence[ObjectTrack],
    support: Optional[np.ndarray] = None
) -> List[np.ndarray]:
    """
    Splits a support estimate among tracks by the intensity range containing s_hat_i.
    Indices outside every range are ignored; a single track without a range takes all.

    Args:
        s_hat: Sparse estimate
        tracks: Tracked objects
        support: Support estimate; defaults to the nonzero entries of s_hat

    Returns:
        One sorted index array per track
    """
    validate_intensity_ranges([t.intensity_range for t in tracks])
    idx = np.flatnonzero(s_hat) if support is None else np.asarray(support, dtype=np.int64)
    values = s_hat[idx]
    assigned = []
    for track in tracks:
        if track.intensity_range is None:
            assigned.append(np.sort(idx))
            continue
        lo, hi = track.intensity_range
        assigned.append(np.sort(idx[(values >= lo) & (values < hi)]))
    return assigned


# Two-dimensional objects: one constant-velocity track per axis

def create_track_state(
    position: float,
    velocity: float,
    cfg: TrackerConfig,
    half_width: int,
    extent: int,
    covariance: Tuple[float, float] = (0.0, 0.0)
) -> TrackState:
    return TrackState(
        g=np.array([position, velocity], dtype=np.float64),
        Sigma=np.diag(np.asarray(covariance, dtype=np.float64)),
        Q=cfg.Q,
        R=cfg.R,
        w=half_width,
        extent=extent,
    )


def create_object_track(
    cfg: TrackerConfig,
    frame_shape: Tuple[int, int],
    state: Tuple[float, float, float, float],
    prior_ready: bool = False
) -> ObjectTrack:
    """
    Builds an ObjectTrack from (row, col, v_row, v_col).

    With prior_ready the state is used as the prediction for the next frame with zero
    covariance, the truth initialization g_{t0+1|t0} = [p, v], Sigma = 0.
    """
    rows, cols = frame_shape
    row, col, v_row, v_col = state
    cov = (0.0, 0.0) if prior_ready else cfg.initial_cov
    return ObjectTrack(
        row=create_track_state(row, v_row, cfg, cfg.half_width[0], rows, cov),
        col=create_track_state(col, v_col, cfg, cfg.half_width[1], cols, cov),
        intensity_range=cfg.intensity_range,
        observe_mode=cfg.observe_mode,
        prior_ready=prior_ready,
    )


def create_tracks(
    configs: Sequence[TrackerConfig],
    frame_shape: Tuple[int, int],
    states: Sequence[Tuple[float, float, float, float]],
    prior_ready: bool = False
) -> List[ObjectTrack]:
    """
    Raises:
        ConfigurationException: If counts disagree or intensity ranges overlap
    """
    if len(configs) != len(states):
        raise ConfigurationException(
            f"{len(configs)} tracker configs for {len(states)} initial states",
            details={"configs": len(configs), "states": len(states)}
        )
    validate_intensity_ranges([c.intensity_range for c in configs])
    return [create_object_track(c, frame_shape, s, prior_ready) for c, s in zip(configs, states)]


def flatten_support(rows: np.ndarray, cols: np.ndarray, frame_shape: Tuple[int, int]) -> np.ndarray:
    """Row-major flat indices of the rectangle rows x cols."""
    return (rows[:, None] * frame_shape[1] + cols[None, :]).reshape(-1).astype(np.int64)


def predict_object(track: ObjectTrack) -> Tuple[ObjectTrack, np.ndarray]:
    """Predicts both axes; returns the track and its flat predicted support."""
    if track.prior_ready:
        row, col = track.row, track.col
        rows, row_clip = predicted_support(row)
        cols, col_clip = predicted_support(col)
        row = dataclasses.replace(row, clipped=row_clip)
        col = dataclasses.replace(col, clipped=col_clip)
    else:
        row, rows = predict(track.row)
        col, cols = predict(track.col)
    predicted = dataclasses.replace(track, row=row, col=col, prior_ready=False)
    return predicted, flatten_support(rows, cols, track.frame_shape)


def observe_object(support: np.ndarray, track: ObjectTrack) -> Optional[Tuple[float, float]]:
    """Per-axis observed location of a flat support, or None when empty."""
    if support.size == 0:
        return None
    rows, cols = np.divmod(np.asarray(support, dtype=np.int64), track.frame_shape[1])
    return observe(rows, track.observe_mode), observe(cols, track.observe_mode)


def update_object(track: ObjectTrack, observation: Optional[Tuple[float, float]]) -> ObjectTrack:
    """Kalman update of both axes; a missing observation coasts on the prediction."""
    if observation is None:
        logger.debug("track_coasting", coasted=track.coasted + 1)
        return dataclasses.replace(track, coasted=track.coasted + 1, last_observation=None)
    return dataclasses.replace(
        track,
        row=update(track.row, observation[0]),
        col=update(track.col, observation[1]),
        coasted=0,
        last_observation=observation,
    )


def object_support(track: ObjectTrack, position: Tuple[float, float]) -> np.ndarray:
    """Flat support of the object rectangle centered at a (row, col) position."""
    row = dataclasses.replace(track.row, g=np.array([position[0], 0.0]))
    col = dataclasses.replace(track.col, g=np.array([position[1], 0.0]))
    return flatten_support(predicted_support(row)[0], predicted_support(col)[0], track.frame_shape)
