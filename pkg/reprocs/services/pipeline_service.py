"""
ReProCS pipeline service.
Runs projected compressive sensing frame by frame: project out the current
principal-components estimate, recover the sparse part (plain l1 with thresholding, or
support-predicted modified-CS with Add-LS-Del and Kalman support tracking), form the
low-rank estimate and feed it to recursive PCA. Also evaluates per-frame metrics
against ground truth.

Version: 1.0
"""

# External imports with versions
import dataclasses  # built-in
from dataclasses import dataclass, field  # built-in
from typing import Any, Dict, List, Optional, Sequence, Tuple  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.core.exceptions import (
    ConfigurationException,
    IllConditionedException,
    ProcessingException,
    SolverException,
    TrackLostException,
    ValidationException,
)
from reprocs.models.frames import FrameSequence
from reprocs.models.recovery import RecoveryResult
from reprocs.models.subspace import SubspaceEstimate
from reprocs.models.tracking import ObjectTrack
from reprocs.schemas.pipeline import DEFAULT_MODE, PipelineConfig
from reprocs.services import tracker_service
from reprocs.services.recovery_service import (
    adapt_epsilon,
    add_ls_del,
    threshold_ls,
)
from reprocs.services.sparse_solver_service import make_operator, solve
from reprocs.services.subspace_service import init_truncated_svd, project_perp, push_frame
from reprocs.utils.validators import validate_vector

# Configure structured logging
logger = structlog.get_logger(__name__)

# Per-frame numerical failures degrade to S_hat = 0 instead of aborting the run
RECOVERABLE_ERRORS = (IllConditionedException, SolverException, np.linalg.LinAlgError)


def subspace_alignment(est: SubspaceEstimate, u_sub: np.ndarray) -> float:
    """||P' U_sub||_F^2 / ||U_sub||_F^2, clipped to [0, 1]."""
    u_sub = np.asarray(u_sub, dtype=np.float64)
    if u_sub.ndim == 1:
        u_sub = u_sub[:, None]
    total = float(np.sum(u_sub ** 2))
    if total == 0.0 or est.rank == 0:
        return 0.0
    captured = float(np.sum((est.basis.T @ u_sub) ** 2))
    return float(min(max(captured / total, 0.0), 1.0))


def _epsilon(est: SubspaceEstimate, l_hat_prev: np.ndarray, measurement: np.ndarray, floor_fraction: float) -> float:
    eps = adapt_epsilon(est, est.centered(l_hat_prev))
    return max(eps, floor_fraction * float(np.linalg.norm(measurement)))


def _projected(est: SubspaceEstimate, measurement: np.ndarray) -> np.ndarray:
    """y = (I - P P^T)(M - mu)."""
    return project_perp(est, est.centered(measurement))


def _failed(measurement: np.ndarray, n_sparse: int, eps: float, error: Exception) -> RecoveryResult:
    logger.warning("frame_recovery_failed", error=str(error), error_type=type(error).__name__)
    return RecoveryResult(
        s_raw=np.zeros(n_sparse),
        support=np.zeros(0, dtype=np.int64),
        s_hat=np.zeros(n_sparse),
        l_hat=measurement.copy(),
        epsilon_used=eps,
        residual_norm=float("nan"),
        converged=False,
        failed=True,
    )


def _push(est: SubspaceEstimate, l_hat: np.ndarray, cfg: PipelineConfig) -> SubspaceEstimate:
    force = False
    if cfg.subspace.update_trigger == "epsilon":
        force = adapt_epsilon(est, est.centered(l_hat)) > cfg.subspace.epsilon_threshold
    return push_frame(est, l_hat, force_update=force)


def reprocs_step(
    est: SubspaceEstimate,
    measurement: np.ndarray,
    cfg: PipelineConfig,
    l_hat_prev: np.ndarray,
    gamma: float,
    psi: Optional[np.ndarray] = None
) -> Tuple[RecoveryResult, SubspaceEstimate]:
    """
    One ReProCS frame.

    Projects with the current basis, sets epsilon from the previous low-rank estimate,
    solves the l1 program, thresholds at gamma with least-squares debiasing, forms
    L_hat = M - S_hat and pushes it into recursive PCA.

    Args:
        est: Current subspace estimate
        measurement: M_t
        cfg: Pipeline configuration
        l_hat_prev: L_hat_{t-1} (not mean-subtracted)
        gamma: Support threshold
        psi: Optional dictionary, M_t = Psi S_t + L_t

    Returns:
        Tuple of the frame recovery and the updated estimate
    """
    measurement = validate_vector(measurement, est.n, "measurement")
    op = make_operator(est.basis, psi)
    eps = _epsilon(est, l_hat_prev, measurement, cfg.epsilon_floor_fraction)
    y = _projected(est, measurement)
    try:
        solution = solve(op, y, cfg.solver.copy(update={"epsilon": eps, "known_support": []}))
        result = threshold_ls(op, y, solution.s, gamma, measurement=measurement, epsilon=eps)
        result.converged = solution.converged
    except RECOVERABLE_ERRORS as e:
        result = _failed(measurement, op.n, eps, e)
    return result, _push(est, result.l_hat, cfg)


def reprocs_modcs_step(
    est: SubspaceEstimate,
    tracks: Sequence[ObjectTrack],
    measurement: np.ndarray,
    cfg: PipelineConfig,
    l_hat_prev: np.ndarray,
    psi: Optional[np.ndarray] = None
) -> Tuple[RecoveryResult, SubspaceEstimate, List[ObjectTrack]]:
    """
    One ReProCS(modCS) frame.

    Predicts every track, uses the union of predicted supports as the known support of
    modified-CS, refines with Add-LS-Del, splits the refined support among tracks by
    intensity, observes each object's location and applies the Kalman update. Objects
    without assigned support coast on their prediction.

    Returns:
        Tuple of the recovery (with support_pred and support_add set), the updated
        estimate and the updated tracks
    """
    measurement = validate_vector(measurement, est.n, "measurement")
    op = make_operator(est.basis, psi)
    eps = _epsilon(est, l_hat_prev, measurement, cfg.epsilon_floor_fraction)
    y = _projected(est, measurement)

    predicted: List[ObjectTrack] = []
    pred_supports: List[np.ndarray] = []
    for track in tracks:
        moved, support = tracker_service.predict_object(track)
        predicted.append(moved)
        pred_supports.append(support)
    known = np.unique(np.concatenate(pred_supports)) if pred_supports else np.zeros(0, dtype=np.int64)
    known = known[known < op.n]

    try:
        solution = solve(op, y, cfg.solver.copy(update={"epsilon": eps, "known_support": known.tolist()}))
        result = add_ls_del(
            op, y, solution.s, known, cfg.alpha_add, cfg.alpha_del,
            measurement=measurement, epsilon=eps
        )
        result.converged = solution.converged
        assigned = tracker_service.assign_supports(result.s_hat, predicted, support=result.support)
        updated = [
            tracker_service.update_object(track, tracker_service.observe_object(support, track))
            for track, support in zip(predicted, assigned)
        ]
    except RECOVERABLE_ERRORS as e:
        result = _failed(measurement, op.n, eps, e)
        updated = [tracker_service.update_object(track, None) for track in predicted]
    result.support_pred = known
    return result, _push(est, result.l_hat, cfg), updated


@dataclass
class FrameOutput:
    """Outputs of one processed frame."""
    t: int
    recovery: RecoveryResult
    rank: int
    tracks: List[ObjectTrack] = field(default_factory=list)
    assigned: List[np.ndarray] = field(default_factory=list)
    alignment: Dict[str, float] = field(default_factory=dict)


@dataclass
class PipelineRun:
    """Per-frame outputs of a run and the final estimate."""
    mode: str
    outputs: List[FrameOutput]
    estimate: SubspaceEstimate
    initial_estimate: SubspaceEstimate


class ReProCSPipeline:
    """
    Sequential ReProCS / ReProCS(modCS) processing of a frame sequence.
    One instance holds no state between runs.
    """

    def __init__(
        self,
        config: PipelineConfig,
        gamma: Optional[float] = None,
        mode: Optional[str] = None
    ):
        """
        Args:
            config: Pipeline configuration
            gamma: Resolved support threshold (config.gamma takes precedence)
            mode: Mode override, e.g. when comparing modes on the same data
        """
        self._config = config
        self._mode = mode or config.mode or DEFAULT_MODE
        self._gamma = config.gamma if config.gamma is not None else gamma
        self._psi = np.asarray(config.psi, dtype=np.float64) if config.psi is not None else None
        if self._mode == "reprocs" or config.track_init == "warmup":
            if self._gamma is None:
                raise ConfigurationException(
                    f"mode '{self._mode}' needs a resolved gamma",
                    details={"mode": self._mode}
                )

    @property
    def mode(self) -> str:
        return self._mode

    def initialize(self, training: np.ndarray) -> SubspaceEstimate:
        """Truncated-SVD initialization from training frames without a sparse part."""
        sub = self._config.subspace
        return init_truncated_svd(
            training,
            alpha0=sub.alpha0,
            subtract_mean=sub.subtract_mean,
            tau=sub.tau,
            alpha=sub.alpha,
            energy=sub.energy,
        )

    def _initial_tracks(
        self,
        frames: FrameSequence,
        est: SubspaceEstimate,
        l_hat_prev: np.ndarray
    ) -> Tuple[List[ObjectTrack], List[FrameOutput], SubspaceEstimate, np.ndarray]:
        """Tracks from ground truth or configured states, or from a ReProCS warm-up phase."""
        cfg = self._config
        shape = frames.frame_shape
        start = frames.train_count
        if cfg.track_init == "truth":
            states = []
            for k, tcfg in enumerate(cfg.tracks):
                if tcfg.initial_state is not None:
                    states.append(tcfg.initial_state)
                elif len(frames.object_states) > start and k < len(frames.object_states[start]):
                    states.append(frames.object_states[start][k])
                else:
                    raise ConfigurationException(
                        f"Track {k} has no initial_state and the data carries no object truth",
                        details={"track": k}
                    )
            return tracker_service.create_tracks(cfg.tracks, shape, states, prior_ready=True), [], est, l_hat_prev

        provisional = tracker_service.create_tracks(cfg.tracks, shape, [(0.0, 0.0, 0.0, 0.0)] * len(cfg.tracks))
        history: List[List[Optional[Tuple[float, float]]]] = [[] for _ in cfg.tracks]
        outputs: List[FrameOutput] = []
        warmup = min(cfg.warmup_frames, frames.count - start)
        for k in range(start, start + warmup):
            result, est = reprocs_step(est, frames.M[:, k], cfg, l_hat_prev, self._gamma, self._psi)
            l_hat_prev = result.l_hat
            assigned = tracker_service.assign_supports(result.s_hat, provisional, support=result.support)
            for j, (track, support) in enumerate(zip(provisional, assigned)):
                history[j].append(tracker_service.observe_object(support, track))
            outputs.append(FrameOutput(t=k + 1, recovery=result, rank=est.rank, assigned=assigned))

        states = []
        for j, observations in enumerate(history):
            seen = [o for o in observations if o is not None]
            if not seen:
                raise ProcessingException(
                    f"Track {j} received no support during the warm-up phase",
                    details={"track": j, "warmup_frames": warmup}
                )
            last = seen[-1]
            prev = seen[-2] if len(seen) > 1 else last
            states.append((last[0], last[1], last[0] - prev[0], last[1] - prev[1]))
        logger.info("tracks_warmed_up", tracks=len(states), frames=warmup)
        return tracker_service.create_tracks(cfg.tracks, shape, states), outputs, est, l_hat_prev

    def run(
        self,
        frames: FrameSequence,
        estimate: Optional[SubspaceEstimate] = None,
        directions: Optional[Dict[str, np.ndarray]] = None
    ) -> PipelineRun:
        """
        Processes every frame after the training segment.

        Args:
            frames: Sequence whose first train_count frames have no sparse part
            estimate: Precomputed initial estimate; computed from the training frames when omitted
            directions: Named n x k direction sets whose alignment is recorded per frame

        Returns:
            PipelineRun: per-frame outputs
        """
        if estimate is None:
            if frames.train_count < 1:
                raise ValidationException("No training frames available", details={"train_count": frames.train_count})
            estimate = self.initialize(frames.M[:, :frames.train_count])
        if estimate.n != frames.n:
            raise ValidationException(
                "Initial estimate does not match the frame size",
                details={"estimate_n": estimate.n, "frame_n": frames.n}
            )
        directions = directions or {}
        est = estimate
        start = frames.train_count
        l_hat_prev = frames.M[:, start - 1] if start > 0 else est.mean if est.mean is not None else np.zeros(frames.n)

        outputs: List[FrameOutput] = []
        tracks: List[ObjectTrack] = []
        if self._mode == "reprocs_modcs":
            tracks, outputs, est, l_hat_prev = self._initial_tracks(frames, est, l_hat_prev)
            for out in outputs:
                out.alignment = {name: float("nan") for name in directions}

        for k in range(start + len(outputs), frames.count):
            if self._mode == "reprocs":
                result, est = reprocs_step(est, frames.M[:, k], self._config, l_hat_prev, self._gamma, self._psi)
                assigned: List[np.ndarray] = []
            else:
                result, est, tracks = reprocs_modcs_step(
                    est, tracks, frames.M[:, k], self._config, l_hat_prev, self._psi
                )
                assigned = tracker_service.assign_supports(result.s_hat, tracks, support=result.support) \
                    if not result.failed else [np.zeros(0, dtype=np.int64) for _ in tracks]
            l_hat_prev = result.l_hat
            outputs.append(FrameOutput(
                t=k + 1,
                recovery=result,
                rank=est.rank,
                tracks=list(tracks),
                assigned=assigned,
                alignment={name: subspace_alignment(est, u) for name, u in directions.items()},
            ))
        failed = sum(1 for o in outputs if o.recovery.failed)
        logger.info("pipeline_finished", mode=self._mode, frames=len(outputs), failed=failed, rank=est.rank)
        return PipelineRun(mode=self._mode, outputs=outputs, estimate=est, initial_estimate=estimate)


def foreground_estimate(
    measurement: np.ndarray,
    result: RecoveryResult,
    compose_mode: str,
    psi: Optional[np.ndarray] = None
) -> np.ndarray:
    """O_hat: S_hat in additive mode, M on the estimated support in overlay mode."""
    if compose_mode == "overlay":
        o_hat = np.zeros_like(measurement)
        o_hat[result.support] = measurement[result.support]
        return o_hat
    return result.s_hat if psi is None else psi @ result.s_hat


def _misses_extras(truth: np.ndarray, estimate: Optional[np.ndarray]) -> Tuple[float, float]:
    if estimate is None:
        return float("nan"), float("nan")
    return float(np.setdiff1d(truth, estimate).size), float(np.setdiff1d(estimate, truth).size)


def evaluate(
    frames: FrameSequence,
    run: PipelineRun,
    run_index: int,
    compose_mode: str = "additive",
    psi: Optional[np.ndarray] = None
) -> List[Dict[str, Any]]:
    """
    Per-frame metric rows against ground truth, one dict per processed frame.
    Squared errors and norms are kept so that NMSE aggregates as a ratio of sums.
    """
    rows = []
    for out in run.outputs:
        k = out.t - 1
        rec = out.recovery
        m_t = frames.M[:, k]
        s_true = frames.S[:, k] if frames.S is not None else np.zeros(frames.n)
        l_true = frames.L[:, k] if frames.L is not None else m_t
        o_true = frames.O[:, k] if frames.O is not None else s_true
        s_est = rec.s_hat if psi is None else psi @ rec.s_hat
        o_hat = foreground_estimate(m_t, rec, compose_mode, psi)
        truth_support = frames.supports[k] if k < len(frames.supports) else np.zeros(0, dtype=np.int64)

        err = {
            "s": float(np.sum((s_true - s_est) ** 2)), "l": float(np.sum((l_true - rec.l_hat) ** 2)),
            "o": float(np.sum((o_true - o_hat) ** 2)),
        }
        norm = {"s": float(np.sum(s_true ** 2)), "l": float(np.sum(l_true ** 2)), "o": float(np.sum(o_true ** 2))}
        misses_pred, extras_pred = _misses_extras(truth_support, rec.support_pred)
        misses_upd, extras_upd = _misses_extras(truth_support, rec.support)
        rows.append({
            "run": run_index,
            "mode": run.mode,
            "t": out.t,
            "nmse_s": err["s"] / norm["s"] if norm["s"] > 0 else 0.0,
            "nmse_l": err["l"] / norm["l"] if norm["l"] > 0 else 0.0,
            "nmse_o": err["o"] / norm["o"] if norm["o"] > 0 else 0.0,
            "err_s": err["s"], "norm_s": norm["s"],
            "err_l": err["l"], "norm_l": norm["l"],
            "err_o": err["o"], "norm_o": norm["o"],
            "misses_pred": misses_pred, "extras_pred": extras_pred,
            "misses_upd": misses_upd, "extras_upd": extras_upd,
            "alignment_added": out.alignment.get("added", float("nan")),
            "alignment_decayed": out.alignment.get("decayed", float("nan")),
            "rank": out.rank,
            "epsilon": rec.epsilon_used,
            "support_size": int(rec.support.size),
            "converged": bool(rec.converged),
            "failed": bool(rec.failed),
        })
    return rows


def track_rows(
    frames: FrameSequence,
    run: PipelineRun,
    run_index: int
) -> List[Dict[str, Any]]:
    """
    Per-frame track dump: one row per (frame, object, axis) with the posterior state,
    covariance entries, observation and, on single-column grids, the observation-error bound.
    """
    rows = []
    single_column = frames.frame_shape[1] == 1
    for out in run.outputs:
        k = out.t - 1
        for j, track in enumerate(out.tracks):
            bound = float("nan")
            if single_column and j < len(out.assigned) and k < len(frames.object_states) \
                    and j < len(frames.object_states[k]):
                true_row = frames.object_states[k][j][0]
                true_support = tracker_service.object_support(track, (true_row, 0.0))
                assigned = out.assigned[j]
                truth_state = dataclasses.replace(track.row, g=np.array([true_row, 0.0]))
                try:
                    bound = tracker_service.omega_bound(
                        truth_state,
                        int(np.setdiff1d(true_support, assigned).size),
                        np.setdiff1d(assigned, true_support),
                    )
                except TrackLostException:
                    bound = float("inf")
            for axis, state in (("row", track.row), ("col", track.col)):
                obs = track.last_observation
                rows.append({
                    "run": run_index,
                    "mode": run.mode,
                    "t": out.t,
                    "object": j,
                    "axis": axis,
                    "p": state.position,
                    "v": state.velocity,
                    "sigma_pp": float(state.Sigma[0, 0]),
                    "sigma_pv": float(state.Sigma[0, 1]),
                    "sigma_vv": float(state.Sigma[1, 1]),
                    "p_obs": float("nan") if obs is None else obs[0 if axis == "row" else 1],
                    "bound": bound if axis == "row" else float("nan"),
                })
    return rows
