"""
Synthetic data service.
Generates the autoregressive low-rank background L_t = U x_t with scheduled principal
direction changes, correlated or uniform sparse-support processes, and composes
measurements in additive or overlay mode.

Version: 1.0
"""

# External imports with versions
import dataclasses  # built-in
from dataclasses import dataclass, field  # built-in
from typing import List, Optional, Tuple  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+
from scipy.stats import truncnorm  # scipy v1.10+

# Internal imports
from reprocs.core.exceptions import DimensionMismatchException, ValidationException
from reprocs.models.frames import FrameSequence
from reprocs.schemas.synth import GeneratorSpec, SupportProcessSpec
from reprocs.services.tracker_service import round_half_away

# Configure structured logging
logger = structlog.get_logger(__name__)

# Unit moves per random-walk kind, as (d_row, d_col)
WALK_MOVES = {
    "strips": np.array([[-1, 0], [1, 0]]),
    "blocks2d": np.array([[-1, 0], [1, 0], [0, -1], [0, 1]]),
}

# Acceleration noise is truncated at +-ACCEL_TRUNCATION standard deviations
ACCEL_TRUNCATION = 2.0

# Independent streams spawned from one run seed
STREAM_BASIS, STREAM_LOWRANK, STREAM_SUPPORT = 0, 1, 2


def generate_basis(n: int, seed) -> np.ndarray:
    """
    n x n orthonormal U from the QR factorization of a standard Gaussian matrix,
    with columns signed so that diag(R) > 0 (the Gram-Schmidt result).

    Args:
        n: dimension
        seed: int seed or numpy Generator
    """
    if n < 1:
        raise ValidationException("Basis dimension must be positive", details={"n": n})
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass
class CoefficientSets:
    """Membership masks of the low-rank coefficients at one time."""
    added: np.ndarray
    steady: np.ndarray
    decaying: np.ndarray


def coefficient_sets(spec: GeneratorSpec, t: int) -> CoefficientSets:
    """
    Membership at time t as a pure function of the schedule: indices added exactly at t,
    steady (active, not decaying, not just added) and decaying (decay started at or before t).
    Decaying indices are never re-added.
    """
    n = spec.n
    active = np.zeros(n, dtype=bool)
    active[spec.initial_support] = True
    added = np.zeros(n, dtype=bool)
    decaying = np.zeros(n, dtype=bool)
    for event in spec.schedule:
        if event.time > t:
            break
        active[event.add] = True
        decaying[event.decay] = True
        if event.time == t:
            added[event.add] = True
    steady = active & ~decaying & ~added
    return CoefficientSets(added=added, steady=steady, decaying=decaying)


def step_lowrank(spec: GeneratorSpec, x_prev: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
    """
    x_t = F_t x_{t-1} + nu_t with diagonal F_t (0 on added, f on steady, f_d on decaying)
    and nu_t ~ N(0, Q_t), Q_t = theta Sigma on added and (1 - f^2) Sigma on steady.
    A full n-vector of normals is drawn every step.
    """
    if x_prev.shape[0] != spec.n:
        raise DimensionMismatchException(expected=spec.n, actual=x_prev.shape[0], name="x_prev")
    sets = coefficient_sets(spec, t)
    variances = np.asarray(spec.variances, dtype=np.float64)
    transition = np.where(sets.steady, spec.f, 0.0) + np.where(sets.decaying, spec.f_d, 0.0)
    noise_var = np.where(sets.added, spec.theta * variances, 0.0) \
        + np.where(sets.steady, (1.0 - spec.f ** 2) * variances, 0.0)
    return transition * x_prev + np.sqrt(noise_var) * rng.standard_normal(spec.n)


def uniform_support(n: int, size: int, seed) -> np.ndarray:
    """Uniformly random size-subset of [0, n), sorted."""
    if not 0 <= size <= n:
        raise ValidationException("Support size must lie in [0, n]", details={"n": n, "size": size})
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=size, replace=False)).astype(np.int64)


@dataclass
class SupportState:
    """Object centers and velocities of a support process, one row per object."""
    positions: np.ndarray
    velocities: np.ndarray
    clipped: bool = False
    started: bool = False


def init_support_state(spec: SupportProcessSpec, rng: np.random.Generator) -> SupportState:
    """Configured start positions, drawn uniformly over valid centers when missing."""
    rows, cols = spec.frame_shape
    positions, velocities = [], []
    for obj in spec.objects:
        hr, hc = obj.half_size
        if obj.position is None:
            position = (float(rng.integers(hr, rows - hr)), float(rng.integers(hc, cols - hc)))
        else:
            position = tuple(float(p) for p in obj.position)
        positions.append(position)
        velocities.append(tuple(float(v) for v in obj.velocity))
    shape = (len(spec.objects), 2)
    return SupportState(
        positions=np.asarray(positions, dtype=np.float64).reshape(shape),
        velocities=np.asarray(velocities, dtype=np.float64).reshape(shape),
    )


def _fits(center: Tuple[int, int], half: Tuple[int, int], frame_shape: Tuple[int, int]) -> bool:
    return all(h <= c <= extent - 1 - h for c, h, extent in zip(center, half, frame_shape))


def move_object(
    position: np.ndarray,
    delta: np.ndarray,
    half_size: Tuple[int, int],
    frame_shape: Tuple[int, int]
) -> Tuple[np.ndarray, bool]:
    """
    Moves a center by delta unless the object would leave the frame, in which case it
    stays (clip-and-stay). Returns the new center and whether the move was blocked.
    """
    moved = position + delta
    center = tuple(round_half_away(p) for p in moved)
    if _fits(center, half_size, frame_shape):
        return moved, False
    return position.copy(), True


def object_indices(position: np.ndarray, half_size: Tuple[int, int], frame_shape: Tuple[int, int]) -> np.ndarray:
    """Row-major flat indices of the rectangle around a center."""
    r, c = (round_half_away(p) for p in position)
    hr, hc = half_size
    rows = np.arange(max(r - hr, 0), min(r + hr, frame_shape[0] - 1) + 1)
    cols = np.arange(max(c - hc, 0), min(c + hc, frame_shape[1] - 1) + 1)
    return (rows[:, None] * frame_shape[1] + cols[None, :]).reshape(-1).astype(np.int64)


def _advance(spec: SupportProcessSpec, state: SupportState, rng: np.random.Generator) -> SupportState:
    positions = state.positions.copy()
    velocities = state.velocities.copy()
    clipped = False
    if spec.kind in WALK_MOVES:
        moves = WALK_MOVES[spec.kind]
        draws = rng.random(len(spec.objects))
        for k, obj in enumerate(spec.objects):
            direction = int(draws[k] // spec.p_move) if spec.p_move > 0 else len(moves)
            if direction < len(moves):
                positions[k], blocked = move_object(positions[k], moves[direction], obj.half_size, spec.frame_shape)
                clipped |= blocked
    elif spec.kind == "constant_velocity":
        scale = np.sqrt(spec.accel_var)
        if scale > 0:
            accel = truncnorm.rvs(
                -ACCEL_TRUNCATION, ACCEL_TRUNCATION, loc=0.0, scale=scale,
                size=(len(spec.objects), 2), random_state=rng
            )
        else:
            accel = np.zeros((len(spec.objects), 2))
        accel = accel * np.asarray(spec.accel_axes, dtype=np.float64)
        for k, obj in enumerate(spec.objects):
            positions[k], blocked = move_object(positions[k], velocities[k], obj.half_size, spec.frame_shape)
            clipped |= blocked
            velocities[k] = velocities[k] + accel[k]
    return SupportState(positions=positions, velocities=velocities, clipped=state.clipped or clipped, started=True)


def step_support(
    spec: SupportProcessSpec,
    state: SupportState,
    rng: np.random.Generator
) -> Tuple[SupportState, np.ndarray, np.ndarray]:
    """
    One frame of the support process. The first call emits the start positions; later
    calls move the objects first.

    Returns:
        Tuple of the new state, the support T_t and the foreground values O_t
    """
    n = spec.n
    if state.started:
        state = _advance(spec, state, rng)
    else:
        state = dataclasses.replace(state, started=True)

    values = np.zeros(n)
    if spec.kind == "uniform":
        support = uniform_support(n, spec.size, rng)
        values[support] = spec.magnitude
        return state, support, values
    if spec.kind == "none":
        return state, np.zeros(0, dtype=np.int64), values

    covered = np.zeros(n, dtype=bool)
    for k, obj in enumerate(spec.objects):
        idx = object_indices(state.positions[k], obj.half_size, spec.frame_shape)
        values[idx] = obj.magnitude
        covered[idx] = True
    return state, np.flatnonzero(covered).astype(np.int64), values


def compose(
    lowrank: np.ndarray,
    foreground: np.ndarray,
    support: np.ndarray,
    mode: str = "additive"
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Measurement and sparse part from L_t, O_t and T_t.

    additive: S_t = O_t on T_t; overlay: S_t = O_t - L_t on T_t. In both modes M_t = L_t + S_t,
    so in overlay mode M_t equals O_t on T_t and L_t elsewhere.
    """
    if lowrank.shape != foreground.shape:
        raise DimensionMismatchException(expected=lowrank.shape[0], actual=foreground.shape[0], name="foreground")
    sparse = np.zeros_like(lowrank)
    support = np.asarray(support, dtype=np.int64)
    if mode == "additive":
        sparse[support] = foreground[support]
    elif mode == "overlay":
        sparse[support] = foreground[support] - lowrank[support]
    else:
        raise ValidationException(f"Unknown compose mode '{mode}'", details={"mode": mode})
    return lowrank + sparse, sparse


def min_foreground_magnitude(spec: SupportProcessSpec) -> Optional[float]:
    """Smallest nonzero foreground magnitude the process can emit."""
    if spec.kind == "uniform":
        return abs(spec.magnitude) or None
    magnitudes = [abs(o.magnitude) for o in spec.objects if o.magnitude != 0]
    return min(magnitudes) if magnitudes else None


@dataclass
class GeneratedDirections:
    """Basis columns entering and decaying at the first support change after training."""
    added: List[int] = field(default_factory=list)
    decayed: List[int] = field(default_factory=list)


def first_change_after(spec: GeneratorSpec, t0: int) -> GeneratedDirections:
    for event in spec.schedule:
        if event.time > t0:
            return GeneratedDirections(added=list(event.add), decayed=list(event.decay))
    return GeneratedDirections()


def generate_sequence(
    generator: GeneratorSpec,
    support: SupportProcessSpec,
    t0: int,
    horizon: int,
    compose_mode: str = "additive",
    seed: Optional[int] = None,
    background: Optional[np.ndarray] = None
) -> FrameSequence:
    """
    Generates t0 training frames (S_t = 0) followed by `horizon` frames with a sparse part.

    Basis, coefficients and support are drawn from independent streams spawned from one
    seed (generator.seed when not given), so identical inputs give identical sequences.

    Args:
        generator: Low-rank model
        support: Sparse-support process
        t0: Training frames
        horizon: Frames with a sparse part
        compose_mode: additive or overlay
        seed: Run seed
        background: Optional n x (t0 + horizon) matrix replacing the generated L

    Returns:
        FrameSequence: measurements with full ground truth
    """
    n = generator.n
    count = t0 + horizon
    if support.kind != "none" and support.n != n:
        raise DimensionMismatchException(expected=n, actual=support.n, name="support frame size")
    seed = generator.seed if seed is None else seed
    basis_rng, lowrank_rng, support_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )

    basis = generate_basis(n, basis_rng)
    if background is None:
        coeffs = np.zeros((n, count))
        x = np.zeros(n)
        for k in range(count):
            x = step_lowrank(generator, x, k + 1, lowrank_rng)
            coeffs[:, k] = x
        lowrank = basis @ coeffs + generator.background_mean
    else:
        lowrank = np.asarray(background, dtype=np.float64)
        if lowrank.shape[0] != n or lowrank.shape[1] < count:
            raise DimensionMismatchException(expected=count, actual=lowrank.shape[1], name="background frames")
        lowrank = lowrank[:, :count]

    measurements = lowrank.copy()
    sparse = np.zeros((n, count))
    foreground = np.zeros((n, count))
    supports: List[np.ndarray] = [np.zeros(0, dtype=np.int64) for _ in range(t0)]
    object_states: List[List[Tuple[float, float, float, float]]] = [[] for _ in range(t0)]

    state = init_support_state(support, support_rng)
    for k in range(t0, count):
        state, idx, values = step_support(support, state, support_rng)
        measurements[:, k], sparse[:, k] = compose(lowrank[:, k], values, idx, compose_mode)
        foreground[idx, k] = values[idx]
        supports.append(idx)
        object_states.append([
            (float(p[0]), float(p[1]), float(v[0]), float(v[1]))
            for p, v in zip(state.positions, state.velocities)
        ])

    directions = first_change_after(generator, t0)
    if state.clipped:
        logger.info("support_clipped_at_border", seed=seed)
    rows, cols = support.frame_shape if support.kind != "none" else (n, 1)
    return FrameSequence(
        M=measurements,
        L=lowrank,
        S=sparse,
        O=foreground,
        supports=supports,
        frame_shape=(rows, cols),
        train_count=t0,
        object_states=object_states,
        basis=basis,
        added_directions=directions.added,
        decayed_directions=directions.decayed,
        flags={"clipped": bool(state.clipped)},
    )
