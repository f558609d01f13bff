"""
Schemas for the synthetic low-rank generator and the sparse-support processes.

Version: 1.0
"""

import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator  # pydantic v1.10+

SUPPORT_KINDS = ("strips", "blocks2d", "constant_velocity", "uniform", "none")

# Number of move directions per random-walk kind
MOVE_DIRECTIONS = {"strips": 2, "blocks2d": 4}


class VarianceLadder(BaseModel):
    """Geometric variance sequence start, start*ratio, ..., start*ratio**(count-1)."""
    start: float = Field(..., gt=0.0)
    ratio: float = Field(..., gt=0.0, le=1.0)
    count: int = Field(..., gt=0)

    def values(self) -> List[float]:
        return [self.start * self.ratio ** k for k in range(self.count)]

    class Config:
        extra = "forbid"


class ScheduleEvent(BaseModel):
    """
    Support change of the low-rank coefficients at frame time `time` (frames are numbered from 1).
    `add` indices start at a small value and grow; `decay` indices shrink geometrically with f_d.
    """
    time: int = Field(..., ge=1)
    add: List[int] = Field(default_factory=list)
    decay: List[int] = Field(default_factory=list)

    class Config:
        extra = "forbid"


class GeneratorSpec(BaseModel):
    """
    Autoregressive low-rank model x_t = F_t x_{t-1} + nu_t, L_t = U x_t.

    variances may be given directly (length n) or built from a ladder followed by
    extra_variances, zero-padded to n.
    """
    n: int = Field(..., gt=0)
    seed: int = 0
    variances: List[float] = Field(default_factory=list)
    ladder: Optional[VarianceLadder] = None
    extra_variances: List[float] = Field(default_factory=list)
    f: float = 0.5
    f_d: float = 0.1
    theta: float = 0.5
    d: Optional[int] = Field(default=None, gt=0, description="Minimum spacing between support changes")
    schedule: List[ScheduleEvent] = Field(default_factory=list)
    initial_support: Optional[List[int]] = Field(default=None, description="Defaults to the ladder indices")
    background_mean: float = Field(default=0.0, description="Constant mean level added to every L_t")

    @root_validator(skip_on_failure=True)
    def build_variances(cls, values):
        """Expands the ladder and checks the AR parameters."""
        n = values["n"]
        variances = list(values.get("variances") or [])
        ladder = values.get("ladder")
        if not variances and ladder is not None:
            variances = ladder.values() + list(values.get("extra_variances") or [])
            if len(variances) > n:
                raise ValueError(f"ladder and extra_variances hold {len(variances)} values for n={n}")
            variances += [0.0] * (n - len(variances))
        if len(variances) != n:
            raise ValueError(f"variances must have length n={n}, got {len(variances)}")
        if any(v < 0 for v in variances):
            raise ValueError("variances must be nonnegative")
        values["variances"] = variances

        f, f_d, theta = values["f"], values["f_d"], values["theta"]
        if not 0.0 < f_d < f < 1.0:
            raise ValueError("AR parameters must satisfy 0 < f_d < f < 1")
        if not 0.0 < theta < 1.0:
            raise ValueError("theta must satisfy 0 < theta < 1")

        if values.get("initial_support") is None:
            count = ladder.count if ladder is not None else sum(1 for v in variances if v > 0)
            values["initial_support"] = list(range(count))
        return values

    @root_validator(skip_on_failure=True)
    def validate_schedule(cls, values):
        """Indices in range; adds are fresh, decays are active, nothing is re-added."""
        n = values["n"]
        active = set(values["initial_support"])
        retired = set()
        if any(not 0 <= i < n for i in active):
            raise ValueError("initial_support index out of range")
        events = sorted(values.get("schedule") or [], key=lambda e: e.time)
        d = values.get("d")
        previous = None
        for event in events:
            for i in event.add + event.decay:
                if not 0 <= i < n:
                    raise ValueError(f"schedule index {i} at time {event.time} out of range [0, {n})")
            if previous is not None and event.time == previous:
                raise ValueError(f"duplicate schedule time {event.time}")
            if d is not None and previous is not None and event.time - previous < d:
                raise ValueError(f"schedule events at {previous} and {event.time} are closer than d={d}")
            for i in event.add:
                if i in active or i in retired:
                    raise ValueError(f"index {i} added at time {event.time} is already in use")
                if values["variances"][i] <= 0:
                    raise ValueError(f"index {i} added at time {event.time} has zero variance")
            for i in event.decay:
                if i not in active or i in retired:
                    raise ValueError(f"index {i} decayed at time {event.time} is not active")
            active |= set(event.add)
            retired |= set(event.decay)
            previous = event.time
        values["schedule"] = events
        return values

    class Config:
        extra = "forbid"


class ObjectSpec(BaseModel):
    """
    One foreground object, a (2 hr + 1) x (2 hc + 1) rectangle around its center.
    position is (row, col); a missing position is drawn uniformly from the valid range.
    """
    half_size: Tuple[int, int] = (0, 0)
    position: Optional[Tuple[float, float]] = None
    magnitude: float = 1.0
    velocity: Tuple[float, float] = (0.0, 0.0)

    @validator("half_size")
    def validate_half_size(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError("half_size entries must be nonnegative")
        return v

    class Config:
        extra = "forbid"


class SupportProcessSpec(BaseModel):
    """
    Motion model of the sparse part.

    strips: objects on a single-column grid moving up/down with p_move each.
    blocks2d: objects moving one cell up/down/left/right with p_move each.
    constant_velocity: position += velocity, velocity += truncated Gaussian acceleration (variance accel_var).
    uniform: `size` indices drawn fresh every frame with value `magnitude`.
    """
    kind: str = "none"
    frame_shape: Tuple[int, int] = (1, 1)
    objects: List[ObjectSpec] = Field(default_factory=list)
    p_static: float = Field(default=0.8, ge=0.0, le=1.0)
    p_move: float = Field(default=0.1, ge=0.0, le=1.0)
    accel_var: float = Field(default=0.0, ge=0.0)
    accel_axes: Tuple[bool, bool] = Field(default=(False, True), description="Axes (row, col) receiving random acceleration")
    size: int = Field(default=0, ge=0)
    magnitude: float = 1.0

    @validator("kind")
    def validate_kind(cls, v: str) -> str:
        if v not in SUPPORT_KINDS:
            raise ValueError(f"kind must be one of {SUPPORT_KINDS}")
        return v

    @root_validator(skip_on_failure=True)
    def validate_geometry(cls, values):
        """Probabilities sum to at most one and every object fits in the frame."""
        kind = values["kind"]
        rows, cols = values["frame_shape"]
        if rows < 1 or cols < 1:
            raise ValueError("frame_shape entries must be positive")
        if kind in MOVE_DIRECTIONS:
            total = values["p_static"] + MOVE_DIRECTIONS[kind] * values["p_move"]
            if total > 1.0 + 1e-12:
                raise ValueError(f"p_static + {MOVE_DIRECTIONS[kind]} * p_move = {total} exceeds 1")
        if kind == "uniform" and values["size"] > rows * cols:
            raise ValueError(f"uniform support size {values['size']} exceeds n={rows * cols}")
        for k, obj in enumerate(values.get("objects") or []):
            hr, hc = obj.half_size
            if 2 * hr + 1 > rows or 2 * hc + 1 > cols:
                raise ValueError(f"object {k} of size {2 * hr + 1}x{2 * hc + 1} does not fit in {rows}x{cols}")
            if obj.position is not None:
                r, c = obj.position
                if not (hr <= math.floor(r + 0.5) <= rows - 1 - hr and hc <= math.floor(c + 0.5) <= cols - 1 - hc):
                    raise ValueError(f"object {k} starts outside the frame")
        return values

    @property
    def n(self) -> int:
        return self.frame_shape[0] * self.frame_shape[1]

    class Config:
        extra = "forbid"
