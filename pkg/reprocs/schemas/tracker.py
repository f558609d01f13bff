"""
Schema for per-object Kalman tracker configuration.

Version: 1.0
"""

from typing import Optional, Tuple

from pydantic import BaseModel, Field, validator  # pydantic v1.10+

OBSERVE_MODES = ("centroid", "median")


class TrackerConfig(BaseModel):
    """
    Constant-velocity tracker for one object.

    half_width is (rows, cols); the object covers (2 hr + 1) x (2 hc + 1) cells.
    initial_state is (row, col, v_row, v_col) and is taken from ground truth when omitted.
    """
    Q: float = Field(default=2.5e-5, ge=0.0, description="Acceleration variance")
    R: float = Field(default=1e-4, ge=0.0, description="Observation-noise variance")
    half_width: Tuple[int, int] = (0, 0)
    intensity_range: Optional[Tuple[float, float]] = None
    observe_mode: str = "median"
    initial_state: Optional[Tuple[float, float, float, float]] = None
    initial_cov: Tuple[float, float] = Field(default=(0.0, 0.0), description="Initial diag(Sigma) for position and velocity")

    @validator("half_width")
    def validate_half_width(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError("half_width entries must be nonnegative")
        return v

    @validator("observe_mode")
    def validate_mode(cls, v: str) -> str:
        if v not in OBSERVE_MODES:
            raise ValueError(f"observe_mode must be one of {OBSERVE_MODES}")
        return v

    @validator("intensity_range")
    def validate_range(cls, v: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        if v is not None and not v[0] < v[1]:
            raise ValueError("intensity_range must satisfy lo < hi")
        return v

    class Config:
        extra = "forbid"
