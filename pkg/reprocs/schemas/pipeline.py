"""
Schema for one ReProCS / ReProCS(modCS) pipeline configuration.

Version: 1.0
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator  # pydantic v1.10+

from reprocs.core.constants import EPSILON_FLOOR_FRACTION
from reprocs.schemas.solver import SolveConfig
from reprocs.schemas.subspace import SubspaceConfig
from reprocs.schemas.tracker import TrackerConfig

PIPELINE_MODES = ("reprocs", "reprocs_modcs")
DEFAULT_MODE = "reprocs"
TRACK_INITS = ("truth", "warmup")


class PipelineConfig(BaseModel):
    """
    Support thresholds, solver defaults, recursive-PCA parameters and trackers for one run.

    gamma may be given directly or as gamma_fraction * (minimum nonzero foreground magnitude).
    mode is optional when the experiment lists its modes; a standalone pipeline runs as "reprocs".
    """
    mode: Optional[str] = None
    gamma: Optional[float] = Field(default=None, gt=0.0)
    gamma_fraction: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    alpha_add: Optional[float] = Field(default=None, gt=0.0)
    alpha_del: Optional[float] = Field(default=None, gt=0.0)
    solver: SolveConfig = Field(default_factory=SolveConfig)
    subspace: SubspaceConfig = Field(default_factory=SubspaceConfig)
    tracks: List[TrackerConfig] = Field(default_factory=list)
    track_init: str = "truth"
    warmup_frames: int = Field(default=3, ge=2)
    psi: Optional[List[List[float]]] = None
    frame_shape: Optional[Tuple[int, int]] = None
    epsilon_floor_fraction: float = Field(default=EPSILON_FLOOR_FRACTION, ge=0.0)

    @validator("mode")
    def validate_mode(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in PIPELINE_MODES:
            raise ValueError(f"mode must be one of {PIPELINE_MODES}")
        return v

    @validator("track_init")
    def validate_track_init(cls, v: str) -> str:
        if v not in TRACK_INITS:
            raise ValueError(f"track_init must be one of {TRACK_INITS}")
        return v

    @validator("psi")
    def validate_psi(cls, v: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        if v is not None and (not v or len({len(row) for row in v}) != 1):
            raise ValueError("psi must be a non-empty rectangular matrix")
        return v

    @root_validator(skip_on_failure=True)
    def validate_mode_fields(cls, values):
        """An explicit mode must be runnable; otherwise the experiment checks its modes."""
        if values.get("mode") is None:
            return values
        missing = missing_fields(values, values["mode"])
        if missing:
            raise ValueError(f"mode '{values['mode']}' requires {', '.join(missing)}")
        return values

    def missing_for(self, mode: str) -> List[str]:
        """Fields a run in `mode` needs but this config lacks."""
        return missing_fields(self.dict(), mode)

    class Config:
        extra = "forbid"


def missing_fields(values: dict, mode: str) -> List[str]:
    missing = []
    if mode == "reprocs" and values.get("gamma") is None and values.get("gamma_fraction") is None:
        missing.append("gamma or gamma_fraction")
    if mode == "reprocs_modcs":
        add, delete = values.get("alpha_add"), values.get("alpha_del")
        if add is None or delete is None:
            missing.append("alpha_add and alpha_del")
        elif add > delete:
            missing.append("alpha_add <= alpha_del")
        if not values.get("tracks"):
            missing.append("at least one track")
        if values.get("track_init") == "warmup" and values.get("gamma") is None and values.get("gamma_fraction") is None:
            missing.append("gamma or gamma_fraction for the warm-up phase")
    return missing
