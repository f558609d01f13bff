"""
Schemas for Monte-Carlo experiments and named presets.

Version: 1.0
"""

from typing import List, Optional

from pydantic import BaseModel, Field, root_validator, validator  # pydantic v1.10+

from reprocs.schemas.pipeline import PIPELINE_MODES, PipelineConfig
from reprocs.schemas.synth import GeneratorSpec, SupportProcessSpec

PRESET_NAMES = (
    "table1_large",
    "table1_small",
    "table1_large_36",
    "table1_small_36",
    "table2_random",
    "table2_correlated",
    "twoblocks_modcs",
    "overlay_realbg",
)
COMPOSE_MODES = ("additive", "overlay")


class ExperimentConfig(BaseModel):
    """
    Data generation, pipeline and Monte-Carlo settings of one experiment.

    Frames 1..t0 carry no sparse part and train the initial basis; the next `horizon`
    frames are processed recursively. Each run r uses seeds[r] (default seed + r).
    """
    name: str = "custom"
    t0: int = Field(..., gt=0)
    horizon: int = Field(default=100, ge=0)
    mc_runs: int = Field(default=1, gt=0)
    seed: int = 0
    seeds: Optional[List[int]] = None
    jobs: Optional[int] = Field(default=None, gt=0)
    modes: List[str] = Field(default_factory=lambda: ["reprocs"])
    compose_mode: str = "additive"
    generator: GeneratorSpec
    support: SupportProcessSpec = Field(default_factory=SupportProcessSpec)
    pipeline: PipelineConfig
    background_frames: Optional[str] = Field(default=None, description="Frame file replacing the generated L_t")

    @validator("modes")
    def validate_modes(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError("at least one mode is required")
        for mode in v:
            if mode not in PIPELINE_MODES:
                raise ValueError(f"unknown mode '{mode}'")
        if len(set(v)) != len(v):
            raise ValueError("modes contains duplicates")
        return v

    @validator("compose_mode")
    def validate_compose_mode(cls, v: str) -> str:
        if v not in COMPOSE_MODES:
            raise ValueError(f"compose_mode must be one of {COMPOSE_MODES}")
        return v

    @root_validator(skip_on_failure=True)
    def validate_consistency(cls, values):
        """Dimensions agree across sections and every requested mode is configured."""
        generator, support, pipeline = values["generator"], values["support"], values["pipeline"]
        if support.kind != "none" and support.n != generator.n:
            raise ValueError(f"support frame_shape {support.frame_shape} does not match n={generator.n}")
        seeds = values.get("seeds")
        if seeds is not None and len(seeds) != values["mc_runs"]:
            raise ValueError(f"seeds has {len(seeds)} entries for mc_runs={values['mc_runs']}")
        for mode in values["modes"]:
            missing = pipeline.missing_for(mode)
            if missing:
                raise ValueError(f"mode '{mode}' requires pipeline {', '.join(missing)}")
        if pipeline.gamma_fraction is not None and pipeline.gamma is None and support.kind == "none":
            raise ValueError("gamma_fraction needs a foreground magnitude; set pipeline.gamma")
        return values

    def run_seeds(self) -> List[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [self.seed + r for r in range(self.mc_runs)]

    @property
    def frame_shape(self):
        if self.support.kind != "none":
            return self.support.frame_shape
        return self.pipeline.frame_shape or (self.generator.n, 1)

    class Config:
        extra = "forbid"


class ExperimentPreset(BaseModel):
    """Named preset with desk-scale overrides."""
    name: str
    n: Optional[int] = Field(default=None, gt=0)
    t0: Optional[int] = Field(default=None, gt=0)
    horizon: Optional[int] = Field(default=None, ge=0)
    mc_runs: Optional[int] = Field(default=None, gt=0)
    full_scale: bool = False

    @validator("name")
    def validate_name(cls, v: str) -> str:
        if v not in PRESET_NAMES:
            raise ValueError(f"unknown preset '{v}'; choose one of {', '.join(PRESET_NAMES)}")
        return v

    class Config:
        extra = "forbid"
