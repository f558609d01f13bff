"""
Pydantic schemas for solver, subspace, tracker, generator, pipeline and experiment configuration.

Version: 1.0
"""

from reprocs.schemas.experiment import PRESET_NAMES, ExperimentConfig, ExperimentPreset
from reprocs.schemas.pipeline import PipelineConfig
from reprocs.schemas.solver import SolveConfig
from reprocs.schemas.subspace import SubspaceConfig
from reprocs.schemas.synth import GeneratorSpec, ObjectSpec, ScheduleEvent, SupportProcessSpec
from reprocs.schemas.tracker import TrackerConfig

__all__ = [
    "ExperimentConfig",
    "ExperimentPreset",
    "GeneratorSpec",
    "ObjectSpec",
    "PRESET_NAMES",
    "PipelineConfig",
    "ScheduleEvent",
    "SolveConfig",
    "SubspaceConfig",
    "SupportProcessSpec",
    "TrackerConfig",
]
