"""
Value types shared by the services.

Version: 1.0
"""

from reprocs.models.frames import FrameSequence
from reprocs.models.metrics import MetricsReport
from reprocs.models.recovery import RecoveryResult, SolveResult
from reprocs.models.subspace import SubspaceEstimate
from reprocs.models.tracking import ObjectTrack, TrackState

__all__ = [
    "FrameSequence",
    "MetricsReport",
    "ObjectTrack",
    "RecoveryResult",
    "SolveResult",
    "SubspaceEstimate",
    "TrackState",
]
