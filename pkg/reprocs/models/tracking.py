"""
Kalman track state over object position and velocity.

Version: 1.0
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

# Constant-velocity transition and position observation
TRANSITION = np.array([[1.0, 1.0], [0.0, 1.0]])
OBSERVATION = np.array([[1.0, 0.0]])


@dataclass
class TrackState:
    """
    One-dimensional constant-velocity track.

    Attributes:
        g: state [p, v] in index units
        Sigma: 2x2 error covariance
        Q: acceleration variance on the velocity component
        R: observation-noise variance
        w: half-width; the object occupies 2w + 1 indices
        extent: axis length used to clip supports to [0, extent)
        gain: last Kalman gain (diagnostic)
        clipped: last predicted support touched a border
    """
    g: np.ndarray
    Sigma: np.ndarray
    Q: float
    R: float
    w: int
    extent: int
    gain: np.ndarray = field(default_factory=lambda: np.zeros(2))
    clipped: bool = False

    @property
    def G(self) -> np.ndarray:
        return TRANSITION

    @property
    def H(self) -> np.ndarray:
        return OBSERVATION

    @property
    def position(self) -> float:
        return float(self.g[0])

    @property
    def velocity(self) -> float:
        return float(self.g[1])


@dataclass
class ObjectTrack:
    """
    A tracked object on a (rows x cols) grid: one TrackState per axis.
    One-dimensional signals use a single-column grid whose column track stays at 0.
    prior_ready marks a state that already is the prediction for the next frame (truth initialization).
    """
    row: TrackState
    col: TrackState
    intensity_range: Optional[Tuple[float, float]] = None
    observe_mode: str = "median"
    coasted: int = 0
    prior_ready: bool = False
    last_observation: Optional[Tuple[float, float]] = None

    @property
    def frame_shape(self) -> Tuple[int, int]:
        return (self.row.extent, self.col.extent)
