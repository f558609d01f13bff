"""
Time-indexed frame sequences with optional ground truth.

Version: 1.0
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


@dataclass
class FrameSequence:
    """
    Columns are frames: M is n x T. Ground truth is present for synthetic data.

    Attributes:
        M: measurements
        L: low-rank parts
        S: sparse parts
        O: foreground values (equal to S in additive mode)
        supports: per-frame true support index arrays
        frame_shape: grid shape of one frame (rows, cols)
        train_count: leading frames with S = 0 used for initialization
        object_states: per-frame list of (row, col, v_row, v_col) per object
        basis: generator basis U (synthetic data only)
        added_directions: column indices of U entering after training
        decayed_directions: column indices of U decaying after training
    """
    M: np.ndarray
    L: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    O: Optional[np.ndarray] = None
    supports: List[np.ndarray] = field(default_factory=list)
    frame_shape: Tuple[int, int] = (0, 1)
    train_count: int = 0
    object_states: List[List[Tuple[float, float, float, float]]] = field(default_factory=list)
    basis: Optional[np.ndarray] = None
    added_directions: List[int] = field(default_factory=list)
    decayed_directions: List[int] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.M.shape[0])

    @property
    def count(self) -> int:
        return int(self.M.shape[1])

    def test_frames(self) -> range:
        """Column indices after the training segment."""
        return range(self.train_count, self.count)
