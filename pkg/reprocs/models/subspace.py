"""
Principal-components estimate carried through the recursive PCA updates.

Version: 1.0
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class SubspaceEstimate:
    """
    Orthonormal basis, singular values and the frame buffer of recursive PCA.

    Attributes:
        basis: n x r matrix with orthonormal columns
        singvals: length-r singular values, nonincreasing and positive
        buffer: up to tau recent low-rank estimates (mean-subtracted when a mean is set)
        tau: update period
        alpha: variance retention threshold
        alpha0: initialization singular-value threshold
        sigma_min_sq: squared smallest singular value retained at initialization
        mean: optional background mean subtracted from every input
        train_count: number of training frames used at initialization
        frames_seen: training frames plus every frame pushed since
    """
    basis: np.ndarray
    singvals: np.ndarray
    tau: int
    alpha: float
    alpha0: float = 0.0
    sigma_min_sq: float = 0.0
    mean: Optional[np.ndarray] = None
    buffer: List[np.ndarray] = field(default_factory=list)
    train_count: int = 0
    frames_seen: int = 0

    @property
    def n(self) -> int:
        return int(self.basis.shape[0])

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    def buffer_matrix(self) -> np.ndarray:
        """Buffered frames as an n x len(buffer) matrix."""
        if not self.buffer:
            return np.zeros((self.n, 0))
        return np.column_stack(self.buffer)

    def centered(self, v: np.ndarray) -> np.ndarray:
        """Subtracts the configured mean, if any."""
        if self.mean is None:
            return v
        return v - self.mean
