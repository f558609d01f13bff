"""
Outputs of the sparse solver and of support estimation.

Version: 1.0
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class SolveResult:
    """Solver output with its convergence certificate."""
    s: np.ndarray
    converged: bool
    iterations: int
    objective: float
    residual_norm: float
    epsilon: float
    infeasible: bool = False
    polished: bool = False


@dataclass
class RecoveryResult:
    """
    Per-frame sparse recovery.

    Attributes:
        s_raw: solver output
        support: estimated support (sorted indices)
        s_hat: debiased sparse estimate, zero off support
        l_hat: low-rank estimate M - s_hat (M - Psi s_hat when Psi is set)
        epsilon_used: constraint radius passed to the solver
        residual_norm: ||y - A s_hat||_2
        support_add: candidate support after the add stage (modified-CS only)
        support_pred: union of the predicted object supports (modified-CS only)
    """
    s_raw: np.ndarray
    support: np.ndarray
    s_hat: np.ndarray
    l_hat: np.ndarray
    epsilon_used: float
    residual_norm: float
    converged: bool = True
    failed: bool = False
    support_add: Optional[np.ndarray] = None
    support_pred: Optional[np.ndarray] = None
