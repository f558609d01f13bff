"""
Builders shared across test modules: orthonormal bases, exact estimates, small
synthetic sequences and experiment mappings.

Version: 1.0
"""

# External imports with versions
from typing import Any, Dict  # built-in

import numpy as np  # numpy v1.24+

# Internal imports
from reprocs.models.frames import FrameSequence
from reprocs.models.subspace import SubspaceEstimate

def orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """n x r matrix with orthonormal columns."""
    if r == 0:
        return np.zeros((n, 0))
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


def exact_estimate(basis: np.ndarray, tau: int = 1000, alpha: float = 0.0) -> SubspaceEstimate:
    """Estimate holding a known basis with unit singular values and an empty buffer."""
    return SubspaceEstimate(
        basis=basis.copy(),
        singvals=np.ones(basis.shape[1]),
        tau=tau,
        alpha=alpha,
        train_count=1,
        frames_seen=1,
    )


def static_object_sequence(
    basis: np.ndarray,
    train_count: int,
    horizon: int,
    rows: range,
    magnitude: float,
    rng: np.random.Generator,
    center: float
) -> FrameSequence:
    """Single-column sequence with low-rank L = basis @ x and one static object after training."""
    n, r = basis.shape
    count = train_count + horizon
    lowrank = basis @ (3.0 * rng.standard_normal((r, count)))
    sparse = np.zeros((n, count))
    support = np.asarray(list(rows), dtype=np.int64)
    sparse[np.ix_(support, np.arange(train_count, count))] = magnitude
    supports = [np.zeros(0, dtype=np.int64)] * train_count + [support] * horizon
    states = [[] for _ in range(train_count)] + [[(center, 0.0, 0.0, 0.0)] for _ in range(horizon)]
    return FrameSequence(
        M=lowrank + sparse,
        L=lowrank,
        S=sparse,
        O=sparse.copy(),
        supports=supports,
        frame_shape=(n, 1),
        train_count=train_count,
        object_states=states,
    )


def small_experiment_data(**overrides: Any) -> Dict[str, Any]:
    """Flat experiment mapping small enough to run in a unit test."""
    data: Dict[str, Any] = {
        "name": "unit",
        "t0": 30,
        "horizon": 6,
        "mc_runs": 2,
        "seed": 7,
        "modes": ["reprocs"],
        "generator": {
            "n": 20,
            "ladder": {"start": 100.0, "ratio": 0.5, "count": 3},
            "extra_variances": [4.0],
            "schedule": [{"time": 33, "add": [3], "decay": [2]}],
        },
        "support": {
            "kind": "strips",
            "frame_shape": [20, 1],
            "objects": [{"half_size": [1, 0], "magnitude": 50.0}],
        },
        "pipeline": {
            "gamma_fraction": 0.2,
            "subspace": {"tau": 5},
        },
    }
    data.update(overrides)
    return data


