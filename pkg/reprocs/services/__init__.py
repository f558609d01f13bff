"""
Service modules: recursive PCA, sparse recovery, support tracking, synthetic data,
the ReProCS pipeline, Monte-Carlo experiments and report emission.

Version: 1.0
"""

__all__ = [
    "experiment_service",
    "pipeline_service",
    "recovery_service",
    "report_service",
    "sparse_solver_service",
    "subspace_service",
    "synth_service",
    "tracker_service",
]
