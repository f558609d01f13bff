"""
Service-layer test suites: solver, recursive PCA, support estimation, tracking,
synthetic data, pipeline and experiments.

Version: 1.0
"""
