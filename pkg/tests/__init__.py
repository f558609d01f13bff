"""
ReProCS test suite.

Markers (registered in pytest.ini):
- unit, integration: isolated components and cross-service runs
- solver, subspace, tracker, synth, pipeline, cli: per-area suites
- slow: acceptance-scale reproductions, deselected by default

Version: 1.0
"""
