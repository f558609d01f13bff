"""
Numeric tolerances shared across services.

Version: 1.0
"""

# Columns of E = D - P C below this (relative to max(1, ||D||_F)) are degenerate
QR_DEGENERATE_TOL = 1e-10

# Conditioning cap for restricted least squares
MAX_CONDITION_NUMBER = 1e8

# Solver defaults
DEFAULT_MAX_ITERS = 5000
DEFAULT_TOL = 1e-6
EPSILON_ZERO_FLOOR = 1e-10
FEASIBILITY_ABS_SLACK = 1e-8

# Pipeline: epsilon is clamped below at this fraction of ||M_t||
EPSILON_FLOOR_FRACTION = 1e-8

# Sign convention tolerance for singular vectors
SIGN_TOL = 1e-12
