"""Shared constants for the sequential steering simulator."""

import math

# Classical bounds of the steering functionals
CFFW_BOUND = 2.0
CJWR_BOUND = 1.0

# Strict-violation slack: value > bound + VIOLATION_SLACK
VIOLATION_SLACK = 1e-12

# Invariant tolerances
UNIT_NORM_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-9
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
PROBABILITY_SUM_TOL = 1e-10
NEGATIVE_PROBABILITY_TOL = 1e-12
SINGULAR_VALUE_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-12

# Sharpness search interval (lower end kept above zero)
LAMBDA_MIN = 0.01
LAMBDA_MAX = 1.0

# Optimizer defaults
DEFAULT_RESTARTS = 64
DEFAULT_ITERATIONS = 2000
SIMPLEX_TOL = 1e-8
PENALTY_WEIGHTS = (1e2, 1e3, 1e4, 1e5, 1e6)
FEASIBILITY_TOL = 1e-4
DEFAULT_SEED = 0

# Verification defaults
VERIFY_TOLERANCE = 1e-9
VERIFY_TRIALS = 1000
SIGNALLING_WITNESS_MIN = 0.01

# Output formatting
PROBABILITY_DIGITS = 17
ANGLE_DIGITS = 12

TWO_PI = 2.0 * math.pi
TSIRELSON_CFFW = 2.0 * math.sqrt(2.0)

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
