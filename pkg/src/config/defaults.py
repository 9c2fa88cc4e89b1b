"""Numerical defaults shared by every stage of the reduction pipeline."""

# Lyapunov / EKSM
EKSM_TOL = 1e-10
EKSM_MAXITER = 100
EKSM_UNSTABLE_PATIENCE = 3
DEFLATION_TOL = 1e-10
FACTOR_SVD_CUT = 1e-12
PIVOT_TOL = 1e-14

# Dense oracle
DENSE_CAP = 2000
STABILITY_MARGIN = 1e-13
LYAPUNOV_RESIDUAL_TOL = 1e-10
SYMMETRY_TOL = 1e-12

# Balanced truncation
HSV_RANK_TOL = 1e-14
DEFAULT_RELATIVE_EPS = 1e-6
BIORTHOGONALITY_TOL = 1e-8

# Model assembly
C_MIN = 1e-18
SPD_PROBES = 100

# Frequency response
DEFAULT_Z0 = 50.0
DEFAULT_GRID = "1e6:1e11:201:log"
