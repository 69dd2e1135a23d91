import math

# Numerical tolerances
PROJECTION_TOL = 1e-9
HERMITIAN_TOL = 1e-9
ZERO_CUTOFF = 1e-12
INEQUALITY_RTOL = 1e-9
ENTRYWISE_TOL = 1e-9
CONDEXP_TOL = 1e-8
# e ≤ f checks on projections rebuilt from eigenvectors
ORDER_TOL = 1e-8

# Size limits
DIM_CAP = 4096
DIAG_ENUMERATION_LIMIT = 20

# Projection search
DEFAULT_BUDGET = 2000
DEFAULT_DESCENTS = 4
LINE_SEARCH_EVALS = 8
PER_TERM_STARTS = 8
# growth fits skip sizes whose corank budget leaves fewer removable directions
ASYMPTOTIC_MIN_CORANK = 2

# Ergodic averages
DEFAULT_SCAN_CAP = 2**40
DEFAULT_ALPHA_RATIO = 2000.0

# Chain / obstruction defaults
DEFAULT_CHAIN_P = 0.25
DEFAULT_OBSTRUCTION_N_MAX = 30

# Default experiment grids
DEFAULT_TN_MAX = 64
DEFAULT_P_LIST = [0.1, 0.25, 0.4, 0.49]
DEFAULT_MU_N_LIST = [8, 16, 32, 64, 128]
DEFAULT_MU_T = 0.1
DEFAULT_CHAIN_N = 8
DEFAULT_CHAIN_T = 0.125
DEFAULT_CHAIN_TRIALS = 50
DEFAULT_ERGODIC_K_LIST = [2**k for k in range(1, 11)]
DEFAULT_ERGODIC_TRIALS = 100
DEFAULT_ERGODIC_N_LIST = [2, 3]
DEFAULT_ERGODIC_P = 1.0
DEFAULT_SUBSEQUENCE_TOL = 0.05
DEFAULT_OBSTRUCTION_P_LIST = [1.0, 1.5]
DEFAULT_OBSTRUCTION_T = 1e-3

# Environment
JOBS_ENV = "MULAB_JOBS"
LOG_LEVEL_ENV = "MULAB_LOG_LEVEL"

INFINITY = math.inf
