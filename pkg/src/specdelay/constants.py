"""Numeric defaults and thresholds shared across specdelay."""

from __future__ import annotations

import math

HALF_PI = 0.5 * math.pi

# Grid and truncation
DEFAULT_GRID_M = 512
MIN_GRID_M = 16
DEFAULT_N_EIGEN = 128
MIN_N_EIGEN = 8
MODES_PER_GRID = 4  # grid_m >= MODES_PER_GRID * n_max
QUADRATURE_KINDS = ("trapezoid", "simpson")

# Root finding
DEFAULT_TOL_ROOT = 1e-10
CERTIFY_TOL = 1e-9
NEWTON_MAX_ITER = 60
FALLBACK_RADIUS = 0.5
CONTOUR_POINTS = 64
MERGE_TOL = 1e-6
ZERO_INDEX_SEED_J1 = 0.25
ZERO_INDEX_RADIUS = 1.0  # lambda-plane disk for the n = 0 search
REPAIR_RADIUS = 1.5  # known roots within this rho-distance are deflated on retry

# sin(rho x)/rho and its lambda-derivative switch to series below these |rho x|
SERIES_CUTOFF = 1e-4
DERIVATIVE_SERIES_CUTOFF = 1e-2

# IVP oracle
IVP_TOL = 1e-8
IVP_MAX_REFINE = 6
ORACLE_TOL = 1e-6  # |Δ_j - oracle| <= ORACLE_TOL·(1 + |λ|)
ORACLE_GROWTH_BAND = 4.0  # beyond this |Im ρ| the gap is measured against exp(π(|Im ρ| - band))

# Products
POLE_TOL = 1e-12
POLE_SHIFT = 1e-12
PRODUCT_TAIL_TERMS = 4096  # asymptotic zeros appended past the horizon

# Omega estimators
OMEGA_METHODS = ("sample", "ratio")
RATIO_COS_THRESHOLD = 0.3
RATIO_MIN_INDICES = 4
SAMPLE_TERMS = 8

# Characterization
FIT_COS_THRESHOLD = 0.1
TAIL_FRACTION = 0.05
EXP_TYPE_SLACK = 0.1
A4_TOL = 1e-3
THETA_VANISH_TOL = 1e-10
THETA_NOISE_FACTOR = 10.0  # |θ| must exceed this multiple of the horizon spread
THETA_MIN_RESOLVED = 3
THETA_HORIZON_FRACTIONS = (0.5, 0.75)
DEFAULT_DECAY_SAMPLES = tuple(0.5 * k for k in range(1, 9))
DEFAULT_TYPE_SAMPLES = tuple(0.5 * k for k in range(1, 25))

# Reconstruction
CONSISTENCY_FACTOR = 10.0
DEFAULT_ROUNDTRIP_THRESHOLD = 0.05
JUMP_FIT_MIN_MODES = 16
JUMP_FIT_FLOOR = 1e-10  # coefficient norms below this are treated as zero
JUMP_FIT_MAX_RESIDUAL = 0.5  # relative misfit above which the series is not extended
