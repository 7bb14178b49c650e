"""
Centralized Configuration Module
All paths, tolerances, and numerical parameters in one place.
"""

import os

# == DIRECTORY STRUCTURE ======================================================
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
SOURCES_DIR = os.path.join(PROJECT_ROOT, 'sources')
RESULTS_DIR = os.path.join(PROJECT_ROOT, 'results')

# Ensure directories exist
os.makedirs(RESULTS_DIR, exist_ok=True)

# == FILE PATHS ===============================================================
PATHS = {
    # Example system descriptors
    'figure_one_system': os.path.join(SOURCES_DIR, 'figure_one_system.json'),
    'general_system': os.path.join(SOURCES_DIR, 'general_system.json'),

    # Process log
    'log_file': os.path.join(PROJECT_ROOT, 'spectra_process.log'),
}

# == NUMERICAL TOLERANCES =====================================================
TOLERANCES = {
    'real_eigenvalue': 1e-9,           # |Im| <= tol * (1 + |lambda|)
    'distinct_relative_gap': 1e-8,     # reduced spectrum must be separated
    'zero_significance': 1e-12,        # |b_j| relative to the matrix norm
    'diagonalizable_condition': 1e12,  # cond(S) of the eigenvector basis
    'pole_proximity': 1e-12,           # |kappa - lambda_k| < tol * (1 + |lambda_k|)
    'method_agreement': 1e-7,          # eig vs polynomial roots
    'real_root': 1e-9,                 # root counted as real after symmetrization
    'coincidence': 1e-6,               # localized root pair
    'jet': 1e-10,                      # f'' and f''' degeneracy
    'critical_gap': 1e-6,              # sensitivity denominators
    'boundary': 1e-12,                 # geometric ties
    'placement_residual': 1e-9,        # forward check, relative per coefficient
    'vandermonde_residual': 1e-8,
    'zero_a': 1e-12,
    'overflow': 1e300,
    'resonance': 1e-9,
}

# == ROOT FINDER ==============================================================
ROOT_FINDER = {
    'max_iter': 100,
    'tol': 1e-13,          # relative correction size for a converged root
    'angle_offset': 0.4,   # rotation of the initial circle
}

# == ROOT LABELING (HOMOTOPY) =================================================
HOMOTOPY = {
    'geometric_steps': 8,    # t = 0, 2^-7, ..., 1/2, 1
    'gap_fraction': 0.5,     # max move relative to min pairwise gap
    'max_depth': 40,         # halving depth before a crossing is resolved
    'status_offset': 1e-6,   # pair status is read this far outside the final interval
}

# == LOCUS TRACING ============================================================
LOCUS = {
    'insert_gap_fraction': 0.05,
    'max_insert_depth': 4,
    'direction_offset': 1e-4,
    'newton_max_iter': 60,
    'asymptote_omegas': (1e2, 1e3, 1e4),
    'fit_relative_tolerance': 0.10,
}

# == SENSITIVITY ==============================================================
SENSITIVITY = {
    'fd_step': 1e-6,         # scaled by (1 + |coordinate|)
    'fd_tolerance': 1e-5,
}

# == VALUATION ================================================================
VALUATION = {
    'series_tail': 1e-10,
    'max_terms': 1_000_000,
    'growth_margin': 1e-9,
    'agreement': 1e-6,
    'quad_limit': 400,
    'modal_condition': 1e6,  # cond of the eigenvector basis before the modal form is dropped
}

# == DIVIDEND-POLICY IRRELEVANCE PROBE ========================================
DPI = {
    'spread_tolerance': 1e-6,      # scaled by (1 + |P0|)
    'max_rejection_rate': 0.5,
    'min_samples': 8,
    'default_samples': 32,
    'default_radius': 1e-2,
    'default_seed': 20240531,
    'second_ball_offset': 3.0,     # in radii; above 2 keeps the balls disjoint
    'segment_checks': 16,          # growth checks along the segment between the balls
}

# == RANDOM SYSTEM GENERATION =================================================
GENERATOR = {
    'spectrum_low': 0.5,
    'min_gap': 0.2,
    'max_gap': 0.8,
    'omega_scale': 0.5,
}

# == RUNTIME ==================================================================
RUNTIME = {
    'threads_env': 'SPECTRA_THREADS',
    'default_threads': 1,
}

# == LOGGING CONFIGURATION ====================================================
LOGGING = {
    'level': 'INFO',
    'format': '%(asctime)s - [%(module)s] - %(levelname)s - %(message)s',
    'datefmt': '%Y-%m-%d %H:%M:%S',
    'console': True  # Set to False to disable terminal output
}
