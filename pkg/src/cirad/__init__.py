"""Compressive-illumination radar simulation and sparse recovery toolkit.

A transmitter array emits a random subset of chirp tones; a small number
of low-rate receiver samples then suffice to recover sparse range/angle
scenes, either on the nominal grid (complex LASSO) or on the continuum
(alternating-descent conditional gradient).
"""

from .adcg import (AdcgConfig, AdcgRecovery, ContinuumEstimate,
                   prune_small_atoms, run_adcg)
from .config import (Grids, SystemConfig, build_config, config_fingerprint,
                     load_config_file, make_grids)
from .diagnostics import (MatrixReport, empirical_rip,
                          make_toeplitz_baseline, matrix_report,
                          mutual_coherence, operator_norm,
                          operator_norm_bound)
from .errors import CiradError
from .experiments import SweepSpec, TrialRecord, replay, run_sweep, run_trial
from .illumination import ToneAssignment, assign_transmitters, draw_tones, \
    trial_rng
from .lasso import (GridLasso, LassoConfig, RecoveryResult, debias,
                    detect_support, polish, solve_lasso)
from .metrics import (auc_mann_whitney, offgrid_metrics,
                      performance_profile, reconstruction_error, roc_curve)
from .operator import (Atom, MatrixFreeOperator, Measurement,
                       SensingOperator, assemble_matrix, atom_gradient,
                       atom_matrix, evaluate_atom, sigma_for_snr_db,
                       synthesize)
from .scenes import (ContinuumScene, GridScene, draw_continuum_scene,
                     draw_grid_scene)

__version__ = "0.1.0"

__all__ = [
    "AdcgConfig", "AdcgRecovery", "Atom", "CiradError", "ContinuumEstimate",
    "ContinuumScene", "GridLasso", "Grids", "GridScene", "LassoConfig",
    "MatrixFreeOperator", "MatrixReport", "Measurement", "RecoveryResult",
    "SensingOperator", "SweepSpec", "SystemConfig", "ToneAssignment",
    "TrialRecord", "assemble_matrix", "assign_transmitters",
    "atom_gradient", "atom_matrix", "auc_mann_whitney", "build_config",
    "config_fingerprint", "debias", "detect_support", "draw_continuum_scene",
    "draw_grid_scene", "draw_tones", "empirical_rip", "evaluate_atom",
    "load_config_file", "make_grids", "make_toeplitz_baseline",
    "matrix_report", "mutual_coherence", "offgrid_metrics", "operator_norm",
    "operator_norm_bound", "performance_profile", "polish",
    "prune_small_atoms", "reconstruction_error",
    "replay", "roc_curve", "run_adcg", "run_sweep", "run_trial",
    "sigma_for_snr_db", "solve_lasso", "synthesize", "trial_rng",
]
