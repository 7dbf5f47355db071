"""Residence-time measurement of a two-level system by a condensate meter."""

__version__ = "0.1.0"

from .fluct import FluctuatorSpec, p_n_classical, sample_residence
from .measure import MeasurementOutcome, bin_density, density_w, outcome_tables, probability_table
from .meter import MeterConfig, g_asymptotic, g_exact, tau_n
from .oracle import factorization_report, joint_evolve
from .regimes import classify, weak_value
from .respath import QubitSpec, check_symmetries, phi_fourier, phi_pathsum, u_matrix
from .timegrid import AmplitudeDistribution, TimeGrid, gauss_convolve, integrate, moment

__all__ = [
    "AmplitudeDistribution", "FluctuatorSpec", "MeasurementOutcome", "MeterConfig", "QubitSpec",
    "TimeGrid", "bin_density", "check_symmetries", "classify", "density_w", "factorization_report",
    "g_asymptotic", "g_exact", "gauss_convolve", "integrate", "joint_evolve", "moment",
    "outcome_tables", "p_n_classical", "phi_fourier", "phi_pathsum", "probability_table",
    "sample_residence", "tau_n", "u_matrix", "weak_value",
]
