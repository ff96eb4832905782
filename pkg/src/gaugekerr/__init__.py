"""Stochastic-gauge phase-space simulation of the Kerr oscillator with a time-reversal check."""

__version__ = "0.1.0"

from .oracle import closed_form_mean_a, fock_coherent, fock_evolve_mean_a, timescales
from .phase_space import (
    Ensemble,
    MomentEstimate,
    NormalizationError,
    PhasePoint,
    estimate_moment,
    init_coherent,
    quadratures,
    to_lab_frame,
)
from .sde import GaugeConfig, StepParams, evolve, gauge_value, gauged_noises, reverse
from .stats import BatchSpec, Histogram, log_weight_histogram, ratio_stderr
from .harness import ExperimentConfig, run_avogadro, run_forward, run_histograms, run_reversal
