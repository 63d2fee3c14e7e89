"""Emitter coupled to cascaded cavities: master-equation, correlator and rate-model tools."""

from .correlator import IndistinguishabilityReport, indistinguishability, two_time_correlator
from .ensemble import DiffusionSpec, ensemble_efficiency, ensemble_indistinguishability, ensemble_point
from .errors import (
    CascadeError,
    DegenerateGenerator,
    DegenerateSpectrum,
    InfeasibleProblem,
    InvalidParameters,
    NonConvergence,
    StepTooLarge,
    TailTooHeavy,
)
from .master import PopulationTrace, TimeWindow, channel_totals, efficiency_exact, propagate
from .model import DensityState, SystemParams, build_liouvillian
from .optimize import Constraints, OptimizationResult, optimize
from .rates import RateModel, build_rate_model, efficiency_closed, indistinguishability_closed, rate_propagate
from .report import EmissionReport, evaluate_point
from .units import QFactorSpec, kappa_to_q, q_to_kappa

__version__ = "0.1.0"

__all__ = [
    "CascadeError", "Constraints", "DegenerateGenerator", "DegenerateSpectrum", "DensityState",
    "DiffusionSpec", "EmissionReport", "IndistinguishabilityReport", "InfeasibleProblem",
    "InvalidParameters", "NonConvergence", "OptimizationResult", "PopulationTrace", "QFactorSpec",
    "RateModel", "StepTooLarge", "SystemParams", "TailTooHeavy", "TimeWindow", "build_liouvillian",
    "build_rate_model", "channel_totals", "efficiency_closed", "efficiency_exact", "ensemble_efficiency",
    "ensemble_indistinguishability", "ensemble_point", "evaluate_point", "indistinguishability",
    "indistinguishability_closed", "kappa_to_q", "optimize", "propagate", "q_to_kappa", "rate_propagate",
    "two_time_correlator",
]
