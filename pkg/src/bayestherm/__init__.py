"""Uninformed Bayesian thermometry with fully or partially thermalized qubit probes."""
from .estimators import (
    EstimateReport,
    EstimatorKind,
    OutcomeTable,
    UnsupportedEstimatorError,
    credible_interval_90,
    error,
    estimate,
    report,
    tabulate_outcomes,
)
from .global_metrics import (
    Cost,
    GlobalResult,
    SweepResult,
    VanTreesBound,
    averaged_estimate_and_error,
    confidence_interval,
    confidence_outcomes,
    finite_cost,
    global_crb,
    global_relative_error,
    global_rrms,
    outcome_table,
    rms_deviation,
    sweep,
    van_trees_bound,
    van_trees_equilibrium,
)
from .posterior import (
    ImpossibleOutcomeError,
    Posterior,
    TemperatureGrid,
    build_grid,
    posterior,
    posterior_expectation,
    quantile,
)
from .priors import PriorDensity, PriorKind, PriorSpec, build_prior, jeffreys_density, truncated_mass
from .sensitivity import (
    DetectableRange,
    UndetectableError,
    detectable_range,
    peak_fisher_ratio,
    relative_entropy,
)
from .thermal_model import (
    EQUILIBRIUM,
    ProbeConfig,
    excitation_probability,
    excitation_probability_derivative,
    fisher_information,
    likelihood,
)
from .thermometer import BayesianThermometer

__version__ = "0.1.0"
