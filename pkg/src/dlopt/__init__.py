"""Gradient-free global optimization with flow-based exploration.

The optimizer pairs a cheap surrogate of the objective with a
normalizing-flow density estimate of the points evaluated so far;
candidates are scored by surrogate value minus weighted log-density, so
the search is pulled both toward high predicted values and into regions
it has not visited. Simulated annealing of the surrogate targets and a
trust-region proposal volume round out the loop.
"""

from .acquisition import (
    AcquisitionConfig,
    dlo_af,
    expected_improvement,
    select_batch,
    thompson_sample,
    upper_confidence_bound,
)
from .domain import BoxDomain, DomainError
from .flow import FlowInversionError, SlicedGaussianizationFlow, scott_bandwidth
from .gp import GaussianProcessSurrogate, GPFitError, log_marginal_likelihood, matern52
from .harness import ExperimentConfig, run_experiment
from .history import EvaluationLog
from .mlp import MLPSurrogate, MLPTrainingError
from .objectives import (
    Objective,
    ackley_raw,
    correlated_gaussian_logpdf,
    double_gaussian_logpdf,
    get_objective,
    min_to_max,
    objective_ids,
    rastrigin_raw,
    rosenbrock_logpost,
)
from .optimizer import (
    ObjectiveEvaluationError,
    OptimizationResult,
    OptimizationRun,
    OptimizerConfig,
    random_search,
    run,
)
from .proposal import TrustState, generate_proposals, propose_input_space, update_radius
from .sampling import latin_hypercube, rng_streams
from .schedule import AnnealSchedule, beta_ladder, build_schedule, mode_for_iteration, select_beta0

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "AnnealSchedule",
    "BoxDomain",
    "DomainError",
    "EvaluationLog",
    "ExperimentConfig",
    "FlowInversionError",
    "GPFitError",
    "GaussianProcessSurrogate",
    "MLPSurrogate",
    "MLPTrainingError",
    "Objective",
    "OptimizationResult",
    "OptimizationRun",
    "OptimizerConfig",
    "SlicedGaussianizationFlow",
    "TrustState",
    "ackley_raw",
    "beta_ladder",
    "build_schedule",
    "correlated_gaussian_logpdf",
    "dlo_af",
    "double_gaussian_logpdf",
    "expected_improvement",
    "generate_proposals",
    "get_objective",
    "latin_hypercube",
    "log_marginal_likelihood",
    "matern52",
    "min_to_max",
    "mode_for_iteration",
    "objective_ids",
    "propose_input_space",
    "random_search",
    "rastrigin_raw",
    "rng_streams",
    "rosenbrock_logpost",
    "run",
    "run_experiment",
    "select_batch",
    "select_beta0",
    "thompson_sample",
    "update_radius",
    "upper_confidence_bound",
]
