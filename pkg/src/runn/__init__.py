"""Neural Uzawa solvers for the 1-D Poisson problem in weak, strong and ultraweak form."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .diffnet import (
    ConfigurationError,
    ContractViolation,
    NetworkParams,
    NetworkSpec,
    build_network,
    evaluate,
)
from .formulations import ProblemSpec, dirac_prime_problem, sine_problem, zero_problem
from .spectral import InitPlan, ncpsd, select_bandwidth
from .trainer import TrainConfig, train_phase
from .uzawa import PhaseConfig, UzawaState, error_report, run_approach1, run_deep_ritz_baseline

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "ContractViolation",
    "InitPlan",
    "NetworkParams",
    "NetworkSpec",
    "PhaseConfig",
    "ProblemSpec",
    "TrainConfig",
    "UzawaState",
    "build_network",
    "dirac_prime_problem",
    "error_report",
    "evaluate",
    "ncpsd",
    "run_approach1",
    "run_deep_ritz_baseline",
    "select_bandwidth",
    "sine_problem",
    "train_phase",
    "zero_problem",
]
