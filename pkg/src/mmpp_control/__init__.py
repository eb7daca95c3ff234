"""Optimal and heuristic service-rate control for MMPP/M/1 queues and periodic NHPP arrivals."""

from .conjugate import ConjugatePair, phi, psi
from .errors import (
    ConfigError,
    DegeneratePartition,
    MMPPControlError,
    NonConvergence,
    ReducibleChain,
    SingularSystem,
    StabilityWarning,
    Unstable,
    ValidationError,
)
from .heuristics import ComparisonRow, arm_policy, compare_heuristics, fixed_rate_gain, fixed_rate_policy, prm_policy
from .model import (
    CostModel,
    ExponentialCost,
    LinearHolding,
    PhaseProcess,
    PowerHolding,
    PowerSeriesCost,
    QuadraticCost,
    Scenario,
    ShiftedLinearHolding,
    UniformizedModel,
    mean_arrival_rate,
    stability_check,
    stationary_distribution,
    uniformize,
)
from .nhpp import (
    NhppPolicy,
    NhppScenario,
    PiecewiseConstant,
    Sinusoid,
    build_mmpp_approximation,
    evaluate_nhpp_policy,
    lift_policy,
    solve_nhpp_average,
)
from .solver import Policy, SolveResult, ValueFunction, evaluate_policy, first_difference, solve_average, solve_discounted
from .structure import MonotonicityReport, check_generator_monotone, verify_monotone_in_n, verify_monotone_in_s

__all__ = [name for name in dir() if not name.startswith("_")]
