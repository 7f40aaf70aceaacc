"""Solver, verifier and simulator for sender-receiver stopping games.

An informed sender watches an iid state each period and recommends
continuing or quitting; an uninformed receiver decides whether to stop.
Payoffs are increasing functions of the state at the stopping period,
discounted or not.  This package computes the regular (sincere/obedient)
strategy profile and its exact values, locates the critical discount
bounds, classifies the equilibrium regime, checks arbitrary threshold
profiles with a one-shot deviation oracle, and estimates payoffs by seeded
Monte Carlo playouts.
"""

__version__ = "1.0.0"

from .equilibrium import (
    DiscountBound,
    GameSpec,
    GameSpecError,
    RegimeVerdict,
    RegularProfile,
    ThresholdConvergence,
    backward_step,
    classify,
    critical_discount_finite,
    critical_discount_infinite,
    receiver_quit_value,
    sender_threshold_value,
    solve_finite,
    solve_infinite,
    stationary_receiver_value,
    threshold_convergence,
)
from .fnspace import (
    UNIFORM,
    ConstructionError,
    DomainError,
    MonotoneMap,
    RangeError,
    StateDistribution,
    compose_with_quantile,
)
from .profiles import (
    Playout,
    ProfileError,
    SimulationResult,
    StrategyProfile,
    default_truncation,
    from_regular,
    play_once,
    sender_deviation_value,
    simulate,
    trace_playout,
)
from .transform import TransformedGame, map_threshold, solve_general, to_uniform
from .verifier import (
    BeliefInterval,
    DeviationReport,
    NonexistenceCertificate,
    check_receiver,
    check_sender,
    continuation_values,
    nonexistence_certificate,
    verify_pbe,
)

__all__ = [
    "__version__",
    "MonotoneMap",
    "StateDistribution",
    "UNIFORM",
    "compose_with_quantile",
    "ConstructionError",
    "DomainError",
    "RangeError",
    "GameSpec",
    "GameSpecError",
    "RegularProfile",
    "DiscountBound",
    "RegimeVerdict",
    "ThresholdConvergence",
    "sender_threshold_value",
    "backward_step",
    "receiver_quit_value",
    "solve_finite",
    "solve_infinite",
    "stationary_receiver_value",
    "critical_discount_finite",
    "critical_discount_infinite",
    "classify",
    "threshold_convergence",
    "StrategyProfile",
    "ProfileError",
    "Playout",
    "SimulationResult",
    "from_regular",
    "play_once",
    "simulate",
    "trace_playout",
    "sender_deviation_value",
    "default_truncation",
    "BeliefInterval",
    "DeviationReport",
    "NonexistenceCertificate",
    "continuation_values",
    "check_sender",
    "check_receiver",
    "verify_pbe",
    "nonexistence_certificate",
    "TransformedGame",
    "to_uniform",
    "map_threshold",
    "solve_general",
]
