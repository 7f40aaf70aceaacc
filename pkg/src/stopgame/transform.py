"""Reduction of arbitrary-distribution games to uniform-state games.

When the per-period state is drawn from a strictly increasing continuous
CDF F instead of the uniform distribution, the change of variables
x = F(state) yields an equivalent game on uniform states with the
characteristic functions composed with the quantile function:

    f_u(x) = f(F^{-1}(x)),     g_u(x) = g(F^{-1}(x)).

Payoffs are identical play by play: drawing u uniformly and using state
F^{-1}(u) in the original game gives the same messages, actions and payoffs
as using u directly in the uniform game, provided thresholds are mapped
consistently.  A sender threshold a in original state space compares
state < a, i.e. F(state) < F(a): the matching uniform-game threshold is
F(a), and a uniform-game threshold b maps back to the original threshold
F^{-1}(b).  Receiver strategies, values and discount bounds carry over
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import (
    GameSpec,
    GameSpecError,
    RegularProfile,
    solve_finite,
    solve_infinite,
)

__all__ = ["TransformedGame", "to_uniform", "map_threshold", "solve_general"]

TO_ORIGINAL = "to-original"
TO_UNIFORM = "to-uniform"


@dataclass(frozen=True)
class TransformedGame:
    """A game paired with its uniform-state equivalent."""

    original: GameSpec
    uniform_game: GameSpec

    def threshold_to_uniform(self, alpha: float) -> float:
        """Original-space sender threshold -> uniform-game threshold F(alpha)."""
        return float(self.original.distribution.cdf_value(alpha))

    def threshold_to_original(self, beta: float) -> float:
        """Uniform-game sender threshold -> original threshold F^{-1}(beta)."""
        return float(self.original.distribution.quantile(beta))


def to_uniform(game: GameSpec) -> TransformedGame:
    """Build the uniform-state equivalent of ``game``.

    The identity transform for games that are already uniform.  Composition
    with the quantile function is closed form for power maps under a power
    CDF and falls back to a monotone table otherwise (see
    :func:`stopgame.fnspace.compose_with_quantile`).
    """
    return TransformedGame(original=game, uniform_game=game.uniformized())


def map_threshold(tg: TransformedGame, threshold: float, direction: str) -> float:
    """Map a sender threshold between the original and uniform state spaces."""
    if not (0.0 <= threshold <= 1.0):
        raise GameSpecError(f"threshold must lie in [0, 1], got {threshold!r}")
    if direction == TO_ORIGINAL:
        return tg.threshold_to_original(threshold)
    if direction == TO_UNIFORM:
        return tg.threshold_to_uniform(threshold)
    raise GameSpecError(f"direction must be '{TO_ORIGINAL}' or '{TO_UNIFORM}', got {direction!r}")


def solve_general(game: GameSpec) -> RegularProfile:
    """Regular profile of an arbitrary-distribution game, original state space.

    Solves the uniform-state equivalent and maps its thresholds back through
    the quantile function; expected values are invariant under the
    transform.
    """
    tg = to_uniform(game)
    if game.is_finite:
        uniform = solve_finite(tg.uniform_game)
    else:
        uniform = solve_infinite(tg.uniform_game)
    if game.distribution.is_uniform:
        return uniform
    thresholds = tuple(tg.threshold_to_original(b) for b in uniform.thresholds)
    return RegularProfile(
        horizon=uniform.horizon,
        thresholds=thresholds,
        sender_value=uniform.sender_value,
        receiver_value=uniform.receiver_value,
        warning=uniform.warning,
    )
