"""Regular strategy profile, critical discount bounds, and regime classification.

A sender-receiver stopping game is described by a horizon (finite T or
infinite), a discount factor delta in (0, 1], two strictly increasing
characteristic functions f (sender) and g (receiver) with f(0) = g(0) = 0,
and an iid state distribution on [0, 1].  Per period a state is drawn, the
informed sender recommends continue or quit, and the uninformed receiver
stops the game or lets it run; stopping at period t in state x pays the
players delta**(t-1) * f(x) and delta**(t-1) * g(x).

The solver computes the *regular* strategy profile: the receiver obeys every
recommendation and the sender is sincere, i.e. recommends quitting exactly
when the immediate payoff beats the continuation value.  Everything reduces
to two auxiliary functions of the sender's characteristic function

    G(x) = x * f(x) + integral_x^1 f(s) ds          (value of threshold x)
    H(x) = f^{-1}( delta * G(x) )                   (backward threshold step)

Finite horizon: thresholds follow the backward recursion b_T = 0,
b_t = H(b_{t+1}), and form a strictly decreasing chain.  Infinite horizon:
the profile is stationary at the unique fixed point of H (equal to 1 when
delta = 1, in which case play never stops and the profile is not an
equilibrium).

Whether the obedient receiver is actually willing to obey depends on the
receiver's conditional quit value V(x) = (1/x) * integral_0^x g.  The
critical discount bound is the smallest d such that

    delta * V(1) >= V(first-period threshold at delta)    for all delta in [d, 1].

Above the bound the regular profile is the unique responsive equilibrium;
below the corresponding two-period bound no responsive equilibrium exists at
all ({func}`classify` reports the regime per game).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fnspace import (
    UNIFORM,
    ConstructionError,
    MonotoneMap,
    StateDistribution,
    compose_with_quantile,
)

__all__ = [
    "GameSpecError",
    "GameSpec",
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
    "UNDISCOUNTED_INFINITE_WARNING",
]

#: scan resolution for the critical discount bounds
GRID_STEP = 1e-3

#: the bracket around a bound is bisected down to this width
REFINE_WIDTH = 1e-9

#: fixed points and finite thresholds are located to this interval width
FIXED_POINT_WIDTH = 1e-13

#: slack when comparing a discount factor against a refined bound
REGIME_TOLERANCE = 1e-9

UNDISCOUNTED_INFINITE_WARNING = (
    "undiscounted infinite horizon: the regular profile has threshold 1, play "
    "never stops and both expected payoffs are 0; the profile is not an "
    "equilibrium and no responsive equilibrium with history-independent "
    "continuation values exists"
)


class GameSpecError(ValueError):
    """The game description violates the model contract."""


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A sender-receiver stopping game.

    ``horizon`` is a positive int for finite games or ``None`` for the
    infinite horizon.  ``delta = 1`` encodes period-independent payoffs.
    """

    horizon: int | None
    delta: float
    f: MonotoneMap
    g: MonotoneMap
    distribution: StateDistribution = UNIFORM
    _uniform_twin: "GameSpec | None" = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.horizon is not None:
            if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 1:
                raise GameSpecError(f"horizon must be a positive integer or None, got {self.horizon!r}")
            object.__setattr__(self, "horizon", int(self.horizon))
        d = float(self.delta)
        if not (0.0 < d <= 1.0):
            raise GameSpecError(f"discount factor must lie in (0, 1], got {self.delta!r}")
        object.__setattr__(self, "delta", d)
        if not isinstance(self.f, MonotoneMap) or not isinstance(self.g, MonotoneMap):
            raise GameSpecError("f and g must be MonotoneMap instances")
        if not isinstance(self.distribution, StateDistribution):
            raise GameSpecError("distribution must be a StateDistribution")
        if not self.distribution.is_uniform:
            twin = GameSpec(
                horizon=self.horizon,
                delta=self.delta,
                f=compose_with_quantile(self.f, self.distribution),
                g=compose_with_quantile(self.g, self.distribution),
            )
            object.__setattr__(self, "_uniform_twin", twin)

    @property
    def is_finite(self) -> bool:
        return self.horizon is not None

    def uniformized(self) -> "GameSpec":
        """The payoff-equivalent game with uniform states.

        For a non-uniform CDF F the characteristic functions are composed
        with the quantile function (f o F^{-1}, g o F^{-1}); thresholds of
        the two games are related through F, values coincide.
        """
        return self if self.distribution.is_uniform else self._uniform_twin

    def to_dict(self) -> dict:
        return {
            "horizon": "infinite" if self.horizon is None else self.horizon,
            "delta": self.delta,
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "distribution": self.distribution.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GameSpec":
        if not isinstance(data, dict):
            raise GameSpecError(f"game JSON must be an object, got {type(data).__name__}")
        missing = {"horizon", "delta", "f", "g"} - set(data)
        if missing:
            raise GameSpecError(f"game JSON is missing fields: {sorted(missing)}")
        horizon = data["horizon"]
        if isinstance(horizon, str):
            if horizon not in ("infinite", "inf"):
                raise GameSpecError(f"field 'horizon' must be a positive integer or 'infinite', got {horizon!r}")
            horizon = None
        try:
            f = MonotoneMap.from_dict(data["f"])
        except ConstructionError as exc:
            raise GameSpecError(f"field 'f': {exc}") from exc
        try:
            g = MonotoneMap.from_dict(data["g"])
        except ConstructionError as exc:
            raise GameSpecError(f"field 'g': {exc}") from exc
        dist = UNIFORM
        if "distribution" in data and data["distribution"] is not None:
            try:
                dist = StateDistribution.from_dict(data["distribution"])
            except ConstructionError as exc:
                raise GameSpecError(f"field 'distribution': {exc}") from exc
        return cls(horizon=horizon, delta=data["delta"], f=f, g=g, distribution=dist)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GameSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


@dataclass(frozen=True)
class RegularProfile:
    """The sincere-sender / obedient-receiver profile and its exact values.

    ``thresholds`` holds the per-period thresholds (first period first) for
    finite games and the single stationary threshold for infinite games.
    Values are expected payoffs evaluated at period 1.
    """

    horizon: int | None
    thresholds: tuple[float, ...]
    sender_value: float
    receiver_value: float
    warning: str | None = None

    @property
    def is_stationary(self) -> bool:
        return self.horizon is None

    @property
    def stationary_threshold(self) -> float:
        if not self.is_stationary:
            raise GameSpecError("finite-horizon profile has per-period thresholds")
        return self.thresholds[0]

    def to_dict(self) -> dict:
        out = {
            "horizon": "infinite" if self.horizon is None else self.horizon,
            "thresholds": list(self.thresholds),
            "sender_value": self.sender_value,
            "receiver_value": self.receiver_value,
        }
        if self.warning:
            out["warning"] = self.warning
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RegularProfile":
        horizon = data["horizon"]
        return cls(
            horizon=None if horizon in ("infinite", "inf", None) else int(horizon),
            thresholds=tuple(float(b) for b in data["thresholds"]),
            sender_value=float(data["sender_value"]),
            receiver_value=float(data["receiver_value"]),
            warning=data.get("warning"),
        )


@dataclass(frozen=True)
class DiscountBound:
    """A critical discount bound located by scan-and-refine.

    ``value`` is the left edge of the maximal tail [value, 1] on which the
    obedience inequality delta * V(1) >= V(threshold(delta)) held at grid
    resolution, refined by bisection.  ``sign_changes`` counts the sign
    changes of the inequality margin over the scan grid; more than one means
    the tail semantics mattered and the grid resolution bounds what we can
    assert in between.
    """

    value: float
    grid_step: float = GRID_STEP
    refine_width: float = REFINE_WIDTH
    sign_changes: int = 0

    @property
    def multiple_crossings(self) -> bool:
        return self.sign_changes > 1

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "grid_step": self.grid_step,
            "refine_width": self.refine_width,
            "sign_changes": self.sign_changes,
            "multiple_crossings": self.multiple_crossings,
        }


#: regime labels reported by :func:`classify`
REGIME_UNIQUE = "UniqueResponsivePBE"
REGIME_NONE = "NoResponsivePBE"
REGIME_INDETERMINATE = "RegularNotPBE_Indeterminate"


@dataclass(frozen=True)
class RegimeVerdict:
    """Existence regime of responsive equilibria for one game.

    ``regime == UniqueResponsivePBE`` holds exactly when the game's discount
    factor reaches ``bound_used`` (up to the refinement tolerance), except on
    the undiscounted infinite horizon where no responsive equilibrium exists
    regardless of the bound.
    """

    regime: str
    bound_used: float
    witness: str | None = None

    def to_dict(self) -> dict:
        return {"regime": self.regime, "bound_used": self.bound_used, "witness": self.witness}


@dataclass(frozen=True)
class ThresholdConvergence:
    """First-period-equivalent thresholds across horizons and their limit."""

    period: int
    horizons: tuple[int, ...]
    thresholds: tuple[float, ...]
    limit: float


# ----------------------------------------------------------------------
# auxiliary functions (array-capable)
# ----------------------------------------------------------------------

def _value_of_threshold(f: MonotoneMap, x):
    return x * f.eval(x) + f.integrate(x, 1.0)


def _step(f: MonotoneMap, delta, x):
    # delta * G(x) <= delta * f(1) <= f(1), so the inverse is always defined
    return f.inverse(delta * _value_of_threshold(f, x))


def _quit_value(g: MonotoneMap, x):
    xv = np.asarray(x, dtype=float)
    pos = np.maximum(xv, np.finfo(float).tiny)
    out = np.where(xv > 0.0, g.integrate(0.0, xv) / pos, 0.0)
    if np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return float(out)
    return out


def sender_threshold_value(game: GameSpec, x):
    """G(x) = x*f(x) + integral_x^1 f: the sender's value of threshold x.

    With an obedient receiver, a sender who uses threshold x in the current
    period and whose continuation is worth f(x) expects exactly G(x).
    """
    return _value_of_threshold(game.uniformized().f, x)


def backward_step(game: GameSpec, x, delta: float | None = None):
    """H(x) = f^{-1}(delta * G(x)): this period's threshold given next period's."""
    eff = game.uniformized()
    return _step(eff.f, game.delta if delta is None else float(delta), x)


def receiver_quit_value(game: GameSpec, x):
    """V(x) = (1/x) * integral_0^x g, with V(0) = 0.

    The receiver's expected payoff from quitting now, conditional on the
    state lying in [0, x].
    """
    return _quit_value(game.uniformized().g, x)


# ----------------------------------------------------------------------
# regular profile
# ----------------------------------------------------------------------

def _require_uniform_for_thresholds(game: GameSpec, op: str):
    if not game.distribution.is_uniform:
        raise GameSpecError(
            f"{op} returns thresholds in uniform state space only; for a "
            "non-uniform distribution use transform.solve_general, which maps "
            "thresholds back to the original states"
        )


def _finite_thresholds(f: MonotoneMap, delta, T: int):
    """Backward recursion b_T = 0, b_t = H(b_{t+1}); returns (b_1, ..., b_T).

    ``delta`` may be an array; the recursion is then run for all entries at
    once and the first-period threshold row is returned.
    """
    x = np.zeros_like(np.asarray(delta, dtype=float)) if np.ndim(delta) else 0.0
    chain = [x]
    for _ in range(T - 1):
        x = _step(f, delta, x)
        chain.append(x)
    chain.reverse()
    return chain


def solve_finite(game: GameSpec) -> RegularProfile:
    """Thresholds and exact player values of the regular profile, finite T.

    The sender's value is G(b_1); the receiver's value follows the backward
    recursion U_T = integral_0^1 g_T, U_t = b_t * U_{t+1} + integral_{b_t}^1 g_t
    with g_t = delta**(t-1) * g.
    """
    if not game.is_finite:
        raise GameSpecError("solve_finite needs a finite horizon")
    _require_uniform_for_thresholds(game, "solve_finite")
    T, d, f, g = game.horizon, game.delta, game.f, game.g
    betas = _finite_thresholds(f, d, T)
    sender = _value_of_threshold(f, betas[0])
    receiver = d ** (T - 1) * g.integrate(0.0, 1.0)
    for t in range(T - 1, 0, -1):
        receiver = betas[t - 1] * receiver + d ** (t - 1) * g.integrate(betas[t - 1], 1.0)
    return RegularProfile(
        horizon=T,
        thresholds=tuple(float(b) for b in betas),
        sender_value=float(sender),
        receiver_value=float(receiver),
    )


def _stationary_threshold(f: MonotoneMap, delta):
    """Unique fixed point of H, vectorized over ``delta``.

    H(0) > 0 and H(y) < y beyond the fixed point, so bisection on
    H(x) - x over [0, 1] converges; for delta = 1 the fixed point is 1.
    """
    scalar = np.ndim(delta) == 0
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    lo = np.zeros_like(d)
    hi = np.ones_like(d)
    while float(np.max(hi - lo)) > FIXED_POINT_WIDTH:
        mid = 0.5 * (lo + hi)
        above = _step(f, d, mid) > mid
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    beta = 0.5 * (lo + hi)
    beta = np.where(d >= 1.0, 1.0, beta)
    return float(beta[0]) if scalar else beta


def solve_infinite(game: GameSpec) -> RegularProfile:
    """Stationary threshold and exact player values, infinite horizon.

    For delta < 1 the threshold is the fixed point b of H, the sender's
    value is G(b) = f(b)/delta and the receiver's value is
    integral_b^1 g / (1 - delta*b).  For delta = 1 the threshold is 1: play
    never stops, both expected payoffs are 0, and the profile is flagged as
    not being an equilibrium.
    """
    if game.is_finite:
        raise GameSpecError("solve_infinite needs an infinite horizon")
    _require_uniform_for_thresholds(game, "solve_infinite")
    d, f, g = game.delta, game.f, game.g
    if d == 1.0:
        return RegularProfile(
            horizon=None,
            thresholds=(1.0,),
            sender_value=0.0,
            receiver_value=0.0,
            warning=UNDISCOUNTED_INFINITE_WARNING,
        )
    beta = _stationary_threshold(f, d)
    sender = _value_of_threshold(f, beta)
    receiver = g.integrate(beta, 1.0) / (1.0 - d * beta)
    return RegularProfile(
        horizon=None,
        thresholds=(float(beta),),
        sender_value=float(sender),
        receiver_value=float(receiver),
    )


def stationary_receiver_value(game: GameSpec, t: int = 1) -> float:
    """Closed-form receiver value from period t on, infinite horizon.

    U_r^t = delta**(t-1) / (1 - delta*b) * integral_b^1 g at the stationary
    threshold b.  Undefined for delta = 1 (the profile is not an equilibrium
    and play never stops); that case is rejected.
    """
    if game.is_finite:
        raise GameSpecError("stationary_receiver_value needs an infinite horizon")
    if game.delta == 1.0:
        raise GameSpecError(
            "the stationary receiver value is undefined for undiscounted "
            "payoffs: play never stops under the regular profile"
        )
    if t < 1:
        raise GameSpecError("period must be >= 1")
    eff = game.uniformized()
    beta = _stationary_threshold(eff.f, game.delta)
    return game.delta ** (t - 1) * eff.g.integrate(beta, 1.0) / (1.0 - game.delta * beta)


# ----------------------------------------------------------------------
# critical discount bounds
# ----------------------------------------------------------------------

def _scan_and_refine(margin, grid_step: float = GRID_STEP) -> DiscountBound:
    """Locate the left edge of the maximal tail on which ``margin >= 0``.

    ``margin`` maps an array (or scalar) of discount factors to the
    obedience margin delta*V(1) - V(threshold(delta)).  The grid scan finds
    the last negative-to-nonnegative crossing; bisection refines it.
    """
    n = int(round(1.0 / grid_step))
    deltas = np.arange(1, n + 1, dtype=float) * grid_step
    phi = margin(deltas)
    nonneg = phi >= 0.0
    sign_changes = int(np.count_nonzero(np.diff(nonneg)))
    if bool(np.all(nonneg)):
        return DiscountBound(value=0.0, grid_step=grid_step, sign_changes=sign_changes)
    if not bool(nonneg[-1]):
        # cannot certify any tail; mathematically unreachable for valid games
        return DiscountBound(value=1.0, grid_step=grid_step, sign_changes=sign_changes)
    last_neg = int(np.max(np.nonzero(~nonneg)[0]))
    lo = float(deltas[last_neg])
    hi = float(deltas[last_neg + 1])
    while hi - lo > REFINE_WIDTH:
        mid = 0.5 * (lo + hi)
        if float(margin(mid)) >= 0.0:
            hi = mid
        else:
            lo = mid
    return DiscountBound(value=0.5 * (lo + hi), grid_step=grid_step, sign_changes=sign_changes)


def critical_discount_finite(game: GameSpec, horizon: int | None = None) -> DiscountBound:
    """Smallest d with delta*V(1) >= V(b_1(T; delta)) for all delta in [d, 1]."""
    T = game.horizon if horizon is None else int(horizon)
    if T is None or T < 1:
        raise GameSpecError("critical_discount_finite needs a finite horizon T >= 1")
    eff = game.uniformized()
    v1 = eff.g.integrate(0.0, 1.0)

    def margin(deltas):
        beta1 = _finite_thresholds(eff.f, deltas, T)[0]
        return deltas * v1 - _quit_value(eff.g, beta1)

    return _scan_and_refine(margin)


def critical_discount_infinite(game: GameSpec) -> DiscountBound:
    """Smallest d with delta*V(1) >= V(b(delta)) for all delta in [d, 1]."""
    eff = game.uniformized()
    v1 = eff.g.integrate(0.0, 1.0)

    def margin(deltas):
        beta = _stationary_threshold(eff.f, deltas)
        return deltas * v1 - _quit_value(eff.g, beta)

    return _scan_and_refine(margin)


# ----------------------------------------------------------------------
# regime classification
# ----------------------------------------------------------------------

def _second_to_last_threshold(game: GameSpec) -> float:
    """The threshold any responsive profile forces one period before the end."""
    eff = game.uniformized()
    return eff.f.inverse(game.delta * eff.f.integrate(0.0, 1.0))


def classify(game: GameSpec) -> RegimeVerdict:
    """Existence regime of responsive equilibria for this game.

    Finite horizon: above the horizon-T bound the regular profile is the
    unique responsive equilibrium; below the two-period bound no responsive
    equilibrium exists (witnessed by the forced second-to-last threshold);
    in between the regular profile fails but existence of other responsive
    profiles is undecided.  Infinite horizon: undiscounted games have no
    responsive equilibrium among profiles with history-independent values;
    discounted games are classified against the stationary bound.
    """
    eff = game.uniformized()
    d = game.delta
    if game.is_finite:
        bound = critical_discount_finite(game)
        if d >= bound.value - REGIME_TOLERANCE:
            return RegimeVerdict(regime=REGIME_UNIQUE, bound_used=bound.value)
        if game.horizon >= 2:
            bound2 = critical_discount_finite(game, horizon=2)
            if d < bound2.value:
                alpha = _second_to_last_threshold(game)
                quit_v = _quit_value(eff.g, alpha)
                cont_v = d * eff.g.integrate(0.0, 1.0)
                if quit_v > cont_v:
                    witness = (
                        "any responsive profile forces the second-to-last "
                        f"threshold {alpha:.6g}; conditional on the continue "
                        f"message the receiver's quit value {quit_v:.6g} beats the "
                        f"continue value {cont_v:.6g}, so the receiver cannot be "
                        "kept responsive"
                    )
                    return RegimeVerdict(regime=REGIME_NONE, bound_used=bound.value, witness=witness)
                witness = (
                    "below the two-period bound, but the pointwise obedience "
                    "inequality holds at this discount factor (multiple "
                    "crossings); no certificate is issued"
                )
                return RegimeVerdict(regime=REGIME_INDETERMINATE, bound_used=bound.value, witness=witness)
        return RegimeVerdict(
            regime=REGIME_INDETERMINATE,
            bound_used=bound.value,
            witness="between the two-period bound and the horizon bound: the "
            "uniform sufficiency inequality fails at this discount factor (the "
            "deviation verifier gives the pointwise status of the regular "
            "profile); existence of responsive equilibria is undecided",
        )
    # infinite horizon
    if d == 1.0:
        return RegimeVerdict(
            regime=REGIME_NONE,
            bound_used=1.0,
            witness=UNDISCOUNTED_INFINITE_WARNING,
        )
    bound = critical_discount_infinite(game)
    if d >= bound.value - REGIME_TOLERANCE:
        return RegimeVerdict(regime=REGIME_UNIQUE, bound_used=bound.value)
    beta = _stationary_threshold(eff.f, d)
    holds = d * eff.g.integrate(0.0, 1.0) >= _quit_value(eff.g, beta)
    witness = (
        "below the stationary bound; the pointwise obedience inequality "
        + ("still holds" if holds else "fails, so the regular profile is not an equilibrium")
        + " at this discount factor; existence of other responsive profiles is undecided"
    )
    return RegimeVerdict(regime=REGIME_INDETERMINATE, bound_used=bound.value, witness=witness)


# ----------------------------------------------------------------------
# convergence across horizons
# ----------------------------------------------------------------------

def threshold_convergence(game: GameSpec, period: int = 1, max_horizon: int = 20) -> ThresholdConvergence:
    """Period-``period`` thresholds for horizons T = period..max_horizon.

    The sequence increases strictly in T and converges to the stationary
    threshold; the shift identity b_t(T) = b_1(T - t + 1) is verified on the
    way (both sides run the same backward recursion).
    """
    if period < 1 or max_horizon < period:
        raise GameSpecError("need 1 <= period <= max_horizon")
    eff = game.uniformized()
    out = []
    for T in range(period, max_horizon + 1):
        chain = _finite_thresholds(eff.f, game.delta, T)
        b_t = chain[period - 1]
        b_shift = _finite_thresholds(eff.f, game.delta, T - period + 1)[0]
        if abs(b_t - b_shift) > 1e-12:
            raise RuntimeError(
                f"threshold shift identity violated at T={T}: {b_t!r} vs {b_shift!r}"
            )
        out.append(float(b_t))
    limit = _stationary_threshold(eff.f, game.delta)
    return ThresholdConvergence(
        period=period,
        horizons=tuple(range(period, max_horizon + 1)),
        thresholds=tuple(out),
        limit=float(limit),
    )


