"""Strategy profiles and seeded Monte Carlo playouts.

A profile pairs a threshold sender with a probabilistic receiver.  The
sender sends the message ``continue`` when the current state is below the
period's threshold and ``quit`` above it (a tie rule decides at equality);
the receiver continues with probability p after a ``continue`` message and
with probability q after a ``quit`` message.  On a finite horizon T the
rules of the game force the final period to stop: the period-T threshold is
0 and the receiver quits regardless of the message.  Profiles supplied with
explicit non-quitting final-period entries are rejected rather than
silently corrected; stationary rules are materialized with the forced final
period appended.

A playout draws an iid state per period (through the distribution's
quantile function), runs the message/action protocol, and stops at the
first quit action.  Stopping at period t in state x pays
``delta**(t-1) * f(x)`` to the sender and ``delta**(t-1) * g(x)`` to the
receiver; a play that never stops pays 0.  Infinite-horizon simulation
truncates at a horizon chosen so that the discarded discounted mass is
below 1e-12 (undiscounted games use an explicit cap and report the
truncated share).

Reproducibility: all simulation randomness comes from a counter-addressable
Philox stream keyed by the master seed.  Draw (period t, kind j, replication
r) lives at a fixed stream position independent of execution order, so
serial runs, chunked runs, and any worker split produce bit-identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .equilibrium import GameSpec, GameSpecError, RegularProfile

__all__ = [
    "ProfileError",
    "StrategyProfile",
    "Playout",
    "SimulationResult",
    "from_regular",
    "play_once",
    "simulate",
    "trace_playout",
    "sender_deviation_value",
    "default_truncation",
]

TIE_QUIT = "quit"
TIE_CONTINUE = "continue"

#: discounted tail mass below which infinite playouts are truncated
TRUNCATION_TOL = 1e-12

#: truncation cap for undiscounted infinite games
UNDISCOUNTED_T_MAX = 10_000


class ProfileError(ValueError):
    """The strategy profile violates the model contract."""


@dataclass(frozen=True)
class StrategyProfile:
    """Threshold sender plus history-independent probabilistic receiver.

    ``sender_thresholds`` and ``receiver_response`` are per-period vectors;
    the ``*_stationary`` flags mark a single entry that applies to every
    period.  Infinite-horizon profiles must be stationary on both sides.
    """

    sender_thresholds: tuple[float, ...]
    receiver_response: tuple[tuple[float, float], ...]
    sender_stationary: bool = False
    receiver_stationary: bool = False
    tie_rule: str = TIE_QUIT

    def __post_init__(self):
        if self.tie_rule not in (TIE_QUIT, TIE_CONTINUE):
            raise ProfileError(f"tie_rule must be 'quit' or 'continue', got {self.tie_rule!r}")
        if self.sender_stationary and len(self.sender_thresholds) != 1:
            raise ProfileError("a stationary sender rule is a single threshold")
        if self.receiver_stationary and len(self.receiver_response) != 1:
            raise ProfileError("a stationary receiver rule is a single (p, q) pair")
        for a in self.sender_thresholds:
            if not (0.0 <= a <= 1.0):
                raise ProfileError(f"sender threshold {a!r} outside [0, 1]")
        for p, q in self.receiver_response:
            if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
                raise ProfileError(f"receiver response ({p!r}, {q!r}) outside [0, 1]^2")

    # ------------------------------------------------------------------
    @classmethod
    def stationary(cls, threshold: float, p: float, q: float, tie_rule: str = TIE_QUIT):
        return cls(
            sender_thresholds=(float(threshold),),
            receiver_response=((float(p), float(q)),),
            sender_stationary=True,
            receiver_stationary=True,
            tie_rule=tie_rule,
        )

    @classmethod
    def per_period(
        cls,
        thresholds: Sequence[float],
        responses: Sequence[tuple[float, float]],
        tie_rule: str = TIE_QUIT,
    ):
        return cls(
            sender_thresholds=tuple(float(a) for a in thresholds),
            receiver_response=tuple((float(p), float(q)) for p, q in responses),
            tie_rule=tie_rule,
        )

    # ------------------------------------------------------------------
    def bind(self, game: GameSpec) -> "BoundProfile":
        """Materialize per-period rules for ``game``, enforcing the rules.

        Finite horizon: vectors must have length T, the period-T threshold
        must be 0 and the period-T response must be (0, 0) -- the game rules
        force a quit there, and an explicit profile claiming otherwise is
        rejected with a diagnostic.  Stationary rules are expanded with the
        forced final period appended.  Infinite horizon: both sides must be
        stationary.
        """
        if game.is_finite:
            T = game.horizon
            if self.sender_stationary:
                alphas = [self.sender_thresholds[0]] * (T - 1) + [0.0]
            else:
                if len(self.sender_thresholds) != T:
                    raise ProfileError(
                        f"finite horizon T={T} needs {T} sender thresholds, "
                        f"got {len(self.sender_thresholds)}"
                    )
                alphas = list(self.sender_thresholds)
                if alphas[-1] != 0.0:
                    raise ProfileError(
                        f"the game rules force the quit message at the final period: "
                        f"the period-{T} sender threshold must be 0, got {alphas[-1]!r}"
                    )
            if self.receiver_stationary:
                resp = [self.receiver_response[0]] * (T - 1) + [(0.0, 0.0)]
            else:
                if len(self.receiver_response) != T:
                    raise ProfileError(
                        f"finite horizon T={T} needs {T} receiver responses, "
                        f"got {len(self.receiver_response)}"
                    )
                resp = list(self.receiver_response)
                if resp[-1] != (0.0, 0.0):
                    raise ProfileError(
                        f"the game rules force the quit action at the final period: "
                        f"the period-{T} receiver response must be p=0, q=0, got {resp[-1]!r}"
                    )
            return BoundProfile(
                horizon=T,
                alphas=np.array(alphas, dtype=float),
                ps=np.array([r[0] for r in resp], dtype=float),
                qs=np.array([r[1] for r in resp], dtype=float),
                tie_quit=self.tie_rule == TIE_QUIT,
            )
        if not (self.sender_stationary and self.receiver_stationary):
            raise ProfileError("infinite-horizon profiles must be stationary on both sides")
        p, q = self.receiver_response[0]
        return BoundProfile(
            horizon=None,
            alphas=np.array([self.sender_thresholds[0]]),
            ps=np.array([p]),
            qs=np.array([q]),
            tie_quit=self.tie_rule == TIE_QUIT,
        )

    # ------------------------------------------------------------------
    def is_responsive(self, game: GameSpec) -> bool:
        """p > q at every period where the receiver has a real choice (t < T)."""
        b = self.bind(game)
        if b.horizon is None:
            return bool(b.ps[0] > b.qs[0])
        if b.horizon == 1:
            return True
        return bool(np.all(b.ps[:-1] > b.qs[:-1]))

    def is_obedient(self, game: GameSpec) -> bool:
        """p = 1 and q = 0 at every period with a real choice (t < T)."""
        b = self.bind(game)
        if b.horizon is None:
            return bool(b.ps[0] == 1.0 and b.qs[0] == 0.0)
        if b.horizon == 1:
            return True
        return bool(np.all(b.ps[:-1] == 1.0) and np.all(b.qs[:-1] == 0.0))

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        if self.sender_stationary:
            sender = {"stationary": self.sender_thresholds[0]}
        else:
            sender = list(self.sender_thresholds)
        if self.receiver_stationary:
            receiver = {"stationary": {"p": self.receiver_response[0][0], "q": self.receiver_response[0][1]}}
        else:
            receiver = [{"p": p, "q": q} for p, q in self.receiver_response]
        return {"sender_thresholds": sender, "receiver": receiver, "tie_rule": self.tie_rule}

    @classmethod
    def from_dict(cls, data: dict) -> "StrategyProfile":
        if not isinstance(data, dict):
            raise ProfileError(f"profile JSON must be an object, got {type(data).__name__}")
        missing = {"sender_thresholds", "receiver"} - set(data)
        if missing:
            raise ProfileError(f"profile JSON is missing fields: {sorted(missing)}")
        sender = data["sender_thresholds"]
        if isinstance(sender, dict):
            thresholds = (float(sender["stationary"]),)
            s_stat = True
        else:
            thresholds = tuple(float(a) for a in sender)
            s_stat = False
        receiver = data["receiver"]
        if isinstance(receiver, dict):
            pq = receiver["stationary"]
            responses = ((float(pq["p"]), float(pq["q"])),)
            r_stat = True
        else:
            responses = tuple((float(r["p"]), float(r["q"])) for r in receiver)
            r_stat = False
        return cls(
            sender_thresholds=thresholds,
            receiver_response=responses,
            sender_stationary=s_stat,
            receiver_stationary=r_stat,
            tie_rule=data.get("tie_rule", TIE_QUIT),
        )


@dataclass(frozen=True)
class BoundProfile:
    """A profile materialized against a specific game horizon."""

    horizon: int | None
    alphas: np.ndarray
    ps: np.ndarray
    qs: np.ndarray
    tie_quit: bool

    def at(self, t: int) -> tuple[float, float, float]:
        """(threshold, p, q) for period t (1-based)."""
        i = 0 if self.horizon is None else t - 1
        return float(self.alphas[i]), float(self.ps[i]), float(self.qs[i])


def from_regular(profile: RegularProfile) -> StrategyProfile:
    """The regular profile as a playable strategy profile (obedient receiver)."""
    if profile.is_stationary:
        return StrategyProfile.stationary(profile.thresholds[0], 1.0, 0.0)
    T = profile.horizon
    responses = [(1.0, 0.0)] * (T - 1) + [(0.0, 0.0)]
    return StrategyProfile.per_period(profile.thresholds, responses)


# ----------------------------------------------------------------------
# playouts
# ----------------------------------------------------------------------

def default_truncation(game: GameSpec, tol: float = TRUNCATION_TOL) -> int:
    """Horizon beyond which discounted payoffs are below ``tol``.

    For delta = 1 no such horizon exists; the undiscounted cap is returned
    and the truncated share must be read from the simulation result.
    """
    if game.delta >= 1.0:
        return UNDISCOUNTED_T_MAX
    return max(1, math.ceil(math.log(tol) / math.log(game.delta)))


@dataclass(frozen=True)
class Playout:
    """One realized play: states, messages, actions, stop time, payoffs."""

    states: tuple[float, ...]
    messages: tuple[str, ...]
    actions: tuple[str, ...]
    stop_time: int | None
    truncated: bool
    sender_payoff: float
    receiver_payoff: float

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "messages": list(self.messages),
            "actions": list(self.actions),
            "stop_time": self.stop_time,
            "truncated": self.truncated,
            "sender_payoff": self.sender_payoff,
            "receiver_payoff": self.receiver_payoff,
        }


def play_once(
    game: GameSpec,
    profile: StrategyProfile,
    rng: Generator,
    t_max: int | None = None,
) -> Playout:
    """Simulate one play, drawing two uniforms per period from ``rng``.

    Per period: a state u-draw (mapped through the distribution's quantile
    function) and an action u-draw compared against the response
    probability of the message sent.
    """
    bound = profile.bind(game)
    horizon = game.horizon if game.is_finite else (t_max or default_truncation(game))
    states: list[float] = []
    messages: list[str] = []
    actions: list[str] = []
    for t in range(1, horizon + 1):
        alpha, p, q = bound.at(t)
        u = rng.random()
        v = rng.random()
        theta = float(game.distribution.quantile(u))
        states.append(theta)
        if theta < alpha:
            msg = "continue"
        elif theta > alpha:
            msg = "quit"
        else:
            msg = "quit" if bound.tie_quit else "continue"
        messages.append(msg)
        cont_prob = p if msg == "continue" else q
        if v < cont_prob:
            actions.append("continue")
            continue
        actions.append("quit")
        disc = game.delta ** (t - 1)
        return Playout(
            states=tuple(states),
            messages=tuple(messages),
            actions=tuple(actions),
            stop_time=t,
            truncated=False,
            sender_payoff=disc * float(game.f.eval(theta)),
            receiver_payoff=disc * float(game.g.eval(theta)),
        )
    return Playout(
        states=tuple(states),
        messages=tuple(messages),
        actions=tuple(actions),
        stop_time=None,
        truncated=not game.is_finite,
        sender_payoff=0.0,
        receiver_payoff=0.0,
    )


# ----------------------------------------------------------------------
# vectorized seeded simulation
# ----------------------------------------------------------------------

def _block_slice(seed: int, block: int, block_len: int, lo: int, hi: int) -> np.ndarray:
    """Doubles [lo, hi) of block ``block`` of the Philox stream for ``seed``.

    Blocks are laid out back to back, each padded to a multiple of 4 doubles
    (one Philox counter step produces 4 doubles), so any block and any
    aligned slice of it can be reached by pure counter arithmetic.
    """
    units_per_block = (block_len + 3) // 4
    start = block * units_per_block * 4 + lo
    aligned = start - (start % 4)
    bits = Philox(seed=SeedSequence(int(seed)))
    bits.advance(aligned // 4)
    vals = Generator(bits).random(start + (hi - lo) - aligned)
    return vals[start - aligned :]


@dataclass(frozen=True)
class SimulationResult:
    """Empirical payoff estimates under a profile.

    ``stop_time_counts`` maps stopping period to playout count; plays cut at
    the truncation horizon are counted in ``truncated_count`` and contribute
    payoff 0 (their discounted mass is below the truncation tolerance for
    discounted games).
    """

    replications: int
    mean_sender: float
    mean_receiver: float
    stderr_sender: float
    stderr_receiver: float
    stop_time_counts: dict[int, int]
    truncated_count: int
    seed: int
    t_max: int

    @property
    def truncated_fraction(self) -> float:
        return self.truncated_count / self.replications

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "mean_sender": self.mean_sender,
            "mean_receiver": self.mean_receiver,
            "stderr_sender": self.stderr_sender,
            "stderr_receiver": self.stderr_receiver,
            "stop_time_counts": {str(k): v for k, v in sorted(self.stop_time_counts.items())},
            "truncated_count": self.truncated_count,
            "truncated_fraction": self.truncated_fraction,
            "seed": self.seed,
            "t_max": self.t_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationResult":
        return cls(
            replications=int(data["replications"]),
            mean_sender=float(data["mean_sender"]),
            mean_receiver=float(data["mean_receiver"]),
            stderr_sender=float(data["stderr_sender"]),
            stderr_receiver=float(data["stderr_receiver"]),
            stop_time_counts={int(k): int(v) for k, v in data["stop_time_counts"].items()},
            truncated_count=int(data["truncated_count"]),
            seed=int(data["seed"]),
            t_max=int(data["t_max"]),
        )


def _simulate_range(
    game: GameSpec,
    bound: BoundProfile,
    total: int,
    lo: int,
    hi: int,
    seed: int,
    horizon: int,
):
    """Replications [lo, hi) of a ``total``-replication run; positional draws."""
    n = hi - lo
    stop_time = np.zeros(n, dtype=np.int64)
    pay_s = np.zeros(n)
    pay_r = np.zeros(n)
    active = np.arange(n)
    tie_quit = bound.tie_quit
    for t in range(1, horizon + 1):
        if active.size == 0:
            break
        alpha, p, q = bound.at(t)
        # periods in which no active play can stop consume no draws
        if (p == 1.0 and q == 1.0) or (alpha == 1.0 and p == 1.0):
            continue
        u = _block_slice(seed, (t - 1) * 2, total, lo, hi)[active]
        theta = game.distribution.quantile(u)
        if tie_quit:
            msg_c = theta < alpha
        else:
            msg_c = theta <= alpha
        cont_prob = np.where(msg_c, p, q)
        if (0.0 < p < 1.0) or (0.0 < q < 1.0):
            v = _block_slice(seed, (t - 1) * 2 + 1, total, lo, hi)[active]
            cont = v < cont_prob
        else:
            cont = cont_prob == 1.0
        stops = ~cont
        if np.any(stops):
            idx = active[stops]
            stop_time[idx] = t
            disc = game.delta ** (t - 1)
            theta_stop = theta[stops]
            pay_s[idx] = disc * game.f.eval(theta_stop)
            pay_r[idx] = disc * game.g.eval(theta_stop)
        active = active[cont]
    return stop_time, pay_s, pay_r


def simulate(
    game: GameSpec,
    profile: StrategyProfile,
    replications: int,
    seed: int,
    t_max: int | None = None,
    chunk_size: int | None = None,
) -> SimulationResult:
    """Estimate expected payoffs under ``profile`` by seeded playouts.

    Deterministic given (seed, replications): draws are addressed by
    (period, kind, replication) in a counter-based stream, so the result is
    bit-identical for any ``chunk_size`` (the worker-split emulation) and
    any execution order.
    """
    if replications < 1:
        raise ProfileError(f"replications must be >= 1, got {replications}")
    bound = profile.bind(game)
    if game.is_finite:
        horizon = game.horizon
    else:
        horizon = t_max if t_max is not None else default_truncation(game)
    step = replications if not chunk_size else int(chunk_size)
    if step < 1:
        raise ProfileError(f"chunk_size must be >= 1, got {chunk_size}")
    parts = [
        _simulate_range(game, bound, replications, a, min(a + step, replications), seed, horizon)
        for a in range(0, replications, step)
    ]
    stop_time = np.concatenate([p[0] for p in parts])
    pay_s = np.concatenate([p[1] for p in parts])
    pay_r = np.concatenate([p[2] for p in parts])
    stopped = stop_time > 0
    counts = np.bincount(stop_time[stopped])
    stop_counts = {int(t): int(c) for t, c in enumerate(counts) if t > 0 and c > 0}
    n = replications
    return SimulationResult(
        replications=n,
        mean_sender=float(np.mean(pay_s)),
        mean_receiver=float(np.mean(pay_r)),
        stderr_sender=float(np.std(pay_s, ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        stderr_receiver=float(np.std(pay_r, ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        stop_time_counts=stop_counts,
        truncated_count=int(np.count_nonzero(~stopped)),
        seed=int(seed),
        t_max=horizon,
    )


def trace_playout(
    game: GameSpec,
    profile: StrategyProfile,
    seed: int,
    replication: int = 0,
    total: int | None = None,
    t_max: int | None = None,
) -> Playout:
    """Reconstruct the trajectory of one replication of :func:`simulate`.

    Uses the same block addressing (and the same no-draw shortcuts) as the
    vectorized engine, so the returned playout is exactly the play behind
    replication ``replication`` of a ``total``-replication run.
    """
    bound = profile.bind(game)
    if game.is_finite:
        horizon = game.horizon
    else:
        horizon = t_max if t_max is not None else default_truncation(game)
    n = total if total is not None else replication + 1
    if not (0 <= replication < n):
        raise ProfileError(f"replication {replication} outside [0, {n})")
    states: list[float] = []
    messages: list[str] = []
    actions: list[str] = []
    for t in range(1, horizon + 1):
        alpha, p, q = bound.at(t)
        if (p == 1.0 and q == 1.0) or (alpha == 1.0 and p == 1.0):
            continue
        u = float(_block_slice(seed, (t - 1) * 2, n, replication, replication + 1)[0])
        theta = float(game.distribution.quantile(u))
        states.append(theta)
        if theta < alpha:
            msg_c = True
        elif theta > alpha:
            msg_c = False
        else:
            msg_c = not bound.tie_quit
        messages.append("continue" if msg_c else "quit")
        if (0.0 < p < 1.0) or (0.0 < q < 1.0):
            v = float(_block_slice(seed, (t - 1) * 2 + 1, n, replication, replication + 1)[0])
            cont = v < (p if msg_c else q)
        else:
            cont = (p if msg_c else q) == 1.0
        actions.append("continue" if cont else "quit")
        if not cont:
            disc = game.delta ** (t - 1)
            return Playout(
                states=tuple(states),
                messages=tuple(messages),
                actions=tuple(actions),
                stop_time=t,
                truncated=False,
                sender_payoff=disc * float(game.f.eval(theta)),
                receiver_payoff=disc * float(game.g.eval(theta)),
            )
    return Playout(
        states=tuple(states),
        messages=tuple(messages),
        actions=tuple(actions),
        stop_time=None,
        truncated=not game.is_finite,
        sender_payoff=0.0,
        receiver_payoff=0.0,
    )


def sender_deviation_value(
    game: GameSpec,
    eps: float,
    receiver_response: tuple[float, float] = (1.0, 0.0),
    replications: int = 100_000,
    seed: int = 0,
    t_max: int | None = None,
) -> SimulationResult:
    """Value of the top-slice deviation on the undiscounted infinite horizon.

    The deviating sender recommends quitting exactly on the top state slice
    [1 - eps, 1].  Against a receiver who always continues on the continue
    message (p = 1), the play stops with per-period probability at least
    eps * (1 - q), so it stops eventually with probability 1 and the
    undiscounted payoff concentrates on states above 1 - eps: the value is
    at least f(1 - eps).  Only defined for period-independent payoffs.
    """
    if game.is_finite or game.delta != 1.0:
        raise GameSpecError(
            "the top-slice deviation bound applies to the undiscounted "
            "infinite horizon only (delta = 1)"
        )
    if not (0.0 < eps <= 1.0):
        raise ProfileError(f"eps must lie in (0, 1], got {eps!r}")
    p, q = receiver_response
    if p != 1.0:
        raise ProfileError(
            "the construction requires a receiver who always continues on the "
            f"continue message (p = 1), got p = {p!r}"
        )
    profile = StrategyProfile.stationary(1.0 - eps, p, q)
    return simulate(game, profile, replications, seed, t_max=t_max)
