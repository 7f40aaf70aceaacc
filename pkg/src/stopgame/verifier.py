"""One-shot deviation oracle for threshold-sender / Markov-receiver profiles.

A profile of this class is an equilibrium exactly when no single-period
deviation helps either player, given consistent beliefs; this module makes
that check effective:

* continuation values are computed exactly by backward recursion (finite
  horizon) or from the linear stationary fixed-point equation (infinite
  horizon),
* the sender's deviation at period t and state x compares
  ``P(continue | message) * U_s(t+1) + P(quit | message) * f_t(x)`` across
  the two messages, on a grid of bin midpoints plus the exact sign-change
  state of the payoff difference (which is monotone in x), so the reported
  maximal gain is exact up to arithmetic error,
* the receiver's deviation after a message compares the continuation value
  against the quit value under the interval belief the threshold strategy
  induces: conditional on ``continue`` the state lies in [0, threshold],
  conditional on ``quit`` in [threshold, 1] (uniform on the interval in
  quantile space).  Messages a threshold never sends carry a flagged
  default belief, uniform on [0, 1].

Games with non-uniform state distributions are verified through their
uniform-state equivalent: characteristic functions are composed with the
quantile function and thresholds are mapped through the CDF, which leaves
every expected payoff unchanged.

The final period of a finite game is never checked: the rules force both
players' moves there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .equilibrium import GameSpec, GameSpecError
from .profiles import BoundProfile, ProfileError, StrategyProfile

__all__ = [
    "BeliefInterval",
    "SenderPeriodCheck",
    "ReceiverSiteCheck",
    "WorstSite",
    "DeviationReport",
    "NonexistenceCertificate",
    "continuation_values",
    "check_sender",
    "check_receiver",
    "verify_pbe",
    "nonexistence_certificate",
]

DEFAULT_BINS = 1000
DEFAULT_TOL = 1e-7

VERDICT_IS_PBE = "IsPBE"
VERDICT_NOT_PBE = "NotPBE"


@dataclass(frozen=True)
class BeliefInterval:
    """Receiver's belief about the current state after a message.

    ``off_path`` marks messages the profile sends with probability zero; the
    default belief (uniform on [0, 1]) is used there and any verdict that
    hinges on such a site depends on that choice.
    """

    message: str
    lo: float
    hi: float
    off_path: bool = False

    def to_dict(self) -> dict:
        return {"message": self.message, "support": [self.lo, self.hi], "off_path": self.off_path}


def _uniform_stage(game: GameSpec, profile: StrategyProfile):
    """(uniform-state game, bound profile with thresholds in quantile space)."""
    bound = profile.bind(game)
    eff = game.uniformized()
    if game.distribution.is_uniform:
        return eff, bound
    alphas = np.array([float(game.distribution.cdf_value(a)) for a in bound.alphas])
    return eff, BoundProfile(
        horizon=bound.horizon, alphas=alphas, ps=bound.ps, qs=bound.qs, tie_quit=bound.tie_quit
    )


def _stage_integrals(m, alpha: float) -> tuple[float, float]:
    """(integral below the threshold, integral above it)."""
    return m.integrate(0.0, alpha), m.integrate(alpha, 1.0)


def continuation_values(
    game: GameSpec, profile: StrategyProfile, periods: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Exact expected continuation payoffs (sender, receiver) per period.

    Finite horizon: arrays of length T where entry t-1 is the value from
    period t on, computed by the backward recursion

        U_t = [a*p + (1-a)*q] * U_{t+1}
              + (1-p) * integral_0^a h_t + (1-q) * integral_a^1 h_t

    with h_t = delta**(t-1) * h and the forced final period folded in (its
    bound entries are a=0, p=q=0).  Infinite horizon (stationary profile):
    the recursion becomes linear in the period-1 value and is solved in
    closed form; entry t-1 of the returned arrays is delta**(t-1) times the
    period-1 value (``periods`` controls the length, default 1).
    """
    eff, bound = _uniform_stage(game, profile)
    f, g, d = eff.f, eff.g, game.delta
    if bound.horizon is not None:
        T = bound.horizon
        us = np.zeros(T)
        ur = np.zeros(T)
        next_s = 0.0
        next_r = 0.0
        for t in range(T, 0, -1):
            a, p, q = bound.at(t)
            cont = a * p + (1.0 - a) * q
            disc = d ** (t - 1)
            f_lo, f_hi = _stage_integrals(f, a)
            g_lo, g_hi = _stage_integrals(g, a)
            next_s = cont * next_s + disc * ((1.0 - p) * f_lo + (1.0 - q) * f_hi)
            next_r = cont * next_r + disc * ((1.0 - p) * g_lo + (1.0 - q) * g_hi)
            us[t - 1] = next_s
            ur[t - 1] = next_r
        return us, ur
    a, p, q = bound.at(1)
    cont = a * p + (1.0 - a) * q
    f_lo, f_hi = _stage_integrals(f, a)
    g_lo, g_hi = _stage_integrals(g, a)
    quit_s = (1.0 - p) * f_lo + (1.0 - q) * f_hi
    quit_r = (1.0 - p) * g_lo + (1.0 - q) * g_hi
    denom = 1.0 - d * cont
    if denom <= 0.0:
        # delta = 1 and sure continuation: play never stops, values are 0
        base_s = base_r = 0.0
    else:
        base_s = quit_s / denom
        base_r = quit_r / denom
    n = 1 if periods is None else int(periods)
    scale = d ** np.arange(n)
    return base_s * scale, base_r * scale


@dataclass(frozen=True)
class SenderPeriodCheck:
    """Deviation gains of the sender at one period, over a state grid.

    ``states`` are bin midpoints in quantile space; ``gaps`` the payoff a
    one-period message deviation would gain at each.  ``max_gap`` includes
    the exact supremum at the prescribed threshold (the payoff difference
    between the messages is monotone in the state, so the largest gain sits
    at the edge of the wrongly-labelled band).
    """

    period: int
    states: np.ndarray
    gaps: np.ndarray
    max_gap: float
    worst_state: float
    prescribed_threshold: float
    sincere_threshold: float

    def to_dict(self, include_grid: bool = True) -> dict:
        out = {
            "period": self.period,
            "max_gap": self.max_gap,
            "worst_state": self.worst_state,
            "prescribed_threshold": self.prescribed_threshold,
            "sincere_threshold": self.sincere_threshold,
        }
        if include_grid:
            out["states"] = [float(x) for x in self.states]
            out["gaps"] = [float(x) for x in self.gaps]
        return out


@dataclass(frozen=True)
class ReceiverSiteCheck:
    """Deviation gain of the receiver after one message at one period."""

    period: int
    belief: BeliefInterval
    quit_value: float
    continue_value: float
    prescribed_value: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "belief": self.belief.to_dict(),
            "quit_value": self.quit_value,
            "continue_value": self.continue_value,
            "prescribed_value": self.prescribed_value,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class WorstSite:
    period: int
    player: str
    site: str

    def to_dict(self) -> dict:
        return {"period": self.period, "player": self.player, "site": self.site}


def _checked_periods(bound: BoundProfile) -> Iterable[int]:
    """Periods with a real choice: t < T finite; the representative period 1
    for stationary infinite profiles (later periods scale by delta**(t-1))."""
    if bound.horizon is None:
        return (1,)
    return range(1, bound.horizon)


def _sender_checks(game, eff, bound, us, bins: int) -> list[SenderPeriodCheck]:
    f, d = eff.f, game.delta
    mids = (np.arange(bins) + 0.5) / bins
    out = []
    for t in _checked_periods(bound):
        a, p, q = bound.at(t)
        u_next = d * us[0] if bound.horizon is None else us[t]
        disc = d ** (t - 1)
        fx = disc * f.eval(mids)
        pay_c = p * u_next + (1.0 - p) * fx
        pay_q = q * u_next + (1.0 - q) * fx
        prescribed_c = mids < a if bound.tie_quit else mids <= a
        gaps = np.where(prescribed_c, pay_q - pay_c, pay_c - pay_q)
        gaps = np.maximum(gaps, 0.0)
        # exact supremum: the payoff difference between the messages changes
        # sign at the sincere threshold; the wrong band's worst state is the
        # prescribed threshold itself
        sincere = float(f.inverse(min(u_next / disc, f.value_at_one())))
        edge_gap = abs(p - q) * abs(u_next - disc * float(f.eval(a)))
        grid_max = float(np.max(gaps)) if bins else 0.0
        if edge_gap > grid_max:
            max_gap, worst = edge_gap, float(a)
        else:
            max_gap, worst = grid_max, float(mids[int(np.argmax(gaps))])
        if p == q:
            max_gap, worst = 0.0, float(a)
            gaps = np.zeros_like(gaps)
        out.append(
            SenderPeriodCheck(
                period=t,
                states=mids,
                gaps=gaps,
                max_gap=max_gap,
                worst_state=worst,
                prescribed_threshold=float(a),
                sincere_threshold=sincere,
            )
        )
    return out


def _receiver_checks(game, eff, bound, ur) -> list[ReceiverSiteCheck]:
    g, d = eff.g, game.delta
    out = []
    for t in _checked_periods(bound):
        a, p, q = bound.at(t)
        u_next = d * ur[0] if bound.horizon is None else ur[t]
        disc = d ** (t - 1)
        for message, prob, resp in (("continue", a, p), ("quit", 1.0 - a, q)):
            if prob > 0.0:
                lo, hi = (0.0, a) if message == "continue" else (a, 1.0)
                belief = BeliefInterval(message=message, lo=lo, hi=hi)
            else:
                belief = BeliefInterval(message=message, lo=0.0, hi=1.0, off_path=True)
                lo, hi = 0.0, 1.0
            quit_value = disc * g.integrate(lo, hi) / (hi - lo)
            prescribed = resp * u_next + (1.0 - resp) * quit_value
            gap = max(quit_value, u_next) - prescribed
            out.append(
                ReceiverSiteCheck(
                    period=t,
                    belief=belief,
                    quit_value=float(quit_value),
                    continue_value=float(u_next),
                    prescribed_value=float(prescribed),
                    gap=float(max(gap, 0.0)),
                )
            )
    return out


@dataclass(frozen=True)
class DeviationReport:
    """All one-shot deviation gains of a profile, and the verdict.

    Gaps are nonnegative by construction (best response value minus the
    prescribed behavior's value).  The verdict is ``IsPBE`` exactly when the
    largest gap is at most ``tol``; the worst site is reported with ties
    broken by lowest period, sender before receiver, lowest state /
    continue before quit.
    """

    sender: tuple[SenderPeriodCheck, ...]
    receiver: tuple[ReceiverSiteCheck, ...]
    max_gap: float
    worst_site: WorstSite | None
    verdict: str
    tol: float
    bins: int
    off_path_dependent: bool

    @property
    def is_pbe(self) -> bool:
        return self.verdict == VERDICT_IS_PBE

    def to_dict(self, include_grids: bool = False) -> dict:
        return {
            "verdict": self.verdict,
            "max_gap": self.max_gap,
            "worst_site": self.worst_site.to_dict() if self.worst_site else None,
            "tol": self.tol,
            "bins": self.bins,
            "off_path_dependent": self.off_path_dependent,
            "sender": [c.to_dict(include_grid=include_grids) for c in self.sender],
            "receiver": [c.to_dict() for c in self.receiver],
        }

    def table(self) -> str:
        """Human-readable per-period summary."""
        lines = [
            f"verdict: {self.verdict}   max gap: {self.max_gap:.3e}   tol: {self.tol:.1e}",
        ]
        if self.worst_site:
            w = self.worst_site
            lines.append(f"worst site: period {w.period}, {w.player}, {w.site}")
        if self.off_path_dependent:
            lines.append("note: includes sites after zero-probability messages (default belief)")
        lines.append(f"{'t':>4} {'sender max gap':>16} {'recv continue gap':>18} {'recv quit gap':>15}")
        recv = {(c.period, c.belief.message): c for c in self.receiver}
        for chk in self.sender:
            rc = recv.get((chk.period, "continue"))
            rq = recv.get((chk.period, "quit"))
            lines.append(
                f"{chk.period:>4} {chk.max_gap:>16.3e} "
                f"{(rc.gap if rc else 0.0):>18.3e} {(rq.gap if rq else 0.0):>15.3e}"
            )
        return "\n".join(lines)


def verify_pbe(
    game: GameSpec,
    profile: StrategyProfile,
    bins: int = DEFAULT_BINS,
    tol: float = DEFAULT_TOL,
) -> DeviationReport:
    """Check every one-shot deviation of a profile; verdict at tolerance ``tol``.

    Valid for finite horizons and for discounted infinite horizons (the
    one-shot reduction needs the discounted tail to vanish).  Undiscounted
    infinite games are rejected: no responsive equilibrium with
    history-independent continuation values exists there, and the check
    itself would be unsound.
    """
    if bins < 2:
        raise ProfileError(f"bins must be >= 2, got {bins}")
    if not game.is_finite and game.delta == 1.0:
        raise GameSpecError(
            "one-shot deviation checking needs a finite horizon or discounting; "
            "the undiscounted infinite game admits no responsive equilibrium "
            "with history-independent values (see the regime classifier)"
        )
    eff, bound = _uniform_stage(game, profile)
    us, ur = continuation_values(game, profile)
    sender = _sender_checks(game, eff, bound, us, bins)
    receiver = _receiver_checks(game, eff, bound, ur)

    max_gap = 0.0
    worst: WorstSite | None = None
    for chk in sender:
        if chk.max_gap > max_gap:
            max_gap = chk.max_gap
            worst = WorstSite(period=chk.period, player="sender", site=f"state {chk.worst_state:.6g}")
    for chk in receiver:
        if chk.gap > max_gap:
            max_gap = chk.gap
            worst = WorstSite(period=chk.period, player="receiver", site=f"message {chk.belief.message}")
    verdict = VERDICT_IS_PBE if max_gap <= tol else VERDICT_NOT_PBE
    off_path = any(c.belief.off_path and c.gap > tol for c in receiver)
    return DeviationReport(
        sender=tuple(sender),
        receiver=tuple(receiver),
        max_gap=float(max_gap),
        worst_site=worst,
        verdict=verdict,
        tol=tol,
        bins=bins,
        off_path_dependent=off_path,
    )


def check_sender(
    game: GameSpec, profile: StrategyProfile, bins: int = DEFAULT_BINS
) -> list[SenderPeriodCheck]:
    """Sender half of the deviation report."""
    if bins < 2:
        raise ProfileError(f"bins must be >= 2, got {bins}")
    eff, bound = _uniform_stage(game, profile)
    us, _ = continuation_values(game, profile)
    return _sender_checks(game, eff, bound, us, bins)


def check_receiver(game: GameSpec, profile: StrategyProfile) -> list[ReceiverSiteCheck]:
    """Receiver half of the deviation report."""
    eff, bound = _uniform_stage(game, profile)
    _, ur = continuation_values(game, profile)
    return _receiver_checks(game, eff, bound, ur)


@dataclass(frozen=True)
class NonexistenceCertificate:
    """Witness that no responsive profile of a finite game is an equilibrium.

    Any responsive receiver forces the sincere threshold
    ``f^{-1}(delta * integral_0^1 f)`` one period before the end.  When the
    receiver's quit value conditional on the continue message at that
    threshold strictly beats the discounted unconditional continue value,
    obedience after the continue message is impossible, contradicting
    responsiveness.
    """

    delta: float
    threshold: float
    quit_value: float
    continue_value: float

    @property
    def margin(self) -> float:
        return self.quit_value - self.continue_value

    def summary(self) -> str:
        return (
            f"forced second-to-last threshold {self.threshold:.6g}: quit value "
            f"{self.quit_value:.6g} beats continue value {self.continue_value:.6g} "
            f"after the continue message, so no responsive profile survives at "
            f"delta = {self.delta:.6g}"
        )

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "threshold": self.threshold,
            "quit_value": self.quit_value,
            "continue_value": self.continue_value,
            "margin": self.margin,
        }


def nonexistence_certificate(
    game: GameSpec, delta: float | None = None
) -> NonexistenceCertificate | None:
    """Certificate that no responsive equilibrium exists, or None (no claim).

    Requires a finite horizon T >= 2 and a discount factor in (0, 1).  The
    check is pointwise: the certificate is emitted exactly when the quit
    value at the forced second-to-last threshold strictly beats the
    discounted continue value.
    """
    if not game.is_finite or game.horizon < 2:
        raise GameSpecError("the non-existence certificate needs a finite horizon T >= 2")
    d = game.delta if delta is None else float(delta)
    if not (0.0 < d < 1.0):
        raise GameSpecError(f"the certificate construction needs delta in (0, 1), got {d!r}")
    eff = game.uniformized()
    alpha = float(eff.f.inverse(d * eff.f.integrate(0.0, 1.0)))
    quit_value = float(eff.g.integrate(0.0, alpha) / alpha)
    continue_value = float(d * eff.g.integrate(0.0, 1.0))
    if quit_value > continue_value:
        return NonexistenceCertificate(
            delta=d, threshold=alpha, quit_value=quit_value, continue_value=continue_value
        )
    return None
