"""Profile binding rules, playouts, seeded simulation."""

import json
import math

import numpy as np
import pytest

from stopgame import (
    GameSpec,
    GameSpecError,
    MonotoneMap,
    ProfileError,
    StrategyProfile,
    default_truncation,
    from_regular,
    play_once,
    sender_deviation_value,
    simulate,
    solve_finite,
    solve_infinite,
    trace_playout,
)

F_SQUARE = MonotoneMap.power(1, 2)
G_LINEAR = MonotoneMap.power(1, 1)


def game(horizon, delta, f=F_SQUARE, g=G_LINEAR):
    return GameSpec(horizon=horizon, delta=delta, f=f, g=g)


class TestFromRegular:
    def test_three_periods(self):
        prof = from_regular(solve_finite(game(3, 0.8)))
        assert prof.sender_thresholds[0] == pytest.approx(0.58319, abs=1e-5)
        assert prof.sender_thresholds[1] == pytest.approx(0.51640, abs=1e-5)
        assert prof.sender_thresholds[2] == 0.0
        assert prof.receiver_response == ((1.0, 0.0), (1.0, 0.0), (0.0, 0.0))

    def test_stationary(self):
        prof = from_regular(solve_infinite(game(None, 0.8)))
        assert prof.sender_stationary and prof.receiver_stationary
        assert prof.sender_thresholds[0] == pytest.approx(0.63500, abs=1e-5)
        assert prof.receiver_response == ((1.0, 0.0),)

    def test_single_period(self):
        prof = from_regular(solve_finite(game(1, 0.8)))
        assert prof.sender_thresholds == (0.0,)
        g1 = game(1, 0.8)
        assert prof.is_obedient(g1) and prof.is_responsive(g1)


class TestBinding:
    def test_length_mismatch(self):
        prof = StrategyProfile.per_period([0.5, 0.0], [(1, 0), (0, 0)])
        with pytest.raises(ProfileError, match="3 sender thresholds"):
            prof.bind(game(3, 0.8))

    def test_final_threshold_must_quit(self):
        prof = StrategyProfile.per_period([0.5, 0.4], [(1, 0), (0, 0)])
        with pytest.raises(ProfileError, match="sender threshold at period|period-2 sender threshold"):
            prof.bind(game(2, 0.8))

    def test_final_response_must_quit(self):
        prof = StrategyProfile.per_period([0.5, 0.0], [(1, 0), (0.5, 0.0)])
        with pytest.raises(ProfileError, match="period-2 receiver response"):
            prof.bind(game(2, 0.8))

    def test_stationary_gets_forced_final_period(self):
        prof = StrategyProfile.stationary(0.7, 1.0, 1.0)
        b = prof.bind(game(4, 0.8))
        assert list(b.alphas) == [0.7, 0.7, 0.7, 0.0]
        assert list(b.ps) == [1.0, 1.0, 1.0, 0.0]
        assert list(b.qs) == [1.0, 1.0, 1.0, 0.0]

    def test_infinite_requires_stationary(self):
        prof = StrategyProfile.per_period([0.5, 0.0], [(1, 0), (0, 0)])
        with pytest.raises(ProfileError, match="stationary"):
            prof.bind(game(None, 0.8))

    def test_range_validation(self):
        with pytest.raises(ProfileError):
            StrategyProfile.stationary(1.5, 1.0, 0.0)
        with pytest.raises(ProfileError):
            StrategyProfile.stationary(0.5, 1.0, -0.2)
        with pytest.raises(ProfileError):
            StrategyProfile.stationary(0.5, 1.0, 0.0, tie_rule="flip")

    def test_responsiveness_flags(self):
        g2 = game(2, 0.8)
        assert StrategyProfile.stationary(0.5, 1.0, 0.0).is_responsive(g2)
        assert not StrategyProfile.stationary(0.5, 0.5, 0.5).is_responsive(g2)
        assert StrategyProfile.stationary(0.5, 1.0, 0.0).is_obedient(g2)
        assert not StrategyProfile.stationary(0.5, 0.9, 0.0).is_obedient(g2)


class TestPlayOnce:
    def test_zero_threshold_stops_immediately(self):
        prof = StrategyProfile.stationary(0.0, 1.0, 0.0)
        rng = np.random.default_rng(1)
        out = play_once(game(5, 0.8), prof, rng)
        assert out.stop_time == 1
        assert out.messages == ("quit",)
        assert out.sender_payoff == pytest.approx(out.states[0] ** 2)

    def test_never_quit_voluntarily_stops_at_horizon(self):
        prof = StrategyProfile.stationary(0.5, 1.0, 1.0)
        rng = np.random.default_rng(2)
        T = 4
        out = play_once(game(T, 0.8), prof, rng)
        assert out.stop_time == T
        assert not out.truncated
        assert out.sender_payoff == pytest.approx(0.8 ** (T - 1) * out.states[-1] ** 2)

    def test_infinite_truncation(self):
        prof = StrategyProfile.stationary(1.0, 1.0, 0.0)
        rng = np.random.default_rng(3)
        out = play_once(game(None, 1.0), prof, rng, t_max=50)
        assert out.stop_time is None
        assert out.truncated
        assert out.sender_payoff == 0.0

    def test_tie_rule(self):
        # threshold 0 with tie rule 'continue': state exactly 0 would send
        # continue; positive states send quit
        prof = StrategyProfile.stationary(0.0, 1.0, 0.0, tie_rule="continue")
        rng = np.random.default_rng(4)
        out = play_once(game(2, 0.8), prof, rng)
        assert out.messages[0] == "quit"


class TestSimulate:
    def test_rejects_zero_replications(self):
        with pytest.raises(ProfileError):
            simulate(game(2, 0.8), StrategyProfile.stationary(0.5, 1, 0), 0, seed=1)

    def test_single_replication_has_zero_stderr(self):
        res = simulate(game(2, 0.8), StrategyProfile.stationary(0.5, 1, 0), 1, seed=1)
        assert res.stderr_sender == 0.0
        assert res.stderr_receiver == 0.0

    def test_same_seed_is_identical(self):
        g = game(3, 0.9)
        prof = from_regular(solve_finite(g))
        a = simulate(g, prof, 5000, seed=42)
        b = simulate(g, prof, 5000, seed=42)
        assert a.to_dict() == b.to_dict()

    def test_chunking_is_bit_identical(self):
        g = game(None, 0.8)
        prof = from_regular(solve_infinite(g))
        full = simulate(g, prof, 10_000, seed=9)
        for chunk in (1_337, 2_500, 9_999):
            split = simulate(g, prof, 10_000, seed=9, chunk_size=chunk)
            assert split.to_dict() == full.to_dict()

    def test_finite_matches_analytic_values(self):
        g = game(2, 0.8)
        prof = solve_finite(g)
        res = simulate(g, from_regular(prof), 100_000, seed=11)
        assert abs(res.mean_receiver - prof.receiver_value) < 3 * res.stderr_receiver
        assert abs(res.mean_sender - prof.sender_value) < 3 * res.stderr_sender
        assert res.truncated_count == 0

    def test_infinite_matches_analytic_values(self):
        g = game(None, 0.8)
        prof = solve_infinite(g)
        res = simulate(g, from_regular(prof), 100_000, seed=12)
        assert abs(res.mean_sender - prof.sender_value) < 3 * res.stderr_sender
        assert abs(res.mean_receiver - prof.receiver_value) < 3 * res.stderr_receiver

    def test_geometric_stop_times(self):
        beta = 0.6
        g = game(None, 0.8)
        res = simulate(g, StrategyProfile.stationary(beta, 1, 0), 100_000, seed=13)
        n = res.replications
        for k in range(1, 9):
            p_k = beta ** (k - 1) * (1 - beta)
            observed = res.stop_time_counts.get(k, 0) / n
            stderr = math.sqrt(p_k * (1 - p_k) / n)
            assert abs(observed - p_k) < 3.5 * stderr

    def test_higher_threshold_stops_later(self):
        g = game(None, 0.8)
        means = []
        for beta in (0.3, 0.5, 0.7):
            res = simulate(g, StrategyProfile.stationary(beta, 1, 0), 20_000, seed=77)
            mean_stop = sum(t * c for t, c in res.stop_time_counts.items()) / res.replications
            means.append(mean_stop)
        assert means[0] <= means[1] <= means[2]

    def test_undiscounted_regular_never_stops(self):
        g = game(None, 1.0)
        prof = from_regular(solve_infinite(g))
        for t_max in (10, 1000):
            res = simulate(g, prof, 2000, seed=5, t_max=t_max)
            assert res.truncated_fraction == 1.0
            assert res.mean_sender == 0.0
            assert res.mean_receiver == 0.0

    def test_trace_matches_engine(self):
        g = game(None, 0.8)
        prof = from_regular(solve_infinite(g))
        n = 64
        res = simulate(g, prof, n, seed=21)
        pays = [trace_playout(g, prof, seed=21, replication=r, total=n) for r in range(n)]
        assert np.mean([p.sender_payoff for p in pays]) == pytest.approx(res.mean_sender, abs=0)
        stop_counts = {}
        for p in pays:
            if p.stop_time is not None:
                stop_counts[p.stop_time] = stop_counts.get(p.stop_time, 0) + 1
        assert stop_counts == res.stop_time_counts


class TestDefaultTruncation:
    def test_discounted(self):
        assert default_truncation(game(None, 0.3)) == math.ceil(math.log(1e-12) / math.log(0.3))

    def test_undiscounted(self):
        assert default_truncation(game(None, 1.0)) == 10_000


class TestSenderDeviationValue:
    def test_conditional_mean_against_obedient(self):
        g = game(None, 1.0)
        res = sender_deviation_value(g, eps=0.1, replications=100_000, seed=31)
        expected = (1 - 0.9**3) / 0.3  # mean of x^2 on [0.9, 1]
        assert abs(res.mean_sender - expected) < 3 * res.stderr_sender
        assert res.mean_sender > 0.81  # exceeds f(0.9)

    def test_value_increases_as_slice_shrinks(self):
        g = game(None, 1.0)
        values = [
            sender_deviation_value(g, eps=e, replications=30_000, seed=32).mean_sender
            for e in (0.2, 0.1, 0.05)
        ]
        assert values[0] < values[1] < values[2]

    def test_full_slice_always_quits(self):
        g = game(None, 1.0)
        res = sender_deviation_value(g, eps=1.0, replications=100_000, seed=33)
        assert res.stop_time_counts.get(1, 0) == res.replications
        assert abs(res.mean_sender - 1 / 3) < 3 * res.stderr_sender

    def test_rejects_discounted(self):
        with pytest.raises(GameSpecError):
            sender_deviation_value(game(None, 0.9), eps=0.1)
        with pytest.raises(GameSpecError):
            sender_deviation_value(game(5, 1.0), eps=0.1)

    def test_rejects_non_continuing_receiver(self):
        with pytest.raises(ProfileError):
            sender_deviation_value(game(None, 1.0), eps=0.1, receiver_response=(0.9, 0.0))


class TestProfileJson:
    def test_per_period_roundtrip(self):
        prof = StrategyProfile.per_period([0.5, 0.2, 0.0], [(1, 0), (0.7, 0.1), (0, 0)])
        again = StrategyProfile.from_dict(json.loads(json.dumps(prof.to_dict())))
        assert again == prof

    def test_stationary_roundtrip(self):
        prof = StrategyProfile.stationary(0.63, 1.0, 0.0)
        doc = prof.to_dict()
        assert doc["sender_thresholds"] == {"stationary": 0.63}
        assert StrategyProfile.from_dict(doc) == prof

    def test_malformed(self):
        with pytest.raises(ProfileError):
            StrategyProfile.from_dict({"receiver": []})
