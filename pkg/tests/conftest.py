"""Shared generators for randomized suites."""

from __future__ import annotations

import numpy as np

from stopgame import GameSpec, MonotoneMap, StateDistribution


def random_map(rng: np.random.Generator, kinds=("power", "poly")) -> MonotoneMap:
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "power":
        return MonotoneMap.power(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.3, 3.0)))
    if kind == "poly":
        n = int(rng.integers(1, 5))
        coeffs = [0.0] + [float(c) for c in rng.uniform(0.05, 1.0, n)]
        return MonotoneMap.poly(coeffs)
    k = int(rng.integers(3, 9))
    xs = np.cumsum(rng.uniform(0.05, 1.0, k))
    xs = np.concatenate([[0.0], xs / xs[-1]])
    xs[-1] = 1.0
    ys = np.cumsum(rng.uniform(0.05, 1.0, k))
    ys = np.concatenate([[0.0], ys * float(rng.uniform(0.3, 2.0)) / ys[-1]])
    return MonotoneMap.table(np.column_stack([xs, ys]))


def random_game(
    rng: np.random.Generator,
    horizon="finite",
    max_t: int = 20,
    delta_range=(0.3, 0.99),
    kinds=("power", "poly"),
) -> GameSpec:
    if horizon == "finite":
        h = int(rng.integers(1, max_t + 1))
    elif horizon == "infinite":
        h = None
    else:
        h = horizon
    return GameSpec(
        horizon=h,
        delta=float(rng.uniform(*delta_range)),
        f=random_map(rng, kinds),
        g=random_map(rng, kinds),
    )


def power_cdf(rng: np.random.Generator) -> StateDistribution:
    k = float(rng.choice([0.5, 2.0, 3.0]))
    return StateDistribution(cdf=MonotoneMap.power(1.0, k))
