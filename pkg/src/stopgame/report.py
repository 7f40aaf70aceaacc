"""Figure rendering for the report path.

Renders the two standard diagnostics next to the delimited sweep output:
the backward threshold map H with its diagonal fixed point, and the
first-period threshold across horizons converging to the stationary
threshold.  Matplotlib is imported lazily so that the plain CLI paths stay
plot-free.
"""

from __future__ import annotations

import numpy as np

from .equilibrium import GameSpec, backward_step, threshold_convergence

__all__ = ["render_figures"]


def render_figures(game: GameSpec, out_base: str, max_horizon: int = 10) -> list[str]:
    """Write the threshold-map and convergence figures; returns file paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    conv = threshold_convergence(game, period=1, max_horizon=max_horizon)
    beta = conv.limit

    xs = np.linspace(0.0, 1.0, 400)
    hs = backward_step(game, xs)

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(xs, hs, color="black", label="backward threshold map")
    ax.plot(xs, xs, color="black", linestyle="--", linewidth=0.8, label="identity")
    ax.plot([beta], [beta], marker="o", color="black", markersize=5)
    ax.annotate(
        f"fixed point {beta:.5f}",
        xy=(beta, beta),
        xytext=(beta - 0.05, min(beta + 0.12, 0.95)),
        ha="right",
        fontsize=9,
    )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("next-period threshold")
    ax.set_ylabel("current threshold")
    ax.set_title(f"threshold map (delta = {game.delta:g})")
    ax.legend(loc="lower right", fontsize=8, frameon=False)
    fig.tight_layout()
    map_path = f"{out_base}_threshold_map.png"
    fig.savefig(map_path, dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(conv.horizons, conv.thresholds, marker="o", markersize=3, color="black",
            label="first-period threshold")
    ax.axhline(beta, color="black", linestyle=":", linewidth=0.9,
               label=f"stationary limit {beta:.5f}")
    ax.set_xlabel("horizon")
    ax.set_ylabel("threshold")
    ax.set_title(f"convergence across horizons (delta = {game.delta:g})")
    ax.legend(loc="lower right", fontsize=8, frameon=False)
    fig.tight_layout()
    conv_path = f"{out_base}_convergence.png"
    fig.savefig(conv_path, dpi=150)
    plt.close(fig)

    return [map_path, conv_path]
