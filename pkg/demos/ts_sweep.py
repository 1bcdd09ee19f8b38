"""Sweep the T-S plane and print the cooperation map as text.

Each cell is the replica-mean steady cooperator density; the four
quadrants of the plane correspond to the four classic two-player games
(harmony top-left, snowdrift top-right, stag-hunt bottom-left,
prisoner's dilemma bottom-right).
"""
from __future__ import annotations

import argparse
import time

from megt.evolve import SimulationConfig, sweep_ts
from megt.games import from_ts
from megt.netgen import LayerTopology, MultiplexSpec

GLYPHS = " .:-=+*#%@"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=60)
    parser.add_argument("--steps", type=int, default=5)
    parser.add_argument("--replicas", type=int, default=2)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args()

    t_values = [2.0 * i / (args.steps - 1) for i in range(args.steps)]
    s_values = [-1.0 + 2.0 * i / (args.steps - 1) for i in range(args.steps)]

    config = SimulationConfig(
        game=from_ts(1.0, 0.0),  # placeholder; the sweep substitutes each cell
        spec=MultiplexSpec(
            node_count=args.nodes,
            layer_count=2,
            topologies=[LayerTopology.sf(2)] * 2,
            homophily_sigma=1.0,
            rng_seed=args.seed,
        ),
        max_rounds=600,
        steady_window=100,
        replicas=args.replicas,
        rng_seed=args.seed,
    )

    t0 = time.time()
    grid = sweep_ts(config, t_values, s_values)
    print(f"{args.steps}x{args.steps} grid, {args.replicas} replicas each, "
          f"{time.time() - t0:.1f}s\n")

    print("rho(T,S), S decreasing downwards, T increasing rightwards:")
    header = "        " + "".join(f"T={t:4.1f} " for t in t_values)
    print(header)
    for j in reversed(range(len(s_values))):
        cells = []
        for i in range(len(t_values)):
            mu = grid.rho_mean[i, j]
            cells.append(f"{mu:.2f}{GLYPHS[min(int(mu * 10), 9)]} ")
        print(f"S={s_values[j]:+4.1f}  " + "".join(cells))


if __name__ == "__main__":
    main()
