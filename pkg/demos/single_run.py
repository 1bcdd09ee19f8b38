"""Run one evolutionary simulation and watch cooperation settle.

Snowdrift game on a two-layer scale-free multiplex; prints the density
trajectory at checkpoints and the behavioural metrics at the end.
"""
from __future__ import annotations

import argparse

import numpy as np

from megt.evolve import SimulationConfig, run
from megt.games import classify, from_ts
from megt.metrics import behaviour_stats
from megt.netgen import LayerTopology, MultiplexSpec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t", type=float, default=1.3)
    parser.add_argument("--s", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    game = from_ts(args.t, args.s)
    print(f"game: T={args.t} S={args.s} ({classify(game).name})")

    config = SimulationConfig(
        game=game,
        spec=MultiplexSpec(
            node_count=100,
            layer_count=2,
            topologies=[LayerTopology.sf(2)] * 2,
            homophily_sigma=1.0,
            rng_seed=args.seed,
        ),
        max_rounds=1500,
        rng_seed=args.seed,
    )

    result = run(config)
    traj = result.trajectory
    for idx in range(0, traj.rounds, 100):
        bar = "#" * int(40 * traj.rho[idx])
        print(f"  round {idx:4d}  rho={traj.rho[idx]:.3f} {bar}")

    print(f"converged={traj.converged} after {traj.rounds} rounds; steady rho={traj.steady_rho:.3f}")

    stats = behaviour_stats(result.state, result.network)
    rep = np.asarray(stats.reputation)
    print(f"QoI={stats.quality:.3f}; reputation spread "
          f"[{np.nanmin(rep):.2f}, {np.nanmax(rep):.2f}]")


if __name__ == "__main__":
    main()
