"""Asynchronous Monte Carlo strategy evolution on a multiplex.

One round consists of (a) accumulating every player's payoff on every
layer from its current strategies and link weights, (b) N*M elementary
imitation steps, each picking a random (node, layer), a random neighbour
on that layer, and adopting the neighbour's strategy with a homophily-
and coupling-scaled Fermi probability, and (c) crediting each
still-cooperating (node, layer) slot with its degree for the
behavioural-honesty bookkeeping.  Payoffs are frozen at the start of the
round; strategies update immediately within the round.

A run iterates rounds until the sliding-window mean of the cooperator
density stops moving, an absorbing state (density exactly 0 or 1) is
reached, or a round budget is exhausted.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .comm import Communicability, ScalingBounds, ScalingTable, communicability
from .games import COOPERATE, PayoffMatrix, from_ts
from .netgen import MultiplexNetwork, MultiplexSpec, build_multiplex

__all__ = [
    "DISTANCE_FLOOR",
    "DEFAULT_INTERLAYER_STRENGTH",
    "SimulationConfig",
    "SimulationState",
    "Trajectory",
    "RunResult",
    "GridResult",
    "init_state",
    "accumulate_payoffs",
    "fermi_probability",
    "RoundEngine",
    "mc_round",
    "run",
    "run_replicas",
    "run_replicas_parallel",
    "sweep_ts",
    "sweep_ts_parallel",
    "density",
    "write_trajectory_csv",
    "write_grid_csv",
    "write_state_text",
    "read_state_text",
]

# social distances below this floor behave like the floor in the Fermi
# denominator, so indistinguishable pairs give near-deterministic
# imitation instead of a division blow-up
DISTANCE_FLOOR = 1e-6

DEFAULT_INTERLAYER_STRENGTH = 0.5

# math.exp overflows just above 709; beyond this the probability has
# saturated to 0 or to the scaling factor anyway
_EXP_CLAMP = 700.0


def fermi_probability(payoff_self: float, payoff_other: float,
                      distance: float, selection_intensity: float,
                      scaling: float = 1.0) -> float:
    """Probability that a player adopts a neighbour's strategy.

    ``scaling / (1 + exp((payoff_self - payoff_other) / (d * kappa)))``
    with ``d = max(distance, DISTANCE_FLOOR)``.  Equal payoffs give
    exactly ``scaling / 2``; a socially closer pair (smaller distance)
    sharpens the comparison in both directions.
    """
    if selection_intensity <= 0:
        raise ValueError(
            f"selection_intensity must be > 0, got {selection_intensity}")
    x = (payoff_self - payoff_other) / (
        max(distance, DISTANCE_FLOOR) * selection_intensity)
    if x > _EXP_CLAMP:
        return 0.0
    if x < -_EXP_CLAMP:
        return scaling
    return scaling / (1.0 + math.exp(x))


@dataclass
class SimulationConfig:
    """Inputs of one evolutionary run (or replica set).

    Exactly one of ``spec`` / ``network`` must be given.  With a spec,
    every replica realises its own network from a spawned seed, so
    replica averages also average over topology and homophily draws;
    with a prebuilt network all replicas share it and only the dynamics
    seed varies.  ``interlayer_strength`` of None defers to the spec's
    value (or 0.5 for a prebuilt network).
    """

    game: PayoffMatrix
    spec: MultiplexSpec | None = None
    network: MultiplexNetwork | None = None
    selection_intensity: float = 0.1
    scaling_bounds: ScalingBounds = field(default_factory=ScalingBounds)
    interlayer_strength: float | None = None
    initial_coop_fraction: float = 0.5
    payoff_weights: str = "weighted"
    max_rounds: int = 5000
    steady_window: int = 200
    steady_tolerance: float = 1e-3
    replicas: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if (self.spec is None) == (self.network is None):
            raise ValueError("exactly one of spec/network must be provided")
        if not 0.0 <= self.initial_coop_fraction <= 1.0:
            raise ValueError(
                f"initial_coop_fraction must lie in [0, 1], "
                f"got {self.initial_coop_fraction}")
        if self.selection_intensity <= 0:
            raise ValueError(
                f"selection_intensity must be > 0, "
                f"got {self.selection_intensity}")
        if self.payoff_weights not in ("weighted", "binary"):
            raise ValueError(
                f"payoff_weights must be 'weighted' or 'binary', "
                f"got {self.payoff_weights!r}")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.steady_window < 1:
            raise ValueError(
                f"steady_window must be >= 1, got {self.steady_window}")
        if self.max_rounds < self.steady_window:
            raise ValueError(
                f"max_rounds ({self.max_rounds}) must be >= steady_window "
                f"({self.steady_window})")
        if self.steady_tolerance <= 0:
            raise ValueError(
                f"steady_tolerance must be > 0, got {self.steady_tolerance}")
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")

    def resolve_interlayer_strength(self) -> float:
        if self.interlayer_strength is not None:
            return self.interlayer_strength
        if self.spec is not None:
            return self.spec.interlayer_strength
        return DEFAULT_INTERLAYER_STRENGTH


@dataclass
class SimulationState:
    """Mutable per-run state: (M, N) strategy and payoff tables, the
    completed-round counter, the cumulative cooperative-interaction
    counter per node, and the dynamics RNG."""

    strategies: np.ndarray
    payoffs: np.ndarray
    round_index: int
    coop_count: np.ndarray
    rng: np.random.Generator


@dataclass
class Trajectory:
    """Cooperator density per round; ``rho[0]`` is the initial state and
    ``rho[k]`` the density after round k."""

    rho: list[float]
    steady_rho: float
    converged: bool

    @property
    def rounds(self) -> int:
        return len(self.rho) - 1


@dataclass
class RunResult:
    trajectory: Trajectory
    state: SimulationState
    network: MultiplexNetwork


def init_state(network: MultiplexNetwork, initial_coop_fraction: float,
               rng: np.random.Generator) -> SimulationState:
    """Fresh state: each (node, layer) cooperates independently with the
    given probability; payoffs and counters start at zero."""
    m, n = network.layer_count, network.node_count
    strategies = (rng.random((m, n)) < initial_coop_fraction).astype(np.int8)
    return SimulationState(strategies=strategies,
                           payoffs=np.zeros((m, n)),
                           round_index=0,
                           coop_count=np.zeros(n, dtype=np.int64),
                           rng=rng)


def accumulate_payoffs(state: SimulationState, network: MultiplexNetwork,
                       game: PayoffMatrix, payoff_weights: str = "weighted"
                       ) -> np.ndarray:
    """Per-(layer, node) payoff sums against all layer neighbours.

    Each edge contributes ``w_ij * payoff(s_i, s_j)``; the ``binary``
    mode replaces the link weights by the bare adjacency.  Isolated
    slots get 0.  The result is also written into ``state.payoffs``.
    """
    m, n = state.strategies.shape
    out = np.zeros((m, n))
    for alpha in range(m):
        coupling = (network.weights[alpha] if payoff_weights == "weighted"
                    else network.adjacency[alpha].astype(float))
        is_coop = (state.strategies[alpha] == COOPERATE)
        vs_coop = np.where(is_coop, game.reward, game.temptation)
        vs_defect = np.where(is_coop, game.sucker, game.punishment)
        coop_mass = coupling @ is_coop.astype(float)
        total_mass = coupling.sum(axis=1)
        out[alpha] = vs_coop * coop_mass + vs_defect * (total_mass - coop_mass)
    state.payoffs = out
    return out


class RoundEngine:
    """Everything static for a run, laid out for the inner loop.

    Neighbour lists, floored inverse Fermi denominators, cross-layer
    communicability slices and per-slot degrees are all precomputed as
    plain Python lists; one Monte Carlo round then runs in pure Python
    with three bulk RNG draws, which on a single core beats any
    per-step numpy dispatch by a wide margin.
    """

    def __init__(self, network: MultiplexNetwork, game: PayoffMatrix,
                 comm: Communicability, config: SimulationConfig):
        self.network = network
        self.game = game
        self.config = config
        self.node_count = network.node_count
        self.layer_count = network.layer_count
        self.slot_count = self.node_count * self.layer_count
        self.table = ScalingTable(network, comm)
        self.span = config.scaling_bounds.span
        kappa = config.selection_intensity
        inv = 1.0 / (np.maximum(network.delta, DISTANCE_FLOOR) * kappa)
        self._inv_scale: list[list[float]] = inv.tolist()
        nbrs = network.neighbour_lists()
        self._nbr_flat: list[list[int]] = [
            nbrs[alpha][i] for alpha in range(self.layer_count)
            for i in range(self.node_count)]
        self._has_isolated = any(not lst for lst in self._nbr_flat)
        self._layer_degrees = network.layer_degrees()

    def round(self, state: SimulationState) -> float:
        """Advance one full Monte Carlo round in place; returns the
        cooperator density after the round."""
        n, nm = self.node_count, self.slot_count
        payoffs = accumulate_payoffs(state, self.network, self.game,
                                     self.config.payoff_weights)
        pay: list[list[float]] = payoffs.tolist()
        rng = state.rng
        picks = rng.integers(0, nm, size=nm).tolist()
        u_neighbour = rng.random(nm).tolist()
        u_adopt = rng.random(nm).tolist()
        strategies: list[int] = state.strategies.reshape(-1).tolist()
        coop_total = sum(strategies)
        nbr_flat = self._nbr_flat
        inv_scale = self._inv_scale
        cross_index = self.table.cross_index
        cross_value = self.table.cross_value
        denominator = self.table.denominator
        span = self.span
        exp = math.exp
        for t in range(nm):
            flat = picks[t]
            if self._has_isolated:
                while not nbr_flat[flat]:
                    flat = int(rng.integers(nm))
            neighbours = nbr_flat[flat]
            alpha, i = divmod(flat, n)
            j = neighbours[int(u_neighbour[t] * len(neighbours))]
            own = strategies[flat]
            other = strategies[alpha * n + j]
            if own == other:
                continue  # adoption would be a no-op
            x = (pay[alpha][i] - pay[alpha][j]) * inv_scale[i][j]
            if x > _EXP_CLAMP:
                continue  # saturated at probability 0
            den = denominator[flat]
            if den > 0.0:
                num = 0.0
                for k, g in zip(cross_index[flat], cross_value[flat]):
                    if strategies[k] == own:
                        num += g
                scaling = 1.0 - span * (num / den)
            else:
                scaling = 1.0
            if x < -_EXP_CLAMP:
                prob = scaling
            else:
                prob = scaling / (1.0 + exp(x))
            if u_adopt[t] < prob:
                strategies[flat] = other
                coop_total += other - own
        state.strategies = np.asarray(strategies, dtype=np.int8).reshape(
            self.layer_count, n)
        state.coop_count += (
            (state.strategies == COOPERATE) * self._layer_degrees
        ).sum(axis=0)
        state.round_index += 1
        return coop_total / nm


def mc_round(state: SimulationState, engine: RoundEngine) -> float:
    """One asynchronous Monte Carlo round (see RoundEngine.round)."""
    return engine.round(state)


def _dynamics_rng(config: SimulationConfig, cell_index: int,
                  replica_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(
        config.rng_seed, spawn_key=(cell_index, replica_index, 1)))


def _replica_network(config: SimulationConfig, cell_index: int,
                     replica_index: int) -> MultiplexNetwork:
    if config.network is not None:
        return config.network
    seed_seq = np.random.SeedSequence(
        config.rng_seed, spawn_key=(cell_index, replica_index, 0))
    child_seed = int(seed_seq.generate_state(1, np.uint64)[0])
    spec = dataclasses.replace(config.spec, rng_seed=child_seed)
    return build_multiplex(spec)


def run(config: SimulationConfig, *, cell_index: int = 0,
        replica_index: int = 0, on_round=None) -> RunResult:
    """Execute one simulation to steady state.

    Stops when the mean density over the last ``steady_window`` rounds
    differs from the mean over the window before it by less than
    ``steady_tolerance``, when the state is absorbing (density exactly
    0 or 1 cannot change under imitation, so waiting out the window
    would be pure waste), or after ``max_rounds`` rounds, whichever
    comes first.  ``steady_rho`` is the mean over the final window (the
    exact density, for absorbing exits).

    ``on_round(round_index, state)``, if given, is called on the initial
    state and after every round; the equilibrium tracker hooks in here.
    The same (config, cell_index, replica_index) triple reproduces the
    trajectory bit for bit.
    """
    network = _replica_network(config, cell_index, replica_index)
    comm = communicability(network, config.resolve_interlayer_strength())
    engine = RoundEngine(network, config.game, comm, config)
    rng = _dynamics_rng(config, cell_index, replica_index)
    state = init_state(network, config.initial_coop_fraction, rng)
    nm = engine.slot_count
    rho = [float((state.strategies == COOPERATE).sum() / nm)]
    cumulative = [0.0, rho[0]]
    if on_round is not None:
        on_round(0, state)
    window = config.steady_window
    converged = rho[0] in (0.0, 1.0)
    while not converged and state.round_index < config.max_rounds:
        value = engine.round(state)
        rho.append(value)
        cumulative.append(cumulative[-1] + value)
        if on_round is not None:
            on_round(state.round_index, state)
        if value == 0.0 or value == 1.0:
            converged = True
            break
        rounds = len(rho) - 1
        if rounds >= 2 * window:
            recent = (cumulative[-1] - cumulative[-1 - window]) / window
            previous = (cumulative[-1 - window]
                        - cumulative[-1 - 2 * window]) / window
            if abs(recent - previous) < config.steady_tolerance:
                converged = True
    if rho[-1] in (0.0, 1.0):
        steady = rho[-1]
    else:
        tail = min(window, len(rho))
        steady = (cumulative[-1] - cumulative[-1 - tail]) / tail
    trajectory = Trajectory(rho=rho, steady_rho=steady, converged=converged)
    return RunResult(trajectory=trajectory, state=state, network=network)


def run_replicas(config: SimulationConfig, *, cell_index: int = 0,
                 on_round=None) -> list[RunResult]:
    """All replicas of a config, in replica order.

    Each replica's seeds derive from (cell_index, replica_index) alone,
    so results are independent of execution order.
    """
    return [run(config, cell_index=cell_index, replica_index=r,
                on_round=on_round)
            for r in range(config.replicas)]


def density(state: SimulationState) -> float:
    """Fraction of (node, layer) slots currently cooperating."""
    return float((state.strategies == COOPERATE).mean())


@dataclass
class GridResult:
    """Replica-averaged steady densities over a T-S grid (row-major:
    temptation outer, sucker inner)."""

    t_values: list[float]
    s_values: list[float]
    rho_mean: np.ndarray
    rho_std: np.ndarray
    replicas: int

    def rows(self):
        for it, t in enumerate(self.t_values):
            for js, s in enumerate(self.s_values):
                yield t, s, self.rho_mean[it, js], self.rho_std[it, js]


def sweep_ts(config: SimulationConfig, t_values, s_values) -> GridResult:
    """Replica-averaged steady density across a grid of T-S games.

    The cell at (t_index, s_index) uses cell seeds spawned from its
    row-major index, so any execution order (or a resumed sweep) yields
    identical numbers.  Standard deviation is the population std over
    replicas.
    """
    t_values = [float(t) for t in t_values]
    s_values = [float(s) for s in s_values]
    mean = np.zeros((len(t_values), len(s_values)))
    std = np.zeros_like(mean)
    for it, t in enumerate(t_values):
        for js, s in enumerate(s_values):
            cell = it * len(s_values) + js
            cell_config = dataclasses.replace(config, game=from_ts(t, s))
            results = run_replicas(cell_config, cell_index=cell)
            steadies = [r.trajectory.steady_rho for r in results]
            mean[it, js] = np.mean(steadies)
            std[it, js] = np.std(steadies)
    return GridResult(t_values=t_values, s_values=s_values,
                      rho_mean=mean, rho_std=std, replicas=config.replicas)


def write_state_text(state: SimulationState, path) -> None:
    """Readable final-state snapshot.

    Line 1: ``state v1 N M round``.  Then one ``layer <alpha> <CD...>``
    line per layer (node-indexed strategy string), and a final
    ``coop <n0> <n1> ...`` line with the cumulative per-node
    cooperative-interaction counters.
    """
    m, n = state.strategies.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"state v1 {n} {m} {state.round_index}\n")
        for alpha in range(m):
            symbols = "".join("C" if s == COOPERATE else "D"
                              for s in state.strategies[alpha])
            fh.write(f"layer {alpha} {symbols}\n")
        fh.write("coop " + " ".join(str(int(v)) for v in state.coop_count)
                 + "\n")


def read_state_text(path) -> SimulationState:
    """Parse a snapshot back (payoffs zeroed, RNG unset)."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split()
    if len(header) != 5 or header[0] != "state" or header[1] != "v1":
        raise ValueError(f"{path}: bad state header {lines[0]!r}")
    n, m, round_index = int(header[2]), int(header[3]), int(header[4])
    strategies = np.zeros((m, n), dtype=np.int8)
    coop = np.zeros(n, dtype=np.int64)
    for line in lines[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "layer":
            alpha, symbols = int(parts[1]), parts[2]
            if len(symbols) != n:
                raise ValueError(f"{path}: layer {alpha} has "
                                 f"{len(symbols)} strategies, expected {n}")
            strategies[alpha] = [1 if ch == "C" else 0 for ch in symbols]
        elif parts[0] == "coop":
            coop = np.array([int(v) for v in parts[1:]], dtype=np.int64)
        else:
            raise ValueError(f"{path}: unexpected line {line!r}")
    return SimulationState(strategies=strategies, payoffs=np.zeros((m, n)),
                           round_index=round_index, coop_count=coop,
                           rng=None)


def _replica_task(payload):
    config, cell_index, replica_index = payload
    return replica_index, run(config, cell_index=cell_index,
                              replica_index=replica_index)


def run_replicas_parallel(config: SimulationConfig, *, cell_index: int = 0,
                          jobs: int = 1) -> list[RunResult]:
    """run_replicas with an optional process pool.

    Replica seeds depend only on (cell_index, replica_index) and results
    are reassembled in replica order, so any job count gives identical
    output.
    """
    if jobs <= 1 or config.replicas == 1:
        return run_replicas(config, cell_index=cell_index)
    import concurrent.futures
    payloads = [(config, cell_index, r) for r in range(config.replicas)]
    out: list[RunResult | None] = [None] * config.replicas
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        for replica_index, result in pool.map(_replica_task, payloads):
            out[replica_index] = result
    return out


def _cell_task(payload):
    config, cell_index, temptation, sucker = payload
    cell_config = dataclasses.replace(config,
                                      game=from_ts(temptation, sucker))
    results = run_replicas(cell_config, cell_index=cell_index)
    steadies = [r.trajectory.steady_rho for r in results]
    return cell_index, float(np.mean(steadies)), float(np.std(steadies))


def sweep_ts_parallel(config: SimulationConfig, t_values, s_values,
                      jobs: int = 1) -> GridResult:
    """sweep_ts with an optional process pool over grid cells; cell
    seeds are position-derived so the grid is identical for any job
    count or completion order."""
    if jobs <= 1:
        return sweep_ts(config, t_values, s_values)
    import concurrent.futures
    t_values = [float(t) for t in t_values]
    s_values = [float(s) for s in s_values]
    payloads = [(config, it * len(s_values) + js, t, s)
                for it, t in enumerate(t_values)
                for js, s in enumerate(s_values)]
    mean = np.zeros((len(t_values), len(s_values)))
    std = np.zeros_like(mean)
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        for cell, mu, sd in pool.map(_cell_task, payloads):
            it, js = divmod(cell, len(s_values))
            mean[it, js] = mu
            std[it, js] = sd
    return GridResult(t_values=t_values, s_values=s_values,
                      rho_mean=mean, rho_std=std, replicas=config.replicas)


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """``round,rho`` rows; round 0 is the initial density."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("round,rho\n")
        for k, value in enumerate(trajectory.rho):
            fh.write(f"{k},{value!r}\n")


def write_grid_csv(grid: GridResult, path) -> None:
    """``T,S,rho_mean,rho_std,replicas`` rows in row-major grid order."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("T,S,rho_mean,rho_std,replicas\n")
        for t, s, mu, sd in grid.rows():
            fh.write(f"{t!r},{s!r},{float(mu)!r},{float(sd)!r},"
                     f"{grid.replicas}\n")
