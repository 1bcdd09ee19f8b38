"""Supra-adjacency communicability and the inter-layer imitation scaling.

The M layers of a multiplex are stitched into one (N*M) x (N*M)
supra-matrix: homophily-masked layer adjacencies on the diagonal blocks
and ``interlayer_strength * I`` on every off-diagonal block (each node
is coupled to its own counterpart on every other layer).  The matrix
exponential of the supra-matrix is the communicability: entry
((alpha, i), (beta, j)) sums all walks from node i on layer alpha to
node j on layer beta, with 1/k! weighting for length-k walks.

Row/column order is layer-major: flat index = alpha * N + i.

Communicability depends only on the network, never on strategies, so it
is computed once per network and reused for a whole simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgen import MultiplexNetwork

__all__ = [
    "build_supra",
    "matrix_exp",
    "Communicability",
    "communicability",
    "ScalingBounds",
    "scaling_factor",
    "ScalingTable",
    "dump_communicability_csv",
]


def build_supra(network: MultiplexNetwork,
                interlayer_strength: float) -> np.ndarray:
    """Assemble the supra-matrix from a multiplex.

    Diagonal blocks are the homophily-masked adjacencies ``z_layers``;
    every off-diagonal block is ``interlayer_strength`` times the
    identity.  The result is symmetric and nonnegative.
    """
    if interlayer_strength < 0:
        raise ValueError(
            f"interlayer_strength must be >= 0, got {interlayer_strength}")
    n, m = network.node_count, network.layer_count
    supra = np.zeros((n * m, n * m))
    eye = np.eye(n) * interlayer_strength
    for alpha in range(m):
        a0 = alpha * n
        supra[a0:a0 + n, a0:a0 + n] = network.z_layers[alpha]
        for beta in range(alpha + 1, m):
            b0 = beta * n
            supra[a0:a0 + n, b0:b0 + n] = eye
            supra[b0:b0 + n, a0:a0 + n] = eye
    return supra


def matrix_exp(matrix: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated series.

    The input is scaled by 2**-s until its 1-norm drops below 0.5, the
    exponential of the scaled matrix is evaluated as a degree-20 Taylor
    polynomial in Horner form, and the result is squared s times.  At
    1-norm 0.5 the series truncation error is below 1e-25, far inside
    the 1e-9 per-entry budget the callers rely on.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    norm = np.linalg.norm(m, 1)
    squarings = 0 if norm <= 0.5 else int(np.ceil(np.log2(norm / 0.5)))
    scaled = m / (2.0 ** squarings)
    eye = np.eye(m.shape[0])
    acc = eye.copy()
    for k in range(20, 0, -1):
        acc = eye + (scaled @ acc) / k
    for _ in range(squarings):
        acc = acc @ acc
    return acc


@dataclass(frozen=True)
class Communicability:
    """exp of the supra-matrix, with block accessors.

    ``matrix`` is (N*M) x (N*M) in layer-major order.
    """

    matrix: np.ndarray
    node_count: int
    layer_count: int

    def block(self, layer_a: int, layer_b: int) -> np.ndarray:
        """The N x N sub-matrix coupling layer_a to layer_b (a view)."""
        n = self.node_count
        return self.matrix[layer_a * n:(layer_a + 1) * n,
                           layer_b * n:(layer_b + 1) * n]

    def entry(self, layer_a: int, node_i: int,
              layer_b: int, node_j: int) -> float:
        n = self.node_count
        return float(self.matrix[layer_a * n + node_i, layer_b * n + node_j])


def communicability(network: MultiplexNetwork,
                    interlayer_strength: float) -> Communicability:
    """Communicability of a multiplex at the given coupling strength."""
    supra = build_supra(network, interlayer_strength)
    return Communicability(matrix=matrix_exp(supra),
                           node_count=network.node_count,
                           layer_count=network.layer_count)


@dataclass(frozen=True)
class ScalingBounds:
    """Range of the imitation scaling factor; defaults (0.5, 1.0)."""

    minimum: float = 0.5
    maximum: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.minimum <= self.maximum <= 1.0:
            raise ValueError(
                f"bounds must satisfy 0 < minimum <= maximum <= 1, "
                f"got ({self.minimum}, {self.maximum})")

    @property
    def span(self) -> float:
        return self.maximum - self.minimum


def _cross_neighbourhood(network: MultiplexNetwork, node: int, layer: int):
    """Flat supra indices of node's counterparts and their neighbours on
    every other layer."""
    n = network.node_count
    out: list[int] = []
    for beta in range(network.layer_count):
        if beta == layer:
            continue
        out.append(beta * n + node)
        out.extend(beta * n + j
                   for j in np.flatnonzero(network.adjacency[beta][node]))
    return out


def scaling_factor(node: int, layer: int, comm: Communicability,
                   strategies: np.ndarray, network: MultiplexNetwork,
                   bounds: ScalingBounds = ScalingBounds()) -> float:
    """Imitation scaling factor of (node, layer) given current strategies.

    Over every other layer beta, the communicability entries from
    (node, layer) to the node's counterpart on beta and that
    counterpart's neighbours are summed twice: once restricted to
    entries whose strategy on beta equals the node's strategy on
    ``layer`` (numerator), once unrestricted (denominator).  The factor
    is ``1 - bounds.span * numerator / denominator``: full cross-layer
    agreement pins it at ``bounds.minimum``, no agreement leaves
    imitation unscaled at 1.  A zero denominator (single layer, or zero
    coupling) is neutral and returns 1.
    """
    strategies = np.asarray(strategies)
    own = strategies[layer, node]
    flat = strategies.reshape(-1)
    row = comm.matrix[layer * comm.node_count + node]
    numerator = 0.0
    denominator = 0.0
    for idx in _cross_neighbourhood(network, node, layer):
        g = row[idx]
        denominator += g
        if flat[idx] == own:
            numerator += g
    if denominator <= 0.0:
        return 1.0
    return 1.0 - bounds.span * (numerator / denominator)


class ScalingTable:
    """Precomputed cross-layer lookups for the scaling factor.

    The communicability entries and the per-(node, layer) denominators
    are static for a given network; only the strategy comparison changes
    between calls.  The table stores plain Python lists so the
    simulation's inner loop can evaluate the factor without numpy
    overhead.  ``factor`` matches ``scaling_factor`` exactly.
    """

    def __init__(self, network: MultiplexNetwork, comm: Communicability):
        nm = network.node_count * network.layer_count
        n = network.node_count
        self.cross_index: list[list[int]] = []
        self.cross_value: list[list[float]] = []
        self.denominator: list[float] = []
        for flat in range(nm):
            layer, node = divmod(flat, n)
            idx = _cross_neighbourhood(network, node, layer)
            row = comm.matrix[flat]
            vals = [float(row[k]) for k in idx]
            self.cross_index.append(idx)
            self.cross_value.append(vals)
            self.denominator.append(sum(vals))

    def factor(self, flat_index: int, strategy: int,
               flat_strategies: list[int],
               bounds: ScalingBounds = ScalingBounds()) -> float:
        den = self.denominator[flat_index]
        if den <= 0.0:
            return 1.0
        num = 0.0
        for k, g in zip(self.cross_index[flat_index],
                        self.cross_value[flat_index]):
            if flat_strategies[k] == strategy:
                num += g
        return 1.0 - bounds.span * (num / den)


def dump_communicability_csv(comm: Communicability, path) -> None:
    """Write the full communicability matrix as CSV (17-digit floats)."""
    np.savetxt(path, comm.matrix, fmt="%.17g", delimiter=",")
