"""Second-order biased random walks over the positive-edge subgraph.

The transition bias follows the return parameter p and in-out parameter
q: revisiting the previous node is weighted 1/p, stepping to a neighbor
of the previous node 1, and stepping further out 1/q; every bias is
multiplied by the walk-mapped edge weight. The weight-aware variant
additionally counts a node as "adjacent to the previous node" only when
that connecting edge is at least as heavy as the previous node's mean
positive out-weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DeadEnd, EmptyGraph
from ..zoograph import NodeRef, ZooGraph, positive_adjacency

NODE2VEC = "node2vec"
NODE2VEC_PLUS = "node2vec_plus"
VARIANTS = (NODE2VEC, NODE2VEC_PLUS)


@dataclass(frozen=True)
class WalkConfig:
    """Hyperparameters for walk sampling and skip-gram training."""

    p: float = 1.0
    q: float = 1.0
    walk_length: int = 40
    walks_per_node: int = 10
    window: int = 5
    negatives_per_positive: int = 5
    dim: int = 128
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0


class WalkSpace:
    """Indexed positive-edge adjacency prepared for fast stepping."""

    def __init__(self, graph: ZooGraph):
        adj = positive_adjacency(graph)
        self.nodes: list[NodeRef] = sorted(graph.nodes)
        self.index: dict[NodeRef, int] = {n: i for i, n in enumerate(self.nodes)}
        self.neighbors: list[np.ndarray] = []
        self.weights: list[np.ndarray] = []
        self.neighbor_weight: list[dict[int, float]] = []
        self.mean_out: list[float] = []
        for node in self.nodes:
            items = sorted(adj[node].items())
            idx = np.array([self.index[v] for v, _ in items], dtype=int)
            wts = np.array([w for _, w in items], dtype=float)
            self.neighbors.append(idx)
            self.weights.append(wts)
            self.neighbor_weight.append({self.index[v]: w for v, w in items})
            self.mean_out.append(float(wts.mean()) if len(wts) else 0.0)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def bias_weights(self, t: int, v: int, p: float, q: float, variant: str) -> np.ndarray:
        """Unnormalized transition weights from v given previous node t."""
        nbrs = self.neighbors[v]
        if len(nbrs) == 0:
            raise DeadEnd(f"node {self.nodes[v]} has no positive out-edges")
        weights = self.weights[v].copy()
        t_nbrs = self.neighbor_weight[t]
        threshold = self.mean_out[t]
        for k, x in enumerate(nbrs):
            if x == t:
                weights[k] /= p
            elif x in t_nbrs:
                if variant == NODE2VEC_PLUS and t_nbrs[x] < threshold:
                    weights[k] /= q
            else:
                weights[k] /= q
        return weights


def transition_weights(prev: NodeRef, current: NodeRef, graph: ZooGraph, config: WalkConfig,
                       variant: str = NODE2VEC) -> dict[NodeRef, float]:
    """Map each walkable neighbor of ``current`` to its unnormalized weight."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown walk variant {variant!r}")
    space = WalkSpace(graph)
    t, v = space.index[prev], space.index[current]
    weights = space.bias_weights(t, v, config.p, config.q, variant)
    return {space.nodes[x]: float(w) for x, w in zip(space.neighbors[v], weights)}


def _draw(weights: np.ndarray, rng) -> int:
    cum = np.cumsum(weights)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def sample_walks(graph: ZooGraph, config: WalkConfig, variant: str = NODE2VEC,
                 space: WalkSpace | None = None) -> list[list[NodeRef]]:
    """Sample ``walks_per_node`` biased walks from every non-isolated node.

    Walks traverse only positive edges and are deterministic given the
    seed: each start node draws from its own seed-derived stream, so the
    result is independent of scheduling order.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown walk variant {variant!r}")
    space = space or WalkSpace(graph)
    if all(space.degree(i) == 0 for i in range(len(space.nodes))):
        raise EmptyGraph("graph has no positive edges to walk")
    walks: list[list[int]] = []
    for start in range(len(space.nodes)):
        if space.degree(start) == 0:
            continue
        rng = np.random.default_rng((config.seed, start))
        for _ in range(config.walks_per_node):
            walk = [start]
            if config.walk_length < 2:
                walks.append(walk)
                continue
            # First step has no previous node: draw by mapped edge weight.
            first = space.neighbors[start][_draw(space.weights[start], rng)]
            walk.append(int(first))
            while len(walk) < config.walk_length:
                t, v = walk[-2], walk[-1]
                if space.degree(v) == 0:
                    break
                biased = space.bias_weights(t, v, config.p, config.q, variant)
                walk.append(int(space.neighbors[v][_draw(biased, rng)]))
            walks.append(walk)
    return [[space.nodes[i] for i in walk] for walk in walks]


def simulate_steps(graph: ZooGraph, prev: NodeRef, current: NodeRef, config: WalkConfig,
                   n: int, seed: int = 0, variant: str = NODE2VEC) -> dict[NodeRef, int]:
    """Draw ``n`` next-steps of the walk from (prev, current); returns counts.

    Uses the same bias and inverse-CDF machinery as :func:`sample_walks`,
    vectorized so Monte Carlo checks stay cheap.
    """
    space = WalkSpace(graph)
    t, v = space.index[prev], space.index[current]
    weights = space.bias_weights(t, v, config.p, config.q, variant)
    cum = np.cumsum(weights)
    rng = np.random.default_rng(seed)
    picks = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
    counts = np.bincount(picks, minlength=len(weights))
    return {
        space.nodes[x]: int(c) for x, c in zip(space.neighbors[v], counts)
    }
