"""Node embedding learners: biased walks + skip-gram, and one-layer GNNs."""

from __future__ import annotations

from ..errors import ShapeError
from ..zoograph import ZooGraph
from .gnn import (
    GAT,
    GRAPHSAGE,
    GnnParams,
    gat_attention,
    init_params,
    linkpred_loss_and_grads,
    sage_forward,
    train_linkpred,
)
from .skipgram import train_skipgram
from .table import EmbeddingTable
from .walks import (
    NODE2VEC,
    NODE2VEC_PLUS,
    WalkConfig,
    WalkSpace,
    sample_walks,
    simulate_steps,
    transition_weights,
)

EMBEDDERS = (NODE2VEC, NODE2VEC_PLUS, GRAPHSAGE, GAT)


def train_embeddings(graph: ZooGraph, embedder: str, config: WalkConfig,
                     gnn_input_dim: int = 16) -> EmbeddingTable:
    """Train the requested embedder on the graph; one vector per node."""
    if embedder in (NODE2VEC, NODE2VEC_PLUS):
        space = WalkSpace(graph)
        walks = sample_walks(graph, config, variant=embedder, space=space)
        degrees = {n: space.degree(i) for i, n in enumerate(space.nodes)}
        return train_skipgram(walks, config, nodes=graph.nodes, degrees=degrees)
    if embedder in (GRAPHSAGE, GAT):
        return train_linkpred(graph, embedder, config, input_dim=gnn_input_dim)
    raise ShapeError(f"unknown embedder {embedder!r}")
