"""One-layer graph neural networks trained for link prediction.

Two flavors share the training loop: a sample-and-aggregate layer whose
output concatenates the transformed self state with the summed ReLU of
transformed neighbor states, and an attention layer whose output is the
attention-weighted sum of transformed neighbor states. Edge scores are
the logistic of the endpoint dot product; training is full-batch
gradient descent on binary cross-entropy with handwritten gradients.

Nodes without input features use a learned default vector per node kind;
dataset features are mapped to the input width by a seed-recorded random
projection and unit-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DegenerateTraining,
    EmptyNeighborhood,
    ShapeError,
)
from ..zoograph import NodeRef, ZooGraph, positive_adjacency
from .table import EmbeddingTable
from .walks import WalkConfig

GRAPHSAGE = "graphsage"
GAT = "gat"

LEAKY_SLOPE = 0.2


@dataclass
class GnnParams:
    """Learnable parameters of one GNN layer.

    ``W`` transforms the self state, ``Q`` the neighbor states (aggregate
    flavor only), ``a`` is the attention vector (attention flavor only).
    ``kind_defaults`` holds the learned input vector per node kind.
    """

    W: np.ndarray
    Q: np.ndarray | None = None
    a: np.ndarray | None = None
    kind_defaults: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int = 0


def init_params(kind: str, dim_in: int, dim_out: int, seed: int = 0) -> GnnParams:
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(dim_in)
    W = rng.standard_normal((dim_out, dim_in)) * scale
    Q = rng.standard_normal((dim_out, dim_in)) * scale if kind == GRAPHSAGE else None
    a = rng.standard_normal(2 * dim_out) / np.sqrt(2 * dim_out) if kind == GAT else None
    defaults = {
        "model": rng.standard_normal(dim_in) * scale,
        "dataset": rng.standard_normal(dim_in) * scale,
    }
    return GnnParams(W=W, Q=Q, a=a, kind_defaults=defaults, seed=seed)


def _neighbor_indices(graph: ZooGraph):
    adj = positive_adjacency(graph)
    nodes = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    nbrs = [np.array(sorted(index[v] for v in adj[n]), dtype=int) for n in nodes]
    return nodes, index, nbrs


def _input_vector(node: NodeRef, node_features, params: GnnParams, dim_in: int):
    vec = node_features.get(node) if node_features else None
    if vec is None:
        vec = params.kind_defaults.get(node.kind)
        if vec is None:
            raise ShapeError(f"no features and no default vector for kind {node.kind!r}")
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (dim_in,):
        raise ShapeError(
            f"node {node}: feature shape {vec.shape} does not match input dim {dim_in}"
        )
    return vec


def sage_forward(graph: ZooGraph, node_features, params: GnnParams):
    """Hidden states h_i = ReLU([W x_i || sum_n ReLU(Q x_n)]) per node.

    Neighbors are positive-edge neighbors; an empty neighborhood
    contributes a zero vector.
    """
    if params.Q is None:
        raise ShapeError("aggregate layer requires Q")
    dim_out, dim_in = params.W.shape
    if params.Q.shape != (dim_out, dim_in):
        raise ShapeError(f"Q shape {params.Q.shape} does not match W {params.W.shape}")
    nodes, _, nbrs = _neighbor_indices(graph)
    X = np.stack([_input_vector(n, node_features, params, dim_in) for n in nodes])
    H = _sage_forward_mat(X, nbrs, params.W, params.Q)[0]
    return {n: H[i].copy() for i, n in enumerate(nodes)}


def _sage_forward_mat(X, nbrs, W, Q):
    Z = X @ W.T
    XQ = X @ Q.T
    M = np.maximum(XQ, 0.0)
    S = np.zeros_like(Z)
    for i, J in enumerate(nbrs):
        if len(J):
            S[i] = M[J].sum(axis=0)
    C = np.concatenate([Z, S], axis=1)
    H = np.maximum(C, 0.0)
    return H, (Z, XQ, M, S, C)


def _sage_backward_mat(dH, X, nbrs, W, Q, cache):
    _, XQ, _, _, C = cache
    h = W.shape[0]
    dC = dH * (C > 0.0)
    dZ = dC[:, :h]
    dS = dC[:, h:]
    dM = np.zeros_like(dZ)
    for i, J in enumerate(nbrs):
        if len(J):
            np.add.at(dM, J, dS[i])
    dXQ = dM * (XQ > 0.0)
    dW = dZ.T @ X
    dQ = dXQ.T @ X
    dX = dZ @ W + dXQ @ Q
    return dW, dQ, dX


def gat_attention(i: NodeRef, graph: ZooGraph, node_states, params: GnnParams):
    """Softmax attention of node i over its positive-edge neighbors."""
    if params.a is None:
        raise ShapeError("attention layer requires a")
    dim_out, dim_in = params.W.shape
    nodes, index, nbrs = _neighbor_indices(graph)
    J = nbrs[index[i]]
    if len(J) == 0:
        raise EmptyNeighborhood(f"node {i} has no positive-edge neighbors")
    zi = params.W @ _input_vector(i, node_states, params, dim_in)
    a1, a2 = params.a[:dim_out], params.a[dim_out:]
    logits = []
    for j in J:
        zj = params.W @ _input_vector(nodes[j], node_states, params, dim_in)
        t = float(a1 @ zi + a2 @ zj)
        logits.append(t if t > 0 else LEAKY_SLOPE * t)
    logits = np.array(logits)
    logits -= logits.max()
    alpha = np.exp(logits)
    alpha /= alpha.sum()
    return {nodes[j]: float(alpha[k]) for k, j in enumerate(J)}


def _gat_forward_mat(X, nbrs, W, a):
    h = W.shape[0]
    Z = X @ W.T
    a1, a2 = a[:h], a[h:]
    s1 = Z @ a1  # a1 . z_i
    s2 = Z @ a2  # a2 . z_j
    H = np.zeros_like(Z)
    cache = []
    for i, J in enumerate(nbrs):
        if len(J) == 0:
            H[i] = Z[i]
            cache.append(None)
            continue
        t = s1[i] + s2[J]
        e = np.where(t > 0, t, LEAKY_SLOPE * t)
        e = e - e.max()
        alpha = np.exp(e)
        alpha /= alpha.sum()
        H[i] = alpha @ Z[J]
        cache.append((t, alpha))
    return H, (Z, cache)


def _gat_backward_mat(dH, X, nbrs, W, a, cache):
    Z, per_node = cache
    h = W.shape[0]
    a1, a2 = a[:h], a[h:]
    dZ = np.zeros_like(Z)
    da = np.zeros_like(a)
    for i, J in enumerate(nbrs):
        if per_node[i] is None:
            dZ[i] += dH[i]
            continue
        t, alpha = per_node[i]
        Zj = Z[J]
        dalpha = Zj @ dH[i]
        dZ[J] += alpha[:, None] * dH[i]
        de = alpha * (dalpha - float(alpha @ dalpha))
        dt = de * np.where(t > 0, 1.0, LEAKY_SLOPE)
        da[:h] += dt.sum() * Z[i]
        da[h:] += dt @ Zj
        dZ[i] += dt.sum() * a1
        dZ[J] += np.outer(dt, a2)
    dW = dZ.T @ X
    dX = dZ @ W
    return dW, da, dX


def _bce(scores, labels):
    # max(s,0) - s*y + log(1 + exp(-|s|)), stable for large |s|
    return float(
        np.mean(np.maximum(scores, 0.0) - scores * labels + np.log1p(np.exp(-np.abs(scores))))
    )


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def linkpred_loss_and_grads(kind, params: GnnParams, fixed_inputs, default_users,
                            nbrs, pairs, labels):
    """Full-batch BCE loss and gradients for every learnable parameter.

    ``fixed_inputs`` maps node index to a constant input row;
    ``default_users`` maps node kind to the indices that use the learned
    default. ``pairs`` is an (m, 2) index array; ``labels`` in {0, 1}.
    Returns (loss, grads) with grads keyed W, Q, a, default:<kind>.
    """
    n = len(nbrs)
    dim_in = params.W.shape[1]
    X = np.zeros((n, dim_in))
    for i, vec in fixed_inputs.items():
        X[i] = vec
    for node_kind, idxs in default_users.items():
        X[idxs] = params.kind_defaults[node_kind]

    if kind == GRAPHSAGE:
        H, cache = _sage_forward_mat(X, nbrs, params.W, params.Q)
    elif kind == GAT:
        H, cache = _gat_forward_mat(X, nbrs, params.W, params.a)
    else:
        raise ValueError(f"unknown GNN kind {kind!r}")

    u, v = pairs[:, 0], pairs[:, 1]
    scores = np.sum(H[u] * H[v], axis=1)
    loss = _bce(scores, labels)
    ds = (_sigmoid(scores) - labels) / len(labels)

    dH = np.zeros_like(H)
    np.add.at(dH, u, ds[:, None] * H[v])
    np.add.at(dH, v, ds[:, None] * H[u])

    grads: dict[str, np.ndarray] = {}
    if kind == GRAPHSAGE:
        dW, dQ, dX = _sage_backward_mat(dH, X, nbrs, params.W, params.Q, cache)
        grads["W"] = dW
        grads["Q"] = dQ
    else:
        dW, da, dX = _gat_backward_mat(dH, X, nbrs, params.W, params.a, cache)
        grads["W"] = dW
        grads["a"] = da
    for node_kind, idxs in default_users.items():
        grads[f"default:{node_kind}"] = dX[idxs].sum(axis=0)
    return loss, grads


def prepare_inputs(graph: ZooGraph, input_dim: int, seed: int):
    """Split nodes into fixed-feature rows and default-vector users.

    Dataset features are projected to ``input_dim`` by a seed-recorded
    Gaussian projection when widths differ, then unit-normalized.
    """
    nodes, index, nbrs = _neighbor_indices(graph)
    fixed: dict[int, np.ndarray] = {}
    users: dict[str, list[int]] = {"model": [], "dataset": []}
    proj_rng = np.random.default_rng((seed, 7))
    projections: dict[int, np.ndarray] = {}
    for node in nodes:
        i = index[node]
        feat = graph.node_features.get(node)
        if feat is None:
            users.setdefault(node.kind, []).append(i)
            continue
        feat = np.asarray(feat, dtype=float)
        if feat.shape[0] != input_dim:
            width = feat.shape[0]
            if width not in projections:
                projections[width] = proj_rng.standard_normal((input_dim, width)) / np.sqrt(width)
            feat = projections[width] @ feat
        norm = np.linalg.norm(feat)
        fixed[i] = feat / norm if norm > 0 else feat
    users = {k: np.array(v, dtype=int) for k, v in users.items() if v}
    return nodes, index, nbrs, fixed, users


def _edge_examples(graph: ZooGraph, index, seed: int):
    """Positive pairs, plus negatives (labeled-negative edges topped up
    with uniformly sampled non-edges) at a 1:1 ratio."""
    pos: set[tuple[int, int]] = set()
    neg: set[tuple[int, int]] = set()
    linked: set[tuple[int, int]] = set()
    for e in graph.edges:
        u, v = index[e.a], index[e.b]
        key = (min(u, v), max(u, v))
        linked.add(key)
        (pos if e.label == "positive" else neg).add(key)
    neg -= pos  # a pair positive under any kind is not a negative example
    if not pos:
        raise DegenerateTraining("graph has no positive edges")

    rng = np.random.default_rng((seed, 11))
    pos_list = sorted(pos)
    neg_list = sorted(neg)
    n_pos = len(pos_list)
    if len(neg_list) > n_pos:
        pick = rng.choice(len(neg_list), size=n_pos, replace=False)
        neg_list = [neg_list[i] for i in sorted(pick)]
    elif len(neg_list) < n_pos:
        n = len(graph.nodes)
        candidates = [
            (i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in linked
        ]
        needed = n_pos - len(neg_list)
        if len(candidates) < needed:
            needed = len(candidates)
        if needed > 0:
            pick = rng.choice(len(candidates), size=needed, replace=False)
            neg_list = neg_list + [candidates[i] for i in sorted(pick)]
    if not neg_list:
        raise DegenerateTraining("no negative examples available")

    pairs = np.array(pos_list + neg_list, dtype=int)
    labels = np.concatenate([np.ones(len(pos_list)), np.zeros(len(neg_list))])
    return pairs, labels


def train_linkpred(graph: ZooGraph, kind: str, config: WalkConfig,
                   input_dim: int = 16, loss_history=None) -> EmbeddingTable:
    """Train one GNN layer for link prediction; returns final node states.

    The embedding width is ``config.dim``: the aggregate flavor uses an
    internal width of dim/2 per half (dim must be even), the attention
    flavor uses dim directly. Deterministic given (graph, config, seed).
    """
    if kind == GRAPHSAGE:
        if config.dim % 2 != 0:
            raise ShapeError(f"aggregate flavor needs an even dim, got {config.dim}")
        dim_out = config.dim // 2
    elif kind == GAT:
        dim_out = config.dim
    else:
        raise ValueError(f"unknown GNN kind {kind!r}")

    nodes, index, nbrs, fixed, users = prepare_inputs(graph, input_dim, config.seed)
    pairs, labels = _edge_examples(graph, index, config.seed)
    params = init_params(kind, input_dim, dim_out, config.seed)

    lr = config.learning_rate
    for _ in range(config.epochs):
        loss, grads = linkpred_loss_and_grads(
            kind, params, fixed, users, nbrs, pairs, labels
        )
        if loss_history is not None:
            loss_history.append(loss)
        params.W -= lr * grads["W"]
        if kind == GRAPHSAGE:
            params.Q -= lr * grads["Q"]
        else:
            params.a -= lr * grads["a"]
        for node_kind in users:
            params.kind_defaults[node_kind] -= lr * grads[f"default:{node_kind}"]

    n = len(nodes)
    X = np.zeros((n, input_dim))
    for i, vec in fixed.items():
        X[i] = vec
    for node_kind, idxs in users.items():
        X[idxs] = params.kind_defaults[node_kind]
    if kind == GRAPHSAGE:
        H, _ = _sage_forward_mat(X, nbrs, params.W, params.Q)
    else:
        H, _ = _gat_forward_mat(X, nbrs, params.W, params.a)
    return EmbeddingTable(vectors={node: H[index[node]].copy() for node in nodes},
                          dim=config.dim)
