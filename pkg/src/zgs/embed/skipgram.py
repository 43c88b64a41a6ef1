"""Skip-gram with negative sampling over walk corpora.

Center/context pairs are taken within a symmetric window; negatives are
drawn from a degree^0.75 noise distribution. Updates are SGD with a
linearly decaying learning rate, applied in fixed-size batches with
duplicate-safe accumulation so training is deterministic for a seed.
Tables are float32, the usual precision for embedding trainers.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyInput
from ..zoograph import NodeRef
from .table import EmbeddingTable
from .walks import WalkConfig

# Batches keep the per-row duplicate accumulation small on desk-scale
# vocabularies; larger batches destabilize the effective step size.
_BATCH = 256
_LR_FLOOR = 1e-4


def _stable_sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _scatter_add(table, idx, grads):
    """table[idx] += grads with duplicate indices accumulated."""
    order = np.argsort(idx)
    sorted_idx = idx[order]
    sorted_grads = grads.take(order, axis=0)
    starts = np.r_[0, np.nonzero(np.diff(sorted_idx))[0] + 1]
    table[sorted_idx[starts]] += np.add.reduceat(sorted_grads, starts, axis=0)


def _walk_pairs(walks, index, window):
    centers: list[int] = []
    contexts: list[int] = []
    for walk in walks:
        idx = [index[n] for n in walk]
        for i, c in enumerate(idx):
            for j in range(max(0, i - window), min(len(idx), i + window + 1)):
                if j != i:
                    centers.append(c)
                    contexts.append(idx[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def train_skipgram(walks, config: WalkConfig, nodes=None, degrees=None,
                   loss_history=None) -> EmbeddingTable:
    """Learn node vectors from walks; returns the center-vector table.

    ``nodes`` optionally lists every node that must receive a vector
    (isolated nodes keep their initialization); ``degrees`` optionally
    supplies graph degrees for the noise distribution, defaulting to the
    distinct-neighbor counts observed in the walks. ``loss_history``,
    when given a list, collects the mean pair loss per epoch.
    """
    walks = [w for w in walks if len(w) >= 2]
    if not walks:
        raise EmptyInput("no walks of length >= 2 to train on")

    vocab: list[NodeRef] = sorted(set(n for w in walks for n in w) | set(nodes or []))
    index = {n: i for i, n in enumerate(vocab)}
    n_nodes = len(vocab)
    dim = config.dim

    if degrees is None:
        seen: dict[NodeRef, set[NodeRef]] = {n: set() for n in vocab}
        for walk in walks:
            for a, b in zip(walk, walk[1:]):
                seen[a].add(b)
                seen[b].add(a)
        degree = np.array([len(seen[n]) for n in vocab], dtype=float)
    else:
        degree = np.array([float(degrees.get(n, 0)) for n in vocab], dtype=float)
    noise = np.power(np.maximum(degree, 0.0), 0.75)
    if noise.sum() == 0.0:
        noise = np.ones(n_nodes)
    noise_cdf = np.cumsum(noise / noise.sum())

    centers, contexts = _walk_pairs(walks, index, config.window)
    n_pairs = len(centers)

    rng = np.random.default_rng(config.seed)
    # One stacked table: rows [0, n) are center vectors, [n, 2n) context.
    table = np.zeros((2 * n_nodes, dim), dtype=np.float32)
    table[:n_nodes] = ((rng.random((n_nodes, dim)) - 0.5) / dim).astype(np.float32)

    k = config.negatives_per_positive
    total_steps = config.epochs * n_pairs
    done = 0
    for _ in range(config.epochs):
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for lo in range(0, n_pairs, _BATCH):
            batch = order[lo:lo + _BATCH]
            b = len(batch)
            c = centers[batch]
            o = contexts[batch] + n_nodes
            neg = (
                np.searchsorted(noise_cdf, rng.random((b, k)), side="right") + n_nodes
            )

            lr = config.learning_rate * max(1.0 - done / total_steps, _LR_FLOOR)
            vc = table[c]                         # (b, dim)
            vo = table[o]                         # (b, dim)
            vn = table[neg]                       # (b, k, dim)

            pos_score = np.einsum("bd,bd->b", vc, vo)
            neg_score = np.einsum("bd,bkd->bk", vc, vn)
            if loss_history is not None:
                epoch_loss += float(
                    -np.sum(_log_sigmoid(pos_score)) - np.sum(_log_sigmoid(-neg_score))
                )

            g_pos = _stable_sigmoid(pos_score) - 1.0          # (b,)
            g_neg = _stable_sigmoid(neg_score)                # (b, k)

            scale = np.float32(-lr)
            grads = np.concatenate(
                [
                    scale * (g_pos[:, None] * vo + np.einsum("bk,bkd->bd", g_neg, vn)),
                    scale * (g_pos[:, None] * vc),
                    scale * (g_neg[:, :, None] * vc[:, None, :]).reshape(b * k, dim),
                ]
            )
            _scatter_add(table, np.concatenate([c, o, neg.ravel()]), grads)
            done += b
        if loss_history is not None:
            loss_history.append(epoch_loss / n_pairs)

    return EmbeddingTable(
        vectors={n: table[i].astype(float) for n, i in index.items()}, dim=dim
    )
