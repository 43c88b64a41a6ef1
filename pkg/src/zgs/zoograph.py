"""Weighted, edge-typed graph over model and dataset nodes.

Edges come in three kinds:
  dd_similarity   dataset-dataset, weighted by similarity phi, stored as
                  two directed edges per pair
  md_performance  dataset-model, weighted by per-dataset min-max
                  normalized accuracy; sub-threshold edges are kept but
                  labeled negative
  md_transfer     dataset-model, weighted by per-dataset min-max
                  normalized transferability; sub-threshold edges are
                  dropped

Positive labels drive random walks and serve as link-prediction
positives; negative labels serve only as link-prediction negatives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrityError, NotFound
from .registry import Zoo, format_real
from .simfeat import SimilarityMatrix, aggregate_features

DD_SIMILARITY = "dd_similarity"
MD_PERFORMANCE = "md_performance"
MD_TRANSFER = "md_transfer"

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True, order=True)
class NodeRef:
    kind: str  # "model" or "dataset"
    id: str


@dataclass(frozen=True)
class ZooEdge:
    a: NodeRef
    b: NodeRef
    kind: str
    weight: float
    label: str


@dataclass(frozen=True)
class GraphConfig:
    """Thresholds controlling edge pruning and labeling (all in [0,1])."""

    transfer_prune_threshold: float = 0.5
    accuracy_prune_threshold: float = 0.5
    negative_accuracy_threshold: float = 0.5
    dd_fully_connected: bool = True


@dataclass(frozen=True)
class ZooGraph:
    nodes: tuple[NodeRef, ...]
    edges: tuple[ZooEdge, ...]
    node_features: dict[NodeRef, np.ndarray] = field(default_factory=dict)

    def edges_of_kind(self, kind: str) -> list[ZooEdge]:
        return [e for e in self.edges if e.kind == kind]


def normalize_accuracy(records) -> dict[str, float]:
    """Per-dataset min-max normalization of training accuracies.

    ``records`` are the TrainingRecords of a single dataset. A model with
    both a pretrain and a finetune record is reduced to its best accuracy
    first. If every value is identical the map is all 1.0.
    """
    best: dict[str, float] = {}
    for r in records:
        prev = best.get(r.model_id)
        if prev is None or r.accuracy > prev:
            best[r.model_id] = r.accuracy
    if not best:
        return {}
    return _min_max(best)


def _min_max(values: dict[str, float]) -> dict[str, float]:
    lo = min(values.values())
    hi = max(values.values())
    if hi == lo:
        return {k: 1.0 for k in values}
    span = hi - lo
    return {k: (v - lo) / span for k, v in values.items()}


def build_graph(zoo: Zoo, phi: SimilarityMatrix, config: GraphConfig | None = None) -> ZooGraph:
    """Assemble the zoo graph from similarity, history, and transfer scores."""
    config = config or GraphConfig()
    dataset_ids = sorted(zoo.dataset_ids())
    model_ids = sorted(zoo.model_ids())
    for dataset_id in dataset_ids:
        if dataset_id not in phi:
            raise IntegrityError(f"dataset {dataset_id!r} missing from similarity matrix")

    nodes = [NodeRef("dataset", d) for d in dataset_ids] + [
        NodeRef("model", m) for m in model_ids
    ]
    edges: list[ZooEdge] = []

    if config.dd_fully_connected:
        for a in dataset_ids:
            for b in dataset_ids:
                if a == b:
                    continue
                edges.append(
                    ZooEdge(
                        a=NodeRef("dataset", a),
                        b=NodeRef("dataset", b),
                        kind=DD_SIMILARITY,
                        weight=phi.value(a, b),
                        label=POSITIVE,
                    )
                )

    by_dataset: dict[str, list] = {}
    for r in zoo.history:
        by_dataset.setdefault(r.dataset_id, []).append(r)
    for dataset_id in sorted(by_dataset):
        weights = normalize_accuracy(by_dataset[dataset_id])
        for model_id in sorted(weights):
            w = weights[model_id]
            label = (
                POSITIVE
                if w >= config.negative_accuracy_threshold
                and w >= config.accuracy_prune_threshold
                else NEGATIVE
            )
            edges.append(
                ZooEdge(
                    a=NodeRef("dataset", dataset_id),
                    b=NodeRef("model", model_id),
                    kind=MD_PERFORMANCE,
                    weight=w,
                    label=label,
                )
            )

    transfer_by_dataset: dict[str, dict[str, float]] = {}
    for t in zoo.transfer_scores:
        per_model = transfer_by_dataset.setdefault(t.dataset_id, {})
        # A computed logme score supersedes an ingested one for the same pair.
        if t.model_id not in per_model or t.method == "logme":
            per_model[t.model_id] = t.score
    for dataset_id in sorted(transfer_by_dataset):
        weights = _min_max(transfer_by_dataset[dataset_id])
        for model_id in sorted(weights):
            w = weights[model_id]
            if w < config.transfer_prune_threshold:
                continue
            edges.append(
                ZooEdge(
                    a=NodeRef("dataset", dataset_id),
                    b=NodeRef("model", model_id),
                    kind=MD_TRANSFER,
                    weight=w,
                    label=POSITIVE,
                )
            )

    node_features = {
        NodeRef("dataset", dataset_id): aggregate_features(zoo.features[dataset_id]).vector
        for dataset_id in dataset_ids
        if dataset_id in zoo.features
    }
    return ZooGraph(nodes=tuple(nodes), edges=tuple(edges), node_features=node_features)


def remove_target_edges(graph: ZooGraph, target: str) -> ZooGraph:
    """Drop every model-dataset edge incident to the target dataset.

    Dataset-dataset edges are retained, and the input graph is unmodified.
    """
    target_node = NodeRef("dataset", target)
    if target_node not in graph.nodes:
        raise NotFound(f"dataset {target!r} is not a node of the graph")
    kept = tuple(
        e
        for e in graph.edges
        if e.kind == DD_SIMILARITY or (e.a != target_node and e.b != target_node)
    )
    return ZooGraph(nodes=graph.nodes, edges=kept, node_features=dict(graph.node_features))


def walk_weight(edge: ZooEdge) -> float:
    """Edge weight mapped to [0, 1] for walk biasing.

    Similarity weights live in [-1, 1] and are mapped via (w + 1) / 2;
    model-dataset weights are already normalized to [0, 1].
    """
    if edge.kind == DD_SIMILARITY:
        return (edge.weight + 1.0) / 2.0
    return edge.weight


def positive_adjacency(graph: ZooGraph) -> dict[NodeRef, dict[NodeRef, float]]:
    """Undirected adjacency over positive edges with walk-mapped weights.

    Parallel positive edges between the same nodes (performance plus
    transfer) keep the larger mapped weight.
    """
    adj: dict[NodeRef, dict[NodeRef, float]] = {n: {} for n in graph.nodes}
    for e in graph.edges:
        if e.label != POSITIVE:
            continue
        w = walk_weight(e)
        for u, v in ((e.a, e.b), (e.b, e.a)):
            if w > adj[u].get(v, -np.inf):
                adj[u][v] = w
    return adj


def write_graph_csv(graph: ZooGraph, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a_kind", "a_id", "b_kind", "b_id", "edge_kind", "weight", "label"])
        for e in graph.edges:
            writer.writerow(
                [e.a.kind, e.a.id, e.b.kind, e.b.id, e.kind, format_real(e.weight), e.label]
            )
    return path
