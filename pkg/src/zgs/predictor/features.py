"""Feature-row assembly for (model, dataset) pairs.

Column order is fixed: dataset metadata, model metadata, architecture
one-hot, pretrain-dataset one-hot, source-target similarity, normalized
transfer score plus presence flag, then model and dataset embeddings.
One-hot vocabularies are frozen from the zoo's model cards; categories
unseen there encode as an all-zero block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import MissingEmbedding
from ..registry import Zoo
from ..simfeat import SimilarityMatrix
from ..zoograph import NodeRef, _min_max


@dataclass(frozen=True)
class FeatureSpec:
    """Which feature groups participate in a row."""

    use_metadata: bool = True
    use_similarity: bool = True
    use_transfer_score: bool = True
    use_graph: bool = True

    def __post_init__(self):
        if not any(
            (self.use_metadata, self.use_similarity, self.use_transfer_score, self.use_graph)
        ):
            raise ValueError("at least one feature group must be enabled")


@dataclass
class FeatureRow:
    model_id: str
    dataset_id: str
    x: np.ndarray
    y: float | None = None


def _architecture_vocab(zoo: Zoo) -> list[str]:
    return sorted({m.architecture for m in zoo.models})


def _pretrain_vocab(zoo: Zoo) -> list[str]:
    return sorted({m.pretrained_dataset_id for m in zoo.models if m.pretrained_dataset_id})


def _normalized_transfer(zoo: Zoo) -> dict[tuple[str, str], float]:
    """Per-dataset min-max normalized transfer scores, logme preferred."""
    by_dataset: dict[str, dict[str, float]] = {}
    preferred: dict[tuple[str, str], str] = {}
    for t in zoo.transfer_scores:
        key = (t.model_id, t.dataset_id)
        if key not in preferred or t.method == "logme":
            preferred[key] = t.method
            by_dataset.setdefault(t.dataset_id, {})[t.model_id] = t.score
    out: dict[tuple[str, str], float] = {}
    for dataset_id, per_model in by_dataset.items():
        for model_id, w in _min_max(per_model).items():
            out[(model_id, dataset_id)] = w
    return out


def feature_columns(zoo: Zoo, spec: FeatureSpec, embed_dim: int = 128) -> list[str]:
    """Column names matching :func:`assemble_features` output order."""
    cols: list[str] = []
    if spec.use_metadata:
        cols += [
            "ds_log10_samples",
            "ds_num_classes",
            "m_input_shape",
            "m_log10_params",
            "m_memory_mb",
            "m_pretrained_accuracy",
        ]
        cols += [f"arch={a}" for a in _architecture_vocab(zoo)]
        cols += [f"pretrain={p}" for p in _pretrain_vocab(zoo)]
    if spec.use_similarity:
        cols.append("phi_source_target")
    if spec.use_transfer_score:
        cols += ["transfer_norm", "transfer_present"]
    if spec.use_graph:
        cols += [f"m_emb{i}" for i in range(embed_dim)]
        cols += [f"d_emb{i}" for i in range(embed_dim)]
    return cols


def assemble_features(zoo: Zoo, phi: SimilarityMatrix | None, embeddings, pairs,
                      spec: FeatureSpec) -> list[FeatureRow]:
    """Build one row per (model_id, dataset_id) pair.

    ``y`` is filled from the pair's fine-tune record when one exists.
    Raises :class:`MissingEmbedding` if graph features are requested for
    a node the embedding table does not cover.
    """
    arch_vocab = {a: i for i, a in enumerate(_architecture_vocab(zoo))}
    pre_vocab = {p: i for i, p in enumerate(_pretrain_vocab(zoo))}
    transfer = _normalized_transfer(zoo) if spec.use_transfer_score else {}
    labels = {
        (r.model_id, r.dataset_id): r.accuracy
        for r in zoo.history
        if r.kind == "finetune"
    }
    models = {m.model_id: m for m in zoo.models}
    datasets = {d.dataset_id: d for d in zoo.datasets}

    rows: list[FeatureRow] = []
    for model_id, dataset_id in pairs:
        model = models[model_id]
        dataset = datasets[dataset_id]
        parts: list[float] = []
        if spec.use_metadata:
            parts += [
                math.log10(dataset.num_samples),
                float(dataset.num_classes),
                float(model.input_shape),
                math.log10(model.num_params + 1),
                float(model.memory_mb),
                model.pretrained_accuracy if model.pretrained_accuracy is not None else 0.0,
            ]
            arch = [0.0] * len(arch_vocab)
            if model.architecture in arch_vocab:
                arch[arch_vocab[model.architecture]] = 1.0
            parts += arch
            pre = [0.0] * len(pre_vocab)
            if model.pretrained_dataset_id in pre_vocab:
                pre[pre_vocab[model.pretrained_dataset_id]] = 1.0
            parts += pre
        if spec.use_similarity:
            source = model.pretrained_dataset_id
            if phi is not None and source and source in phi and dataset_id in phi:
                parts.append(phi.value(source, dataset_id))
            else:
                parts.append(0.0)
        if spec.use_transfer_score:
            score = transfer.get((model_id, dataset_id))
            parts += [score if score is not None else 0.0, 1.0 if score is not None else 0.0]
        x = np.array(parts, dtype=float)
        if spec.use_graph:
            if embeddings is None:
                raise MissingEmbedding("graph features requested without an embedding table")
            m_node = NodeRef("model", model_id)
            d_node = NodeRef("dataset", dataset_id)
            for node in (m_node, d_node):
                if node not in embeddings:
                    raise MissingEmbedding(f"no embedding for {node}")
            x = np.concatenate([x, embeddings[m_node], embeddings[d_node]])
        rows.append(
            FeatureRow(
                model_id=model_id,
                dataset_id=dataset_id,
                x=x,
                y=labels.get((model_id, dataset_id)),
            )
        )
    return rows


def rows_to_matrix(rows):
    """Stack rows into (X, y); y entries are NaN where no label exists."""
    X = np.stack([r.x for r in rows])
    y = np.array([r.y if r.y is not None else np.nan for r in rows])
    return X, y
