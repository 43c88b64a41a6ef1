"""Dataset embeddings and pairwise dataset similarity.

A dataset embedding is the column-wise sum of its per-sample probe
features. Similarity between two datasets is 1 minus their correlation
distance (the cosine of the mean-centered vectors), so identical
embeddings score 1 and anti-correlated ones score -1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateVector, EmptyInput
from .registry import SampleFeatureMatrix, format_real


@dataclass(frozen=True)
class DatasetEmbedding:
    dataset_id: str
    vector: np.ndarray
    source: str = "aggregated"  # or "ingested"


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric K x K matrix of pairwise dataset similarities."""

    dataset_ids: tuple[str, ...]
    phi: np.ndarray

    def index(self, dataset_id: str) -> int:
        return self.dataset_ids.index(dataset_id)

    def value(self, a: str, b: str) -> float:
        return float(self.phi[self.index(a), self.index(b)])

    def __contains__(self, dataset_id: str) -> bool:
        return dataset_id in self.dataset_ids


def aggregate_features(features: SampleFeatureMatrix, mode: str = "sum") -> DatasetEmbedding:
    """Aggregate per-sample features into one dataset vector.

    The default is the plain column-wise sum; ``mode="mean"`` is an
    off-by-default variant that divides by the sample count.
    """
    rows = np.asarray(features.rows, dtype=float)
    if rows.size == 0 or rows.shape[0] < 1:
        raise EmptyInput(f"dataset {features.dataset_id!r} has no sample rows")
    vector = rows.sum(axis=0)
    if mode == "mean":
        vector = vector / rows.shape[0]
    elif mode != "sum":
        raise ValueError(f"unknown aggregation mode {mode!r}")
    return DatasetEmbedding(dataset_id=features.dataset_id, vector=vector)


def correlation_distance(u, v) -> float:
    """1 minus the cosine of the mean-centered vectors; range [0, 2].

    Shorter distance means greater similarity. Constant vectors have no
    direction after centering and raise :class:`DegenerateVector`.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1 or u.size < 2:
        raise DegenerateVector(
            f"need equal-length vectors of dimension >= 2, got {u.shape} and {v.shape}"
        )
    uc = u - u.mean()
    vc = v - v.mean()
    nu = np.linalg.norm(uc)
    nv = np.linalg.norm(vc)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVector("constant vector has zero centered norm")
    return float(1.0 - (uc @ vc) / (nu * nv))


def similarity_matrix(embeddings) -> SimilarityMatrix:
    """Pairwise phi[i][j] = 1 - correlation_distance(E_i, E_j).

    The diagonal is exactly 1. A constant embedding raises
    :class:`DegenerateVector` naming the dataset.
    """
    embeddings = list(embeddings)
    if len(embeddings) < 2:
        raise EmptyInput(f"need at least 2 embeddings, got {len(embeddings)}")
    ids = tuple(e.dataset_id for e in embeddings)
    k = len(ids)
    phi = np.ones((k, k), dtype=float)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                dist = correlation_distance(embeddings[i].vector, embeddings[j].vector)
            except DegenerateVector as exc:
                raise DegenerateVector(
                    f"datasets {ids[i]!r}/{ids[j]!r}: {exc}"
                ) from None
            phi[i, j] = phi[j, i] = 1.0 - dist
    return SimilarityMatrix(dataset_ids=ids, phi=phi)


def zoo_similarity(zoo) -> SimilarityMatrix:
    """Similarity over all zoo datasets from their stored feature matrices."""
    from .errors import IntegrityError

    embeddings = []
    for dataset_id in zoo.dataset_ids():
        if dataset_id not in zoo.features:
            raise IntegrityError(
                f"dataset {dataset_id!r} has no feature matrix; cannot compute similarity"
            )
        embeddings.append(aggregate_features(zoo.features[dataset_id]))
    return similarity_matrix(embeddings)


def write_embeddings(embeddings, out_dir) -> Path:
    """Write each aggregated vector to embeddings/<dataset_id>.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for e in embeddings:
        with open(out / f"{e.dataset_id}.csv", "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow([format_real(v) for v in e.vector])
    return out


def write_similarity(matrix: SimilarityMatrix, path) -> Path:
    """Write unordered pairs (a < b) as dataset_a,dataset_b,phi rows."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset_a", "dataset_b", "phi"])
        for i, a in enumerate(matrix.dataset_ids):
            for j in range(i + 1, len(matrix.dataset_ids)):
                writer.writerow([a, matrix.dataset_ids[j], format_real(matrix.phi[i, j])])
    return path
