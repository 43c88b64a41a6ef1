"""Synthetic model zoos with known latent structure.

Models and datasets get latent vectors; the accuracy of model i on
dataset j is a logistic squash of their latent affinity plus a model
strength term, a dataset easiness term, and Gaussian noise. Bias terms
create generally strong or weak models and easy or hard datasets, and
each model's latent leans toward its pretraining dataset so that
source-target similarity carries real signal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .registry import (
    DatasetCard,
    ModelCard,
    SampleFeatureMatrix,
    TrainingRecord,
    Zoo,
    format_real,
    save_zoo,
)
from .transferability import TransferRecord

ARCHITECTURES = ("convnext", "mlpnet", "resnet", "swin", "vit")
INPUT_SHAPES = (160, 224, 256, 384)
FEATURE_ROWS = 24  # samples per synthetic probe-feature matrix

TRUTH_FILE = "truth.csv"


@dataclass(frozen=True)
class SynthConfig:
    n_models: int = 40
    n_datasets: int = 12
    latent_dim: int = 4
    noise_std: float = 0.05
    feature_dim: int = 8
    seed: int = 0
    observed_fraction: float = 0.7  # fraction of pairs with a fine-tune record
    transfer_noise_std: float = 0.75  # noise on synthetic transferability scores

    def __post_init__(self):
        if self.n_datasets < 3:
            raise ValueError("need at least 3 datasets (pairs plus a target)")


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def generate(config: SynthConfig):
    """Generate a zoo plus its latent ground truth.

    Returns (zoo, truth) where truth maps (model_id, dataset_id) to the
    noise-free logit of the fine-tune accuracy. Deterministic given the
    seed; all accuracies lie strictly inside (0, 1).
    """
    rng = np.random.default_rng(config.seed)
    n, k, latent = config.n_models, config.n_datasets, config.latent_dim

    dataset_ids = [f"d{j:02d}" for j in range(k)]
    model_ids = [f"m{i:03d}" for i in range(n)]

    v = rng.standard_normal((k, latent))
    c = rng.normal(0.0, 0.4, size=k)  # dataset easiness
    source = rng.integers(0, k, size=n)  # pretraining dataset per model
    u = 0.6 * v[source] + 0.8 * rng.standard_normal((n, latent))
    b = rng.normal(0.0, 0.5, size=n)  # model strength

    affinity = (u @ v.T) * (1.5 / np.sqrt(latent))
    true_logit = affinity + b[:, None] + c[None, :]
    noise = rng.normal(0.0, config.noise_std, size=(n, k))
    accuracy = _logistic(true_logit + noise)

    datasets = []
    for j, dataset_id in enumerate(dataset_ids):
        num_classes = max(2, int(round(6.0 * np.exp(-c[j]) + rng.uniform(0.0, 2.0))))
        num_samples = max(num_classes, int(round(10 ** rng.uniform(2.7, 4.7))))
        datasets.append(
            DatasetCard(
                dataset_id=dataset_id,
                num_samples=num_samples,
                num_classes=num_classes,
                modality="image",
            )
        )

    models = []
    pretrain_records = []
    for i, model_id in enumerate(model_ids):
        src = dataset_ids[source[i]]
        # Pretraining accuracy confounds model strength with source easiness.
        pre_acc = float(
            _logistic(true_logit[i, source[i]] + rng.normal(0.0, 0.25))
        )
        num_params = int(round(10 ** rng.uniform(6.5, 8.5)))
        models.append(
            ModelCard(
                model_id=model_id,
                architecture=ARCHITECTURES[rng.integers(0, len(ARCHITECTURES))],
                pretrained_dataset_id=src,
                input_shape=int(INPUT_SHAPES[rng.integers(0, len(INPUT_SHAPES))]),
                num_params=num_params,
                memory_mb=float(num_params * 4e-6 * rng.uniform(1.0, 1.15)),
                pretrained_accuracy=pre_acc,
            )
        )
        pretrain_records.append(
            TrainingRecord(model_id=model_id, dataset_id=src, accuracy=pre_acc, kind="pretrain")
        )

    observed = rng.random((n, k)) < config.observed_fraction
    finetune_records = [
        TrainingRecord(
            model_id=model_ids[i],
            dataset_id=dataset_ids[j],
            accuracy=float(accuracy[i, j]),
            kind="finetune",
        )
        for i in range(n)
        for j in range(k)
        if observed[i, j]
    ]

    transfer_records = [
        TransferRecord(
            model_id=model_ids[i],
            dataset_id=dataset_ids[j],
            method="ingested",
            score=float(true_logit[i, j] + rng.normal(0.0, config.transfer_noise_std)),
        )
        for i in range(n)
        for j in range(k)
    ]

    # Dataset embeddings: latents padded to feature_dim, randomly rotated,
    # then spread over per-sample rows whose column sums recover them.
    padded = np.zeros((k, config.feature_dim))
    padded[:, : min(latent, config.feature_dim)] = v[:, : config.feature_dim]
    rotation = np.linalg.qr(rng.standard_normal((config.feature_dim, config.feature_dim)))[0]
    embeddings = padded @ rotation.T
    features = {}
    for j, dataset_id in enumerate(dataset_ids):
        rows = rng.normal(
            embeddings[j] / FEATURE_ROWS, 0.02, size=(FEATURE_ROWS, config.feature_dim)
        )
        features[dataset_id] = SampleFeatureMatrix(dataset_id=dataset_id, rows=rows)

    zoo = Zoo(
        models=tuple(models),
        datasets=tuple(datasets),
        history=tuple(pretrain_records + finetune_records),
        features=features,
        transfer_scores=tuple(transfer_records),
    )
    truth = {
        (model_ids[i], dataset_ids[j]): float(true_logit[i, j])
        for i in range(n)
        for j in range(k)
    }
    return zoo, truth


def write_zoo(zoo: Zoo, truth, out_dir) -> Path:
    """Persist the zoo as a registry directory plus truth.csv."""
    root = save_zoo(zoo, out_dir)
    with open(root / TRUTH_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "dataset_id", "true_logit"])
        for (model_id, dataset_id), logit in sorted(truth.items()):
            writer.writerow([model_id, dataset_id, format_real(logit)])
    return root
