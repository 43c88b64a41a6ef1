"""Model-zoo ground data: metadata cards, training history, features.

Filesystem layout of a zoo directory:
    models.csv          -- model_id,architecture,pretrained_dataset_id,
                           input_shape,num_params,memory_mb,pretrained_accuracy
    datasets.csv        -- dataset_id,num_samples,num_classes,modality
    history.csv         -- model_id,dataset_id,accuracy,kind
    features/<id>.csv   -- optional; one probe-feature row per sample
    transfer_scores.csv -- optional; model_id,dataset_id,method,score

Files are UTF-8 CSV with a header row and '.' decimal separator. Reals are
serialized with 17 significant digits so a save/load round-trip is
value-exact. Optional fields are empty cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import IntegrityError, MissingInput, ParseError
from .transferability import TransferRecord

MODELS_FILE = "models.csv"
DATASETS_FILE = "datasets.csv"
HISTORY_FILE = "history.csv"
FEATURES_DIR = "features"
TRANSFER_FILE = "transfer_scores.csv"

MODEL_COLUMNS = (
    "model_id",
    "architecture",
    "pretrained_dataset_id",
    "input_shape",
    "num_params",
    "memory_mb",
    "pretrained_accuracy",
)
DATASET_COLUMNS = ("dataset_id", "num_samples", "num_classes", "modality")
HISTORY_COLUMNS = ("model_id", "dataset_id", "accuracy", "kind")
TRANSFER_COLUMNS = ("model_id", "dataset_id", "method", "score")


def format_real(x) -> str:
    """Serialize a float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ModelCard:
    """Metadata record for one pre-trained model."""

    model_id: str
    architecture: str
    pretrained_dataset_id: str | None
    input_shape: int
    num_params: int
    memory_mb: float
    pretrained_accuracy: float | None = None


@dataclass(frozen=True)
class DatasetCard:
    """Metadata record for one dataset."""

    dataset_id: str
    num_samples: int
    num_classes: int
    modality: str  # "image" or "text"


@dataclass(frozen=True)
class TrainingRecord:
    """Observed accuracy of one model trained on one dataset."""

    model_id: str
    dataset_id: str
    accuracy: float
    kind: str  # "pretrain" or "finetune"


@dataclass(frozen=True)
class SampleFeatureMatrix:
    """Per-sample probe features for one dataset (n samples x d dims)."""

    dataset_id: str
    rows: np.ndarray

    @property
    def d(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class Zoo:
    """Immutable snapshot of everything known about a model zoo.

    Safe for unrestricted concurrent reads; construct via :func:`load_zoo`
    or :func:`zgs.synthzoo.generate`.
    """

    models: tuple[ModelCard, ...]
    datasets: tuple[DatasetCard, ...]
    history: tuple[TrainingRecord, ...]
    features: dict[str, SampleFeatureMatrix] = field(default_factory=dict)
    transfer_scores: tuple[TransferRecord, ...] = ()

    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.models]

    def dataset_ids(self) -> list[str]:
        return [d.dataset_id for d in self.datasets]

    def model(self, model_id: str) -> ModelCard:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise KeyError(model_id)

    def dataset(self, dataset_id: str) -> DatasetCard:
        for d in self.datasets:
            if d.dataset_id == dataset_id:
                return d
        raise KeyError(dataset_id)

    def finetune_records(self, dataset_id: str) -> list[TrainingRecord]:
        return [
            r for r in self.history if r.dataset_id == dataset_id and r.kind == "finetune"
        ]

    def with_history(self, history) -> "Zoo":
        return replace(self, history=tuple(history))


def _parse_real(cell: str, path, line_no: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}:{line_no}: malformed number {cell!r} in column {column}"
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"{path}:{line_no}: non-finite value in column {column}")
    return value


def _parse_int(cell: str, path, line_no: int, column: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise ParseError(
            f"{path}:{line_no}: malformed integer {cell!r} in column {column}"
        ) from None


def _read_rows(path: Path, columns):
    if not path.is_file():
        raise MissingInput(f"required file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty file, expected header") from None
        if tuple(header) != tuple(columns):
            raise ParseError(
                f"{path}:1: header {header!r} does not match expected {list(columns)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise ParseError(
                    f"{path}:{line_no}: expected {len(columns)} cells, got {len(row)}"
                )
            yield line_no, row


def _load_models(path: Path) -> tuple[ModelCard, ...]:
    cards = []
    for line_no, row in _read_rows(path, MODEL_COLUMNS):
        cards.append(
            ModelCard(
                model_id=row[0],
                architecture=row[1],
                pretrained_dataset_id=row[2] or None,
                input_shape=_parse_int(row[3], path, line_no, "input_shape"),
                num_params=_parse_int(row[4], path, line_no, "num_params"),
                memory_mb=_parse_real(row[5], path, line_no, "memory_mb"),
                pretrained_accuracy=(
                    _parse_real(row[6], path, line_no, "pretrained_accuracy")
                    if row[6]
                    else None
                ),
            )
        )
    return tuple(cards)


def _load_datasets(path: Path) -> tuple[DatasetCard, ...]:
    cards = []
    for line_no, row in _read_rows(path, DATASET_COLUMNS):
        cards.append(
            DatasetCard(
                dataset_id=row[0],
                num_samples=_parse_int(row[1], path, line_no, "num_samples"),
                num_classes=_parse_int(row[2], path, line_no, "num_classes"),
                modality=row[3],
            )
        )
    return tuple(cards)


def _load_history(path: Path) -> tuple[TrainingRecord, ...]:
    records = []
    for line_no, row in _read_rows(path, HISTORY_COLUMNS):
        records.append(
            TrainingRecord(
                model_id=row[0],
                dataset_id=row[1],
                accuracy=_parse_real(row[2], path, line_no, "accuracy"),
                kind=row[3],
            )
        )
    return tuple(records)


def _load_transfer(path: Path) -> tuple[TransferRecord, ...]:
    records = []
    for line_no, row in _read_rows(path, TRANSFER_COLUMNS):
        records.append(
            TransferRecord(
                model_id=row[0],
                dataset_id=row[1],
                method=row[2],
                score=_parse_real(row[3], path, line_no, "score"),
            )
        )
    return tuple(records)


def _load_feature_matrix(path: Path, dataset_id: str) -> SampleFeatureMatrix:
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"{path}:{line_no}: expected {width} cells, got {len(row)}"
                )
            rows.append([_parse_real(c, path, line_no, f"col{i}") for i, c in enumerate(row)])
    if not rows:
        raise ParseError(f"{path}:1: feature matrix is empty")
    return SampleFeatureMatrix(dataset_id=dataset_id, rows=np.asarray(rows, dtype=float))


def load_zoo(root_path) -> Zoo:
    """Load and cross-check a zoo directory.

    Raises :class:`MissingInput` for absent required files,
    :class:`ParseError` (naming file and line) for malformed cells, and
    :class:`IntegrityError` for dangling references or invariant
    violations, so that a returned Zoo always validates cleanly.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise MissingInput(f"zoo directory not found: {root}")
    models = _load_models(root / MODELS_FILE)
    datasets = _load_datasets(root / DATASETS_FILE)
    history = _load_history(root / HISTORY_FILE)
    transfer_path = root / TRANSFER_FILE
    transfer = _load_transfer(transfer_path) if transfer_path.is_file() else ()

    features: dict[str, SampleFeatureMatrix] = {}
    features_dir = root / FEATURES_DIR
    if features_dir.is_dir():
        for path in sorted(features_dir.glob("*.csv")):
            features[path.stem] = _load_feature_matrix(path, path.stem)

    zoo = Zoo(
        models=models,
        datasets=datasets,
        history=history,
        features=features,
        transfer_scores=transfer,
    )
    violations = validate_zoo(zoo)
    if violations:
        raise IntegrityError(f"{root}: " + "; ".join(violations[:5]))
    return zoo


def save_zoo(zoo: Zoo, root_path) -> Path:
    """Write a zoo directory that :func:`load_zoo` reads back identically."""
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)

    with open(root / MODELS_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MODEL_COLUMNS)
        for m in zoo.models:
            writer.writerow(
                [
                    m.model_id,
                    m.architecture,
                    m.pretrained_dataset_id or "",
                    m.input_shape,
                    m.num_params,
                    format_real(m.memory_mb),
                    format_real(m.pretrained_accuracy)
                    if m.pretrained_accuracy is not None
                    else "",
                ]
            )

    with open(root / DATASETS_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_COLUMNS)
        for d in zoo.datasets:
            writer.writerow([d.dataset_id, d.num_samples, d.num_classes, d.modality])

    with open(root / HISTORY_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for r in zoo.history:
            writer.writerow([r.model_id, r.dataset_id, format_real(r.accuracy), r.kind])

    if zoo.transfer_scores:
        with open(root / TRANSFER_FILE, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRANSFER_COLUMNS)
            for t in zoo.transfer_scores:
                writer.writerow([t.model_id, t.dataset_id, t.method, format_real(t.score)])

    if zoo.features:
        features_dir = root / FEATURES_DIR
        features_dir.mkdir(exist_ok=True)
        for dataset_id in sorted(zoo.features):
            matrix = zoo.features[dataset_id]
            with open(features_dir / f"{dataset_id}.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                for row in matrix.rows:
                    writer.writerow([format_real(v) for v in row])
    return root


def validate_zoo(zoo: Zoo) -> list[str]:
    """Return every invariant violation as a message; empty when clean.

    Violations are data, not failures: this never raises.
    """
    violations: list[str] = []

    seen_models: set[str] = set()
    for m in zoo.models:
        if m.model_id in seen_models:
            violations.append(f"duplicate model_id {m.model_id!r}")
        seen_models.add(m.model_id)
        if m.num_params < 0:
            violations.append(f"model {m.model_id!r}: num_params {m.num_params} < 0")
        if m.memory_mb < 0:
            violations.append(f"model {m.model_id!r}: memory_mb {m.memory_mb} < 0")
        if m.pretrained_accuracy is not None and not 0.0 <= m.pretrained_accuracy <= 1.0:
            violations.append(
                f"model {m.model_id!r}: pretrained_accuracy {m.pretrained_accuracy} "
                "out of [0,1]"
            )

    seen_datasets: set[str] = set()
    for d in zoo.datasets:
        if d.dataset_id in seen_datasets:
            violations.append(f"duplicate dataset_id {d.dataset_id!r}")
        seen_datasets.add(d.dataset_id)
        if d.num_classes < 2:
            violations.append(f"dataset {d.dataset_id!r}: num_classes {d.num_classes} < 2")
        if d.num_samples < d.num_classes:
            violations.append(
                f"dataset {d.dataset_id!r}: num_samples {d.num_samples} < "
                f"num_classes {d.num_classes}"
            )
        if d.modality not in ("image", "text"):
            violations.append(f"dataset {d.dataset_id!r}: unknown modality {d.modality!r}")

    seen_history: set[tuple[str, str, str]] = set()
    for r in zoo.history:
        key = (r.model_id, r.dataset_id, r.kind)
        if key in seen_history:
            violations.append(f"duplicate history row {key}")
        seen_history.add(key)
        if r.model_id not in seen_models:
            violations.append(f"history row {key}: unknown model {r.model_id!r}")
        if r.dataset_id not in seen_datasets:
            violations.append(f"history row {key}: unknown dataset {r.dataset_id!r}")
        if not 0.0 <= r.accuracy <= 1.0:
            violations.append(f"history row {key}: accuracy {r.accuracy} out of [0,1]")
        if r.kind not in ("pretrain", "finetune"):
            violations.append(f"history row {key}: unknown kind {r.kind!r}")

    for dataset_id, matrix in zoo.features.items():
        if dataset_id not in seen_datasets:
            violations.append(f"feature matrix references unknown dataset {dataset_id!r}")
        if matrix.rows.ndim != 2 or matrix.rows.shape[0] < 1 or matrix.rows.shape[1] < 1:
            violations.append(f"feature matrix {dataset_id!r}: empty or not 2-d")
        elif not np.isfinite(matrix.rows).all():
            violations.append(f"feature matrix {dataset_id!r}: non-finite entries")

    seen_transfer: set[tuple[str, str, str]] = set()
    for t in zoo.transfer_scores:
        key = (t.model_id, t.dataset_id, t.method)
        if key in seen_transfer:
            violations.append(f"duplicate transfer score {key}")
        seen_transfer.add(key)
        if t.model_id not in seen_models:
            violations.append(f"transfer score {key}: unknown model {t.model_id!r}")
        if t.dataset_id not in seen_datasets:
            violations.append(f"transfer score {key}: unknown dataset {t.dataset_id!r}")
        if not math.isfinite(t.score):
            violations.append(f"transfer score {key}: non-finite score")
        if t.method not in ("logme", "ingested"):
            violations.append(f"transfer score {key}: unknown method {t.method!r}")

    return violations
