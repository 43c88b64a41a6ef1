import numpy as np
import pytest

_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, outcome in _ACCEPTANCE:
            terminalreporter.write_line(f"  {name}: {outcome.upper()}")

from zgs.registry import (
    DatasetCard,
    ModelCard,
    SampleFeatureMatrix,
    TrainingRecord,
    Zoo,
)
from zgs.transferability import TransferRecord


@pytest.fixture
def tiny_zoo() -> Zoo:
    """Two models, two datasets, full cross history; accuracies from the
    worked 2x2 score-matrix example."""
    rng = np.random.default_rng(7)
    features = {
        d: SampleFeatureMatrix(dataset_id=d, rows=rng.standard_normal((5, 4)))
        for d in ("d1", "d2")
    }
    return Zoo(
        models=(
            ModelCard("m1", "resnet", "d1", 224, 11_000_000, 44.0, 0.91),
            ModelCard("m2", "vit", "d2", 224, 86_000_000, 330.0, 0.88),
        ),
        datasets=(
            DatasetCard("d1", 5000, 10, "image"),
            DatasetCard("d2", 800, 4, "image"),
        ),
        history=(
            TrainingRecord("m1", "d1", 0.6, "finetune"),
            TrainingRecord("m2", "d1", 0.8, "finetune"),
            TrainingRecord("m1", "d2", 0.7, "finetune"),
            TrainingRecord("m2", "d2", 0.3, "finetune"),
        ),
        features=features,
        transfer_scores=(
            TransferRecord("m1", "d1", "ingested", 0.9),
            TransferRecord("m2", "d1", "ingested", 0.2),
        ),
    )
