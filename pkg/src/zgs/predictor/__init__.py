"""Feature assembly and regression models for score prediction."""

from .features import (
    FeatureRow,
    FeatureSpec,
    assemble_features,
    feature_columns,
    rows_to_matrix,
)
from .regressors import (
    ForestModel,
    GbmModel,
    RidgeModel,
    ScoreMatrix,
    predict,
    train_forest,
    train_gbm,
    train_ridge,
)

PREDICTORS = ("ridge", "forest", "gbm")


def train(rows, kind: str, seed: int = 0):
    """Train the named predictor on labeled rows."""
    if kind == "ridge":
        return train_ridge(rows)
    if kind == "forest":
        return train_forest(rows, seed=seed)
    if kind == "gbm":
        return train_gbm(rows, seed=seed)
    raise ValueError(f"unknown predictor {kind!r}")
