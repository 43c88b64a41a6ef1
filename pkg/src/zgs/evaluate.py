"""Leave-one-out evaluation: Pearson correlation, top-k accuracy,
strategy comparison, and the training-history ratio ablation.

Each fold removes every model edge touching the target dataset, retrains
embeddings and the predictor on the remaining history, and correlates
the predicted scores for (all models x target) against the held-out
fine-tune accuracies.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import predictor as predictor_mod
from .embed import EMBEDDERS, WalkConfig, train_embeddings
from .errors import DegenerateVector, InsufficientData, InvalidK, NotFound
from .predictor import FeatureSpec, assemble_features
from .registry import Zoo
from .simfeat import zoo_similarity
from .zoograph import GraphConfig, build_graph, remove_target_edges

MIN_ACCURACY_STD = 0.005  # datasets below this show no usable variation
DEFAULT_TOPK = (1, 5)


def pearson(s, t) -> float:
    """Plain Pearson correlation; constant inputs are degenerate."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if s.shape != t.shape or s.ndim != 1 or s.size < 2:
        raise DegenerateVector(f"need equal-length vectors >= 2, got {s.shape}, {t.shape}")
    sc = s - s.mean()
    tc = t - t.mean()
    denom = np.sqrt((sc @ sc) * (tc @ tc))
    if denom == 0.0:
        raise DegenerateVector("constant input vector")
    return float((sc @ tc) / denom)


def topk_accuracy(s_col, t_col, k: int) -> float:
    """Mean ground truth of the k best-scored models (ties by model id).

    ``s_col``/``t_col`` may be plain vectors (ties then break by
    position) or accompanied by ids via :func:`topk_accuracy_ids`.
    """
    return topk_accuracy_ids(s_col, t_col, [str(i) for i in range(len(s_col))], k)


def topk_accuracy_ids(s_col, t_col, model_ids, k: int) -> float:
    s_col = np.asarray(s_col, dtype=float)
    t_col = np.asarray(t_col, dtype=float)
    n = len(s_col)
    if k < 1 or k > n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    order = sorted(range(n), key=lambda i: (-s_col[i], model_ids[i]))
    return float(np.mean(t_col[order[:k]]))


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one evaluation run depends on."""

    embedder: str = "node2vec"
    predictor: str = "ridge"
    feature_spec: FeatureSpec = field(default_factory=FeatureSpec)
    graph_config: GraphConfig = field(default_factory=GraphConfig)
    walk_config: WalkConfig = field(default_factory=WalkConfig)
    seed: int = 0
    topk: tuple[int, ...] = DEFAULT_TOPK
    gnn_input_dim: int = 16

    def __post_init__(self):
        if self.embedder not in EMBEDDERS:
            raise ValueError(f"unknown embedder {self.embedder!r}")
        if self.predictor not in predictor_mod.PREDICTORS:
            raise ValueError(f"unknown predictor {self.predictor!r}")


def config_id(config: PipelineConfig) -> str:
    spec = config.feature_spec
    flags = [
        name
        for name, on in (
            ("meta", spec.use_metadata),
            ("sim", spec.use_similarity),
            ("transfer", spec.use_transfer_score),
            ("graph", spec.use_graph),
        )
        if on
    ]
    parts = [config.predictor] + (
        [config.embedder] if spec.use_graph else []
    )
    return ":".join([",".join(parts), "+".join(flags)])


@dataclass
class LooResult:
    target_dataset_id: str
    tau: float
    topk_accuracy: dict[int, float]
    n_models: int


@dataclass
class RatioSkipped:
    """Warning entry for an ablation ratio that left a dataset empty."""

    ratio: float
    reason: str


def _effective_seed(config: PipelineConfig) -> WalkConfig:
    # The run seed lives on the pipeline config and governs everything.
    return replace(config.walk_config, seed=config.seed)


def loo_evaluate(zoo: Zoo, config: PipelineConfig, target: str, audit=None) -> LooResult:
    """Evaluate one leave-one-out fold for the target dataset.

    ``audit``, when given, receives the assembled training rows before
    fitting, so callers can verify that no row touches the target.
    """
    if target not in zoo.dataset_ids():
        raise NotFound(f"dataset {target!r} not in zoo")
    held_out = {
        r.model_id: r.accuracy for r in zoo.finetune_records(target)
    }
    if len(held_out) < 2:
        raise InsufficientData(
            f"target {target!r} has {len(held_out)} fine-tune records, need >= 2"
        )

    spec = config.feature_spec
    phi = zoo_similarity(zoo) if (spec.use_similarity or spec.use_graph) else None

    embeddings = None
    if spec.use_graph:
        graph = build_graph(zoo, phi, config.graph_config)
        graph = remove_target_edges(graph, target)
        embeddings = train_embeddings(
            graph, config.embedder, _effective_seed(config), gnn_input_dim=config.gnn_input_dim
        )

    train_pairs = sorted(
        {
            (r.model_id, r.dataset_id)
            for r in zoo.history
            if r.kind == "finetune" and r.dataset_id != target
        }
    )
    train_rows = assemble_features(zoo, phi, embeddings, train_pairs, spec)
    assert not any(r.dataset_id == target for r in train_rows), "target leaked into training"
    if audit is not None:
        audit(train_rows)
    model = predictor_mod.train(train_rows, config.predictor, seed=config.seed)

    predict_pairs = [(m, target) for m in sorted(zoo.model_ids())]
    predict_rows = assemble_features(zoo, phi, embeddings, predict_pairs, spec)
    scores = predictor_mod.predict(model, predict_rows)
    s_col = scores.column(target)

    known = sorted(held_out)
    idx = [scores.model_ids.index(m) for m in known]
    s_known = s_col[idx]
    t_known = np.array([held_out[m] for m in known])
    tau = pearson(s_known, t_known)
    topk = {
        k: topk_accuracy_ids(s_known, t_known, known, k)
        for k in config.topk
        if k <= len(known)
    }
    return LooResult(
        target_dataset_id=target, tau=tau, topk_accuracy=topk, n_models=len(known)
    )


def ratio_ablation(zoo: Zoo, config: PipelineConfig, target: str, ratios):
    """Re-run the fold on uniform subsamples of the non-target history.

    The target's own records are kept (they are the ground truth and are
    excluded from training regardless). A ratio that leaves a previously
    covered dataset without records is skipped with a warning entry.
    """
    results: dict[float, LooResult | RatioSkipped] = {}
    non_target = [r for r in zoo.history if r.dataset_id != target]
    target_records = [r for r in zoo.history if r.dataset_id == target]
    covered_before = {r.dataset_id for r in non_target}
    for ratio in ratios:
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"ratio {ratio} outside (0, 1]")
        rng = np.random.default_rng(config.seed)
        size = int(np.floor(ratio * len(non_target)))
        pick = np.sort(rng.choice(len(non_target), size=size, replace=False))
        sampled = [non_target[i] for i in pick]
        covered_after = {r.dataset_id for r in sampled}
        missing = sorted(covered_before - covered_after)
        if missing:
            results[ratio] = RatioSkipped(
                ratio=ratio,
                reason=f"subsample leaves datasets {missing} without records",
            )
            continue
        sub_zoo = zoo.with_history(sampled + target_records)
        results[ratio] = loo_evaluate(sub_zoo, config, target)
    return results


@dataclass
class ComparisonReport:
    """Per-fold results and per-config means for a strategy comparison."""

    configs: dict[str, PipelineConfig]
    folds: list[tuple[str, LooResult]]  # (config_id, fold result)
    mean_tau: dict[str, float]
    notes: list[str] = field(default_factory=list)

    def fold_results(self, cid: str) -> list[LooResult]:
        return [r for c, r in self.folds if c == cid]


def thread_cap() -> int:
    """Parallelism cap from ZGS_THREADS; 0 or unset means sequential."""
    raw = os.environ.get("ZGS_THREADS", "0")
    try:
        return max(int(raw), 0)
    except ValueError:
        return 0


def eligible_targets(zoo: Zoo, notes=None) -> list[str]:
    """Datasets with >= 2 fine-tune records and usable accuracy variation."""
    targets = []
    for dataset_id in sorted(zoo.dataset_ids()):
        records = zoo.finetune_records(dataset_id)
        if len(records) < 2:
            if notes is not None:
                notes.append(f"{dataset_id}: skipped, {len(records)} fine-tune records")
            continue
        std = float(np.std([r.accuracy for r in records]))
        if std < MIN_ACCURACY_STD:
            if notes is not None:
                notes.append(
                    f"{dataset_id}: skipped, accuracy std {std:.4f} < {MIN_ACCURACY_STD}"
                )
            continue
        targets.append(dataset_id)
    return targets


def compare_strategies(zoo: Zoo, configs, targets=None) -> ComparisonReport:
    """Run every (config, eligible target) fold and average tau per config.

    Per-fold failures become notes, not errors. Folds are independent and
    run in parallel when ZGS_THREADS allows.
    """
    notes: list[str] = []
    targets = list(targets) if targets is not None else eligible_targets(zoo, notes)

    ids: dict[str, PipelineConfig] = {}
    for config in configs:
        base = config_id(config)
        cid, k = base, 2
        while cid in ids:  # identical ids get a numeric suffix
            cid = f"{base}#{k}"
            k += 1
        ids[cid] = config

    jobs = [(cid, target) for cid in ids for target in targets]

    def run(job):
        cid, target = job
        try:
            return cid, loo_evaluate(zoo, ids[cid], target), None
        except Exception as exc:  # recorded, not fatal
            return cid, None, f"{cid}/{target}: {type(exc).__name__}: {exc}"

    cap = thread_cap()
    if cap >= 2 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    folds: list[tuple[str, LooResult]] = []
    for cid, result, error in outcomes:
        if error is not None:
            notes.append(error)
        else:
            folds.append((cid, result))
    mean_tau = {}
    for cid in ids:
        taus = [r.tau for c, r in folds if c == cid]
        mean_tau[cid] = float(np.mean(taus)) if taus else float("nan")
    return ComparisonReport(configs=ids, folds=folds, mean_tau=mean_tau, notes=notes)
