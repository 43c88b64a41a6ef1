"""Command-line surface wiring the pipeline stages end to end.

Subcommands: synth, similarity, logme, graph, embed, train, predict,
evaluate, ablate. Configuration comes from one JSON file plus flag
overrides; every resolved default is echoed into report.json. Exit
codes: 0 success, 1 usage error, 2 data/integrity error, 3 numerical
failure. ZGS_THREADS caps parallelism (0 = sequential).
"""

from __future__ import annotations

import argparse
import csv
import json
import pickle
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import predictor as predictor_mod
from .embed import EmbeddingTable, WalkConfig, train_embeddings
from .errors import ComputationError, DataError, MissingInput, NotFound
from .evaluate import (
    PipelineConfig,
    compare_strategies,
    eligible_targets,
    ratio_ablation,
)
from .predictor import FeatureSpec, assemble_features, feature_columns
from .registry import format_real, load_zoo
from .simfeat import (
    aggregate_features,
    similarity_matrix,
    write_embeddings,
    write_similarity,
    zoo_similarity,
)
from .synthzoo import SynthConfig, generate, write_zoo
from .transferability import TransferRecord, logme_score
from .zoograph import GraphConfig, build_graph, write_graph_csv
from . import report as report_mod

DEFAULT_RATIOS = (0.3, 0.5, 0.7, 1.0)
PREDICTOR_FILE = "predictor.pkl"
EMBEDDINGS_FILE = "embeddings_nodes.csv"
SCORES_FILE = "scores.csv"
FEATURES_DUMP = "features.csv"


class UsageError(Exception):
    """Bad flags or config schema; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_FEATURE_KEYS = {"metadata", "similarity", "transfer", "graph"}
_WALK_KEYS = {
    "p", "q", "walk_length", "walks_per_node", "window",
    "negatives_per_positive", "dim", "epochs", "learning_rate", "seed",
}
_GRAPH_KEYS = {
    "transfer_prune_threshold", "accuracy_prune_threshold",
    "negative_accuracy_threshold", "dd_fully_connected",
}
_TOP_KEYS = {
    "seed", "embedder", "predictor", "features", "graph", "walk",
    "topk", "gnn_input_dim", "configs",
}


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise UsageError(f"unknown config key(s) {sorted(unknown)} in {where}")


def _build_config(data: dict, seed_override=None) -> PipelineConfig:
    _check_keys(data, _TOP_KEYS - {"configs"}, "config")
    features = data.get("features", {})
    _check_keys(features, _FEATURE_KEYS, "config.features")
    walk = data.get("walk", {})
    _check_keys(walk, _WALK_KEYS, "config.walk")
    graph = data.get("graph", {})
    _check_keys(graph, _GRAPH_KEYS, "config.graph")

    seed = int(data.get("seed", 0))
    if seed_override is not None:
        seed = seed_override
    try:
        spec = FeatureSpec(
            use_metadata=bool(features.get("metadata", True)),
            use_similarity=bool(features.get("similarity", True)),
            use_transfer_score=bool(features.get("transfer", True)),
            use_graph=bool(features.get("graph", True)),
        )
        config = PipelineConfig(
            embedder=data.get("embedder", "node2vec"),
            predictor=data.get("predictor", "ridge"),
            feature_spec=spec,
            graph_config=GraphConfig(**graph),
            walk_config=WalkConfig(**{**walk, "seed": seed}),
            seed=seed,
            topk=tuple(int(k) for k in data.get("topk", (1, 5))),
            gnn_input_dim=int(data.get("gnn_input_dim", 16)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    return config


def _load_configs(path, seed_override=None):
    """Read the config JSON; returns a list of PipelineConfigs."""
    if path is None:
        return [_build_config({}, seed_override)]
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    _check_keys(data, _TOP_KEYS, "config")
    entries = data.get("configs")
    if entries is None:
        return [_build_config(data, seed_override)]
    base = {k: v for k, v in data.items() if k != "configs"}
    configs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise UsageError(f"{path}: configs[{i}] must be a JSON object")
        merged = dict(base)
        for key, value in entry.items():
            if key in ("features", "walk", "graph"):
                merged[key] = {**base.get(key, {}), **value}
            else:
                merged[key] = value
        configs.append(_build_config(merged, seed_override))
    return configs


def _full_graph_embeddings(zoo, config: PipelineConfig) -> EmbeddingTable:
    phi = zoo_similarity(zoo)
    graph = build_graph(zoo, phi, config.graph_config)
    walk = replace(config.walk_config, seed=config.seed)
    return train_embeddings(graph, config.embedder, walk, gnn_input_dim=config.gnn_input_dim)


def _cmd_synth(args) -> int:
    config = SynthConfig(
        n_models=args.models,
        n_datasets=args.datasets,
        latent_dim=args.latent_dim,
        noise_std=args.noise,
        feature_dim=args.feature_dim,
        seed=args.seed if args.seed is not None else 0,
        observed_fraction=args.fraction,
    )
    zoo, truth = generate(config)
    root = write_zoo(zoo, truth, args.out)
    print(f"wrote synthetic zoo ({config.n_models} models, {config.n_datasets} datasets) to {root}")
    return 0


def _cmd_similarity(args) -> int:
    zoo = load_zoo(args.zoo)
    missing = sorted(set(zoo.dataset_ids()) - set(zoo.features))
    if missing:
        raise MissingInput(f"datasets without feature matrices: {missing}")
    embeddings = [aggregate_features(zoo.features[d]) for d in sorted(zoo.features)]
    out = Path(args.out)
    write_embeddings(embeddings, out / "embeddings")
    write_similarity(similarity_matrix(embeddings), out / "similarity.csv")
    print(f"wrote embeddings and similarity for {len(embeddings)} datasets to {out}")
    return 0


def _cmd_logme(args) -> int:
    zoo = load_zoo(args.zoo)
    features_dir = Path(args.features_dir)
    if not features_dir.is_dir():
        raise MissingInput(f"features directory not found: {features_dir}")
    labels_cache: dict[str, np.ndarray] = {}
    records = []
    for path in sorted(features_dir.glob("*__*.csv")):
        stem = path.stem
        if stem.endswith("__labels"):
            continue
        model_id, dataset_id = stem.split("__", 1)
        if model_id not in zoo.model_ids() or dataset_id not in zoo.dataset_ids():
            raise NotFound(f"{path}: unknown model or dataset in file name")
        if dataset_id not in labels_cache:
            labels_path = features_dir / f"{dataset_id}__labels.csv"
            if not labels_path.is_file():
                raise MissingInput(f"labels file not found: {labels_path}")
            labels_cache[dataset_id] = np.loadtxt(labels_path, dtype=int, ndmin=1)
        R = np.loadtxt(path, delimiter=",", ndmin=2)
        num_classes = zoo.dataset(dataset_id).num_classes
        records.append(
            logme_score(R, labels_cache[dataset_id], num_classes,
                        model_id=model_id, dataset_id=dataset_id)
        )
    if not records:
        raise MissingInput(f"no <model>__<dataset>.csv feature files in {features_dir}")

    merged: dict[tuple[str, str, str], TransferRecord] = {
        (t.model_id, t.dataset_id, t.method): t for t in zoo.transfer_scores
    }
    for r in records:
        merged[(r.model_id, r.dataset_id, r.method)] = r
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "transfer_scores.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "dataset_id", "method", "score"])
        for key in sorted(merged):
            t = merged[key]
            writer.writerow([t.model_id, t.dataset_id, t.method, format_real(t.score)])
    print(f"scored {len(records)} (model, dataset) pairs; wrote {path}")
    return 0


def _cmd_graph(args) -> int:
    zoo = load_zoo(args.zoo)
    config = _load_configs(args.config, args.seed)[0]
    graph = build_graph(zoo, zoo_similarity(zoo), config.graph_config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_graph_csv(graph, out / "graph.csv")
    print(f"wrote graph with {len(graph.nodes)} nodes and {len(graph.edges)} edges to {path}")
    return 0


def _cmd_embed(args) -> int:
    zoo = load_zoo(args.zoo)
    config = _load_configs(args.config, args.seed)[0]
    table = _full_graph_embeddings(zoo, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = table.write_csv(out / EMBEDDINGS_FILE)
    print(f"wrote {len(table.vectors)} node embeddings (dim {table.dim}) to {path}")
    return 0


def _cmd_train(args) -> int:
    zoo = load_zoo(args.zoo)
    config = _load_configs(args.config, args.seed)[0]
    spec = config.feature_spec
    phi = zoo_similarity(zoo) if (spec.use_similarity or spec.use_graph) else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    embeddings = None
    if spec.use_graph:
        embeddings = _full_graph_embeddings(zoo, config)
        embeddings.write_csv(out / EMBEDDINGS_FILE)

    pairs = sorted({(r.model_id, r.dataset_id) for r in zoo.history if r.kind == "finetune"})
    rows = assemble_features(zoo, phi, embeddings, pairs, spec)
    model = predictor_mod.train(rows, config.predictor, seed=config.seed)

    columns = feature_columns(zoo, spec, embed_dim=config.walk_config.dim)
    with open(out / FEATURES_DUMP, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "dataset_id", "y"] + columns)
        for row in rows:
            writer.writerow(
                [row.model_id, row.dataset_id, _maybe_real(row.y)]
                + [format_real(v) for v in row.x]
            )
    with open(out / PREDICTOR_FILE, "wb") as fh:
        pickle.dump({"model": model, "config": asdict(config)}, fh)
    print(f"trained {config.predictor} on {len(rows)} rows; artifacts in {out}")
    return 0


def _maybe_real(value) -> str:
    return format_real(value) if value is not None else ""


def _cmd_predict(args) -> int:
    zoo = load_zoo(args.zoo)
    config = _load_configs(args.config, args.seed)[0]
    if args.target not in zoo.dataset_ids():
        raise NotFound(f"dataset {args.target!r} not in zoo")
    out = Path(args.out)
    model_path = out / PREDICTOR_FILE
    if not model_path.is_file():
        raise MissingInput(f"trained predictor not found: {model_path} (run `zgs train` first)")
    with open(model_path, "rb") as fh:
        model = pickle.load(fh)["model"]

    spec = config.feature_spec
    phi = zoo_similarity(zoo) if (spec.use_similarity or spec.use_graph) else None
    embeddings = None
    if spec.use_graph:
        emb_path = out / EMBEDDINGS_FILE
        if not emb_path.is_file():
            raise MissingInput(f"embeddings not found: {emb_path} (run `zgs train` first)")
        embeddings = EmbeddingTable.read_csv(emb_path)

    pairs = [(m, args.target) for m in sorted(zoo.model_ids())]
    rows = assemble_features(zoo, phi, embeddings, pairs, spec)
    scores = predictor_mod.predict(model, rows)
    s_col = scores.column(args.target)

    with open(out / SCORES_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "dataset_id", "score"])
        for model_id, s in zip(scores.model_ids, s_col):
            writer.writerow([model_id, args.target, format_real(s)])

    k = min(args.top_k, len(scores.model_ids))
    order = sorted(range(len(s_col)), key=lambda i: (-s_col[i], scores.model_ids[i]))
    print("model_id,score")
    for i in order[:k]:
        print(f"{scores.model_ids[i]},{format_real(s_col[i])}")
    return 0


def _cmd_evaluate(args) -> int:
    zoo = load_zoo(args.zoo)
    configs = _load_configs(args.config, args.seed)
    targets = [args.target] if args.target else None
    report = compare_strategies(zoo, configs, targets=targets)
    out = Path(args.out)
    report_mod.write_results_csv(report, out)
    report_mod.write_report_json(report, out)
    report_mod.render_comparison_figure(report, out)
    report_mod.render_topk_figure(report, out)
    for config in configs:
        if config.feature_spec.use_graph:
            _full_graph_embeddings(zoo, config).write_csv(out / EMBEDDINGS_FILE)
            break
    for cid, mean in report.mean_tau.items():
        print(f"{cid}: mean tau {mean:+.4f}")
    print(f"wrote results for {len(report.folds)} folds to {out}")
    return 0


def _cmd_ablate(args) -> int:
    zoo = load_zoo(args.zoo)
    config = _load_configs(args.config, args.seed)[0]
    ratios = tuple(args.ratio) if args.ratio else DEFAULT_RATIOS
    for ratio in ratios:
        if not 0.0 < ratio <= 1.0:
            raise UsageError(f"--ratio {ratio} outside (0, 1]")
    targets = [args.target] if args.target else eligible_targets(zoo)
    per_target = {
        target: ratio_ablation(zoo, config, target, ratios) for target in targets
    }
    out = Path(args.out)
    report_mod.write_ratio_csv(per_target, out)
    report_mod.render_ratio_figure(per_target, out)
    print(f"wrote ratio ablation over {len(targets)} targets to {out}")
    return 0


def _add_common(parser, zoo=True, config=True, out=True):
    if zoo:
        parser.add_argument("--zoo", required=True, help="zoo directory")
    if config:
        parser.add_argument("--config", help="JSON config file")
        parser.add_argument("--seed", type=int, help="override the config seed")
    if out:
        parser.add_argument("--out", required=True, help="output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="zgs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic zoo")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", type=int, default=40)
    p.add_argument("--datasets", type=int, default=12)
    p.add_argument("--latent-dim", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--feature-dim", type=int, default=8)
    p.add_argument("--fraction", type=float, default=0.7)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("similarity", help="dataset embeddings and similarity")
    _add_common(p, config=False)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("logme", help="transferability scores from feature files")
    _add_common(p, config=False)
    p.add_argument("--features-dir", required=True,
                   help="directory of <model>__<dataset>.csv and <dataset>__labels.csv")
    p.set_defaults(func=_cmd_logme)

    p = sub.add_parser("graph", help="build and dump the zoo graph")
    _add_common(p)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("embed", help="train node embeddings on the full graph")
    _add_common(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("train", help="train the score predictor")
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="rank models for a target dataset")
    _add_common(p)
    p.add_argument("--target", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="leave-one-out strategy evaluation")
    _add_common(p)
    p.add_argument("--target", help="evaluate a single target dataset")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="training-history ratio ablation")
    _add_common(p)
    p.add_argument("--target", help="restrict to a single target dataset")
    p.add_argument("--ratio", type=float, action="append",
                   help="history ratio in (0, 1]; repeatable")
    p.set_defaults(func=_cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
