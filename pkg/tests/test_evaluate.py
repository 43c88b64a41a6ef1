import dataclasses

import numpy as np
import pytest

from zgs.embed import WalkConfig
from zgs.errors import DegenerateVector, InsufficientData, InvalidK, NotFound
from zgs.evaluate import (
    LooResult,
    PipelineConfig,
    RatioSkipped,
    compare_strategies,
    config_id,
    eligible_targets,
    loo_evaluate,
    pearson,
    ratio_ablation,
    topk_accuracy,
    topk_accuracy_ids,
)
from zgs.predictor import FeatureSpec
from zgs.synthzoo import SynthConfig, generate

FAST_WALKS = WalkConfig(dim=16, walk_length=10, walks_per_node=4, window=3, epochs=3)


def fast_config(**kwargs):
    return PipelineConfig(walk_config=FAST_WALKS, **kwargs)


@pytest.fixture(scope="module")
def small_zoo():
    zoo, _ = generate(SynthConfig(n_models=15, n_datasets=5, noise_std=0.02, seed=11))
    return zoo


class TestPearson:
    def test_identical_is_one(self):
        rng = np.random.default_rng(0)
        s = rng.standard_normal(20)
        assert pearson(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_negated_is_minus_one(self):
        rng = np.random.default_rng(1)
        s = rng.standard_normal(20)
        assert pearson(s, -s) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_point_eight(self):
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)

    def test_affine_invariance_and_sign_flip(self):
        rng = np.random.default_rng(2)
        s = rng.standard_normal(15)
        t = rng.standard_normal(15)
        base = pearson(s, t)
        assert pearson(3.0 * s + 1.0, t) == pytest.approx(base, abs=1e-12)
        assert pearson(-2.0 * s + 5.0, t) == pytest.approx(-base, abs=1e-12)

    def test_constant_vector_degenerate(self):
        with pytest.raises(DegenerateVector):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_matches_direct_formula_on_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            s = rng.standard_normal(50)
            t = rng.standard_normal(50)
            expected = np.sum((s - s.mean()) * (t - t.mean())) / np.sqrt(
                np.sum((s - s.mean()) ** 2) * np.sum((t - t.mean()) ** 2)
            )
            assert pearson(s, t) == pytest.approx(expected, abs=1e-12)


class TestTopkAccuracy:
    def test_k_one_argmax(self):
        assert topk_accuracy([0.1, 0.9, 0.5], [0.3, 0.7, 0.4], 1) == 0.7

    def test_k_n_mean(self):
        t = [0.3, 0.7, 0.4]
        assert topk_accuracy([0.1, 0.9, 0.5], t, 3) == pytest.approx(np.mean(t))

    def test_hand_case(self):
        assert topk_accuracy([0.6, 0.8, 0.7], [0.5, 0.9, 0.4], 2) == pytest.approx(0.65)

    def test_rank_only_dependence(self):
        """Any strictly increasing transform of the scores leaves top-k
        unchanged."""
        rng = np.random.default_rng(4)
        s = rng.standard_normal(10)
        t = rng.uniform(0, 1, 10)
        for k in (1, 3, 10):
            base = topk_accuracy(s, t, k)
            assert topk_accuracy(np.exp(s), t, k) == base
            assert topk_accuracy(5 * s + 2, t, k) == base

    def test_ties_break_by_model_id(self):
        s = [0.5, 0.5, 0.1]
        t = [0.2, 0.9, 0.4]
        assert topk_accuracy_ids(s, t, ["b", "a", "c"], 1) == 0.9  # "a" wins the tie

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            topk_accuracy([0.1], [0.2], 2)


class TestLooEvaluate:
    def test_training_rows_never_reference_target(self, small_zoo):
        target = small_zoo.dataset_ids()[0]
        seen = []
        loo_evaluate(small_zoo, fast_config(seed=1), target, audit=seen.append)
        assert len(seen) == 1
        assert all(row.dataset_id != target for row in seen[0])
        assert len(seen[0]) > 0

    def test_deterministic(self, small_zoo):
        target = small_zoo.dataset_ids()[1]
        config = fast_config(seed=3)
        a = loo_evaluate(small_zoo, config, target)
        b = loo_evaluate(small_zoo, config, target)
        assert a == b

    def test_unknown_target(self, small_zoo):
        with pytest.raises(NotFound):
            loo_evaluate(small_zoo, fast_config(), "ghost")

    def test_insufficient_records(self, small_zoo):
        target = small_zoo.dataset_ids()[0]
        pruned = small_zoo.with_history(
            [r for r in small_zoo.history
             if not (r.dataset_id == target and r.kind == "finetune")]
        )
        with pytest.raises(InsufficientData):
            loo_evaluate(pruned, fast_config(), target)

    def test_result_fields(self, small_zoo):
        target = small_zoo.dataset_ids()[2]
        result = loo_evaluate(small_zoo, fast_config(seed=2), target)
        assert result.target_dataset_id == target
        assert -1.0 <= result.tau <= 1.0
        assert set(result.topk_accuracy) == {1, 5}
        assert result.n_models == len(
            {r.model_id for r in small_zoo.finetune_records(target)}
        )

    @pytest.mark.parametrize("embedder", ["node2vec_plus", "graphsage", "gat"])
    def test_other_embedders_run(self, small_zoo, embedder):
        target = small_zoo.dataset_ids()[0]
        config = fast_config(seed=1, embedder=embedder)
        result = loo_evaluate(small_zoo, config, target)
        assert np.isfinite(result.tau)

    @pytest.mark.parametrize("pred", ["forest", "gbm"])
    def test_other_predictors_run(self, small_zoo, pred):
        target = small_zoo.dataset_ids()[0]
        spec = FeatureSpec(use_metadata=True, use_similarity=True,
                           use_transfer_score=True, use_graph=False)
        config = fast_config(seed=1, predictor=pred, feature_spec=spec)
        result = loo_evaluate(small_zoo, config, target)
        assert np.isfinite(result.tau)


class TestRatioAblation:
    def test_full_ratio_equals_plain_loo(self, small_zoo):
        target = small_zoo.dataset_ids()[0]
        config = fast_config(seed=5)
        results = ratio_ablation(small_zoo, config, target, [1.0])
        assert results[1.0] == loo_evaluate(small_zoo, config, target)

    def test_floor_rule_on_training_rows(self, small_zoo):
        """r = 0.5 trains on exactly floor(0.5 * |non-target history|)
        records (checked on a finetune-only zoo via the audit hook)."""
        zoo = small_zoo.with_history(
            [r for r in small_zoo.history if r.kind == "finetune"]
        )
        target = zoo.dataset_ids()[0]
        non_target = [r for r in zoo.history if r.dataset_id != target]
        seen = []

        import zgs.evaluate as ev
        original = ev.loo_evaluate

        def spy(z, config, tgt, audit=None):
            return original(z, config, tgt, audit=seen.append)

        config = fast_config(
            seed=5,
            feature_spec=FeatureSpec(use_metadata=True, use_similarity=False,
                                     use_transfer_score=False, use_graph=False),
        )
        try:
            ev.loo_evaluate = spy
            out = ratio_ablation(zoo, config, target, [0.5])
        finally:
            ev.loo_evaluate = original
        assert isinstance(out[0.5], LooResult)
        assert len(seen[0]) == int(np.floor(0.5 * len(non_target)))

    def test_invalid_ratio(self, small_zoo):
        with pytest.raises(ValueError):
            ratio_ablation(small_zoo, fast_config(), small_zoo.dataset_ids()[0], [0.0])

    def test_skip_entry_when_dataset_emptied(self):
        zoo, _ = generate(SynthConfig(n_models=4, n_datasets=3, seed=7,
                                      observed_fraction=1.0))
        config = fast_config(
            seed=1,
            feature_spec=FeatureSpec(use_metadata=True, use_similarity=False,
                                     use_transfer_score=False, use_graph=False),
        )
        target = zoo.dataset_ids()[0]
        results = ratio_ablation(zoo, config, target, [0.1])
        assert isinstance(results[0.1], (LooResult, RatioSkipped))


class TestCompareStrategies:
    def test_identical_configs_identical_means(self, small_zoo):
        config = fast_config(
            seed=2,
            feature_spec=FeatureSpec(use_metadata=True, use_similarity=True,
                                     use_transfer_score=True, use_graph=False),
        )
        report = compare_strategies(small_zoo, [config, config])
        means = list(report.mean_tau.values())
        assert len(means) == 2
        assert means[0] == means[1]

    def test_report_row_count(self, small_zoo):
        configs = [
            fast_config(seed=1, feature_spec=FeatureSpec(
                use_metadata=True, use_similarity=False,
                use_transfer_score=False, use_graph=False)),
            fast_config(seed=1, feature_spec=FeatureSpec(
                use_metadata=False, use_similarity=True,
                use_transfer_score=True, use_graph=False)),
        ]
        report = compare_strategies(small_zoo, configs)
        assert len(report.mean_tau) == len(configs)
        targets = eligible_targets(small_zoo)
        assert len(report.folds) == len(configs) * len(targets)

    def test_low_variance_dataset_skipped_with_note(self, small_zoo):
        flat = [
            dataclasses.replace(r, accuracy=0.5)
            if r.dataset_id == small_zoo.dataset_ids()[0] and r.kind == "finetune"
            else r
            for r in small_zoo.history
        ]
        zoo = small_zoo.with_history(flat)
        notes = []
        targets = eligible_targets(zoo, notes)
        assert small_zoo.dataset_ids()[0] not in targets
        assert any("std" in n for n in notes)

    def test_thread_cap_does_not_change_results(self, small_zoo, monkeypatch):
        """ZGS_THREADS >= 2 runs folds in a pool with identical results."""
        config = fast_config(
            seed=4,
            feature_spec=FeatureSpec(use_metadata=True, use_similarity=True,
                                     use_transfer_score=True, use_graph=False),
        )
        monkeypatch.delenv("ZGS_THREADS", raising=False)
        sequential = compare_strategies(small_zoo, [config])
        monkeypatch.setenv("ZGS_THREADS", "3")
        pooled = compare_strategies(small_zoo, [config])
        assert pooled.mean_tau == sequential.mean_tau
        assert sorted(map(repr, pooled.folds)) == sorted(map(repr, sequential.folds))

    def test_failures_recorded_not_fatal(self, small_zoo):
        # a config whose embedder crashes on purpose: gnn with odd dim
        bad = PipelineConfig(
            seed=1,
            embedder="graphsage",
            walk_config=dataclasses.replace(FAST_WALKS, dim=15),
        )
        report = compare_strategies(small_zoo, [bad])
        assert report.folds == []
        assert report.notes
        assert np.isnan(report.mean_tau[config_id(bad)])


class TestConfigId:
    def test_mentions_parts(self):
        cid = config_id(fast_config())
        assert "ridge" in cid
        assert "node2vec" in cid
        assert "graph" in cid

    def test_graphless_config_omits_embedder(self):
        spec = FeatureSpec(use_metadata=True, use_similarity=False,
                           use_transfer_score=False, use_graph=False)
        cid = config_id(fast_config(feature_spec=spec))
        assert "node2vec" not in cid
