import csv
import json

import numpy as np
import pytest

from zgs.cli import main

FAST_CFG = {
    "seed": 7,
    "embedder": "node2vec",
    "predictor": "ridge",
    "walk": {"dim": 16, "walk_length": 8, "walks_per_node": 3, "window": 3, "epochs": 2},
}


@pytest.fixture(scope="module")
def zoo_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "zoo"
    assert main(["synth", "--seed", "7", "--models", "12", "--datasets", "4",
                 "--out", str(root)]) == 0
    return root


@pytest.fixture()
def cfg_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(FAST_CFG))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSynth:
    def test_writes_registry_and_truth(self, zoo_dir):
        for name in ("models.csv", "datasets.csv", "history.csv",
                     "transfer_scores.csv", "truth.csv"):
            assert (zoo_dir / name).is_file(), name
        assert (zoo_dir / "features").is_dir()


class TestSimilarity:
    def test_writes_embeddings_and_similarity(self, zoo_dir, tmp_path):
        out = tmp_path / "sim"
        assert main(["similarity", "--zoo", str(zoo_dir), "--out", str(out)]) == 0
        rows = read_csv(out / "similarity.csv")
        assert rows[0] == ["dataset_a", "dataset_b", "phi"]
        assert len(rows) == 1 + 4 * 3 // 2  # unordered pairs
        assert len(list((out / "embeddings").glob("*.csv"))) == 4


class TestGraphAndEmbed:
    def test_graph_dump(self, zoo_dir, cfg_file, tmp_path):
        out = tmp_path / "g"
        assert main(["graph", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--out", str(out)]) == 0
        rows = read_csv(out / "graph.csv")
        assert rows[0] == ["a_kind", "a_id", "b_kind", "b_id", "edge_kind", "weight", "label"]
        kinds = {r[4] for r in rows[1:]}
        assert "dd_similarity" in kinds
        assert "md_performance" in kinds

    def test_embeddings_csv(self, zoo_dir, cfg_file, tmp_path):
        out = tmp_path / "e"
        assert main(["embed", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--out", str(out)]) == 0
        rows = read_csv(out / "embeddings_nodes.csv")
        assert rows[0][:2] == ["kind", "id"]
        assert len(rows[0]) == 2 + 16
        assert len(rows) == 1 + 12 + 4  # every node


class TestTrainPredict:
    def test_train_then_predict_topk(self, zoo_dir, cfg_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["train", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--out", str(out)]) == 0
        assert (out / "predictor.pkl").is_file()
        features = read_csv(out / "features.csv")
        assert features[0][:3] == ["model_id", "dataset_id", "y"]
        assert "ds_log10_samples" in features[0]
        assert "m_emb0" in features[0]
        capsys.readouterr()

        assert main(["predict", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--target", "d00", "--top-k", "1", "--out", str(out)]) == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert printed[0] == "model_id,score"
        assert len(printed) == 2  # exactly one ranked row for k=1
        scores = read_csv(out / "scores.csv")
        assert scores[0] == ["model_id", "dataset_id", "score"]
        assert len(scores) == 1 + 12

    def test_predict_without_train_is_data_error(self, zoo_dir, cfg_file, tmp_path):
        code = main(["predict", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--target", "d00", "--out", str(tmp_path / "empty")])
        assert code == 2


class TestEvaluate:
    def test_results_row_per_dataset(self, cfg_file, tmp_path, capsys):
        zoo = tmp_path / "zoo12"
        assert main(["synth", "--seed", "42", "--out", str(zoo)]) == 0
        out = tmp_path / "eval"
        assert main(["evaluate", "--zoo", str(zoo), "--config", str(cfg_file),
                     "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        assert rows[0] == ["config_id", "target_dataset", "tau", "top1", "top5"]
        assert len(rows) == 1 + 12  # one row per dataset
        for name in ("report.json", "comparison.png", "topk.png", "embeddings_nodes.csv"):
            assert (out / name).is_file(), name
        report = json.loads((out / "report.json").read_text())
        assert report["configs"]  # config echo with defaults
        for cfg in report["configs"].values():
            assert cfg["walk_config"]["dim"] == 16
            assert cfg["graph_config"]["transfer_prune_threshold"] == 0.5

    def test_single_target_flag(self, zoo_dir, cfg_file, tmp_path):
        out = tmp_path / "eval1"
        assert main(["evaluate", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--target", "d01", "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        assert len(rows) == 2
        assert rows[1][1] == "d01"


class TestAblate:
    def test_ratio_outputs(self, zoo_dir, cfg_file, tmp_path):
        out = tmp_path / "ablate"
        assert main(["ablate", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                     "--target", "d00", "--ratio", "0.5", "--ratio", "1.0",
                     "--out", str(out)]) == 0
        rows = read_csv(out / "ratio_results.csv")
        assert rows[0] == ["ratio", "target_dataset", "tau", "note"]
        assert len(rows) == 3
        assert (out / "ratio.png").is_file()


class TestLogme:
    def test_scores_written(self, zoo_dir, tmp_path):
        from zgs.registry import load_zoo

        rng = np.random.default_rng(0)
        fdir = tmp_path / "probe"
        fdir.mkdir()
        num_classes = load_zoo(zoo_dir).dataset("d00").num_classes
        labels = np.concatenate(
            [np.arange(num_classes), rng.integers(0, num_classes, size=30)]
        )
        np.savetxt(fdir / "d00__labels.csv", labels, fmt="%d")
        for model in ("m000", "m001"):
            np.savetxt(fdir / f"{model}__d00.csv",
                       rng.standard_normal((len(labels), 4)), delimiter=",")
        out = tmp_path / "scores"
        assert main(["logme", "--zoo", str(zoo_dir), "--features-dir", str(fdir),
                     "--out", str(out)]) == 0
        rows = read_csv(out / "transfer_scores.csv")
        assert rows[0] == ["model_id", "dataset_id", "method", "score"]
        logme_rows = [r for r in rows[1:] if r[2] == "logme"]
        assert {(r[0], r[1]) for r in logme_rows} == {("m000", "d00"), ("m001", "d00")}
        # ingested synth scores are preserved alongside
        assert any(r[2] == "ingested" for r in rows[1:])


class TestErrors:
    def test_missing_zoo_exits_2_naming_path(self, cfg_file, tmp_path, capsys):
        code = main(["evaluate", "--zoo", str(tmp_path / "nozoo"),
                     "--config", str(cfg_file), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "nozoo" in capsys.readouterr().err

    def test_missing_models_csv_exits_2(self, zoo_dir, cfg_file, tmp_path, capsys):
        import shutil
        broken = tmp_path / "broken"
        shutil.copytree(zoo_dir, broken)
        (broken / "models.csv").unlink()
        code = main(["evaluate", "--zoo", str(broken), "--config", str(cfg_file),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "models.csv" in capsys.readouterr().err

    def test_usage_error_exits_1(self, capsys):
        assert main(["evaluate", "--nope"]) == 1

    def test_bad_config_key_exits_1(self, zoo_dir, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"walk": {"dmi": 16}}))
        code = main(["evaluate", "--zoo", str(zoo_dir), "--config", str(bad),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        assert "dmi" in capsys.readouterr().err

    def test_unknown_command_exits_1(self):
        assert main(["frobnicate"]) == 1


class TestDeterminism:
    def test_identical_runs_byte_identical_outputs(self, zoo_dir, cfg_file, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["evaluate", "--zoo", str(zoo_dir), "--config", str(cfg_file),
                         "--target", "d02", "--out", str(out)]) == 0
        for name in ("results.csv", "embeddings_nodes.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
