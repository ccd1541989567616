import csv
import json

import numpy as np
import pytest

from evolm import cli, dataset
from evolm.numerics import RngStream


def run(argv):
    return cli.main(argv)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "synth"
    assert run(["synth", "--out", str(out), "--count", "24", "--seed", "5"]) == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def chain(synth_dir, workdir, seed="7"):
    bundle = workdir / "bundle"
    feats = workdir / "features"
    report = workdir / "report"
    assert run([
        "pretrain", "--data", str(synth_dir), "--arch", "in_2c_2p", "--epochs", "1",
        "--batch", "6", "--lr", "0.01", "--seed", seed, "--out", str(bundle),
    ]) == 0
    assert run([
        "extract", "--data", str(synth_dir), "--bundle", str(bundle),
        "--seed", seed, "--out", str(feats),
    ]) == 0
    assert run([
        "evolve", "--features", str(feats / "features_train.csv"), "--bundle", str(bundle),
        "--hidden", "6", "--pop", "4", "--iters", "2", "--seed", seed,
    ]) == 0
    assert run([
        "eval", "--bundle", str(bundle), "--data", str(synth_dir), "--out", str(report),
    ]) == 0
    return bundle, feats, report


class TestSynth:
    def test_writes_loadable_tree(self, synth_dir):
        split = dataset.load_directory(synth_dir)
        assert split.class_counts("train") == {0: 17, 1: 17}
        assert split.class_counts("test") == {0: 7, 1: 7}
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert manifest["command"] == "synth"


class TestChain:
    def test_end_to_end_artifacts(self, synth_dir, tmp_path):
        bundle, feats, report = chain(synth_dir, tmp_path)
        assert (bundle / "cnn.json").exists()
        assert (bundle / "elm.json").exists()
        assert (bundle / "manifest.json").exists()
        assert (bundle / "sca_diagnostics.csv").exists()
        assert (feats / "features_train.csv").exists()
        assert (feats / "features_test.csv").exists()
        for name in ("grades.csv", "thresholds.csv", "roc.csv", "pr.csv", "summary.txt"):
            assert (report / name).exists()

    def test_default_threshold_grid(self, synth_dir, tmp_path):
        _, _, report = chain(synth_dir, tmp_path, seed="8")
        rows = read_csv(report / "thresholds.csv")
        assert [r[0] for r in rows[1:]] == ["0.1", "0.2", "0.3", "0.4"]

    def test_rerun_is_byte_identical(self, synth_dir, tmp_path):
        b1, f1, r1 = chain(synth_dir, tmp_path / "one", seed="9")
        b2, f2, r2 = chain(synth_dir, tmp_path / "two", seed="9")
        pairs = [
            (b1 / "cnn.json", b2 / "cnn.json"),
            (b1 / "elm.json", b2 / "elm.json"),
            (b1 / "sca_diagnostics.csv", b2 / "sca_diagnostics.csv"),
            (f1 / "features_train.csv", f2 / "features_train.csv"),
            (f1 / "features_test.csv", f2 / "features_test.csv"),
            (r1 / "grades.csv", r2 / "grades.csv"),
            (r1 / "thresholds.csv", r2 / "thresholds.csv"),
            (r1 / "roc.csv", r2 / "roc.csv"),
            (r1 / "pr.csv", r2 / "pr.csv"),
        ]
        for a, b in pairs:
            assert a.read_bytes() == b.read_bytes(), a.name

    def test_eval_with_baseline_reports_ranksum(self, synth_dir, tmp_path):
        bundle, _, report = chain(synth_dir, tmp_path, seed="11")
        out2 = tmp_path / "report2"
        assert run([
            "eval", "--bundle", str(bundle), "--data", str(synth_dir),
            "--out", str(out2), "--baseline-grades", str(report / "grades.csv"),
        ]) == 0
        assert "rank-sum" in (out2 / "summary.txt").read_text()

    def test_missing_bundle_fails_cleanly(self, synth_dir, tmp_path):
        code = run([
            "eval", "--bundle", str(tmp_path / "nope"), "--data", str(synth_dir),
            "--out", str(tmp_path / "r"),
        ])
        assert code == 1

    def test_augmented_chain_runs(self, synth_dir, tmp_path):
        bundle = tmp_path / "bundle"
        feats = tmp_path / "features"
        assert run([
            "pretrain", "--data", str(synth_dir), "--arch", "in_2c_2p", "--epochs", "1",
            "--augment", "3", "--seed", "3", "--out", str(bundle),
        ]) == 0
        assert run([
            "extract", "--data", str(synth_dir), "--bundle", str(bundle),
            "--augment", "3", "--seed", "3", "--out", str(feats),
        ]) == 0
        rows = read_csv(feats / "features_train.csv")
        # 17 positives tripled plus 17 negatives
        assert len(rows) - 1 == 17 * 3 + 17


class TestBench:
    def test_file_counts_and_monotone_curves(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EVOLM_THREADS", "2")
        out = tmp_path / "bench"
        assert run([
            "bench", "--functions", "tf4", "--dim", "3", "--pop", "6",
            "--iters", "10", "--seeds", "3", "--out", str(out),
        ]) == 0
        files = sorted(p.name for p in out.glob("tf4_seed*.csv"))
        assert files == ["tf4_seed0.csv", "tf4_seed1.csv", "tf4_seed2.csv"]
        for name in files:
            rows = read_csv(out / name)
            best = [float(r[1]) for r in rows[1:]]
            assert all(a >= b for a, b in zip(best, best[1:]))
        summary = read_csv(out / "summary.csv")
        assert len(summary) == 2
        assert summary[1][0] == "tf4"

    def test_unknown_function_is_usage_error(self, tmp_path):
        code = run(["bench", "--functions", "tf99", "--out", str(tmp_path / "x")])
        assert code == 1

    def test_thread_env_does_not_change_results(self, tmp_path, monkeypatch):
        def one(out, threads):
            monkeypatch.setenv("EVOLM_THREADS", threads)
            assert run([
                "bench", "--functions", "tf1", "--dim", "2", "--pop", "4",
                "--iters", "5", "--seeds", "2", "--out", str(out),
            ]) == 0
            return (out / "summary.csv").read_bytes()

        assert one(tmp_path / "a", "1") == one(tmp_path / "b", "4")


class TestSweep:
    def test_sixteen_rows_and_level_means(self, synth_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("EVOLM_THREADS", "4")
        levels = tmp_path / "levels.json"
        levels.write_text(json.dumps({
            "layers_config": ["in_2c_2p", "in_3c_2p", "in_4c_2p", "in_5c_2p"],
            "a": [0.25, 0.5, 0.75, 1.0],
            "batch": [4, 6, 8, 10],
        }))
        out = tmp_path / "sweep"
        assert run([
            "sweep", "--data", str(synth_dir), "--levels", str(levels),
            "--epochs", "1", "--pop", "4", "--iters", "2", "--hidden", "4",
            "--lr", "0.01", "--seed", "2", "--out", str(out),
        ]) == 0
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 17
        assert rows[0][-1] == "loss"
        means = read_csv(out / "level_means.csv")
        assert len(means) == 1 + 3 * 4
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["config"]["best_levels"]) == {"layers_config", "a", "batch"}

    def test_wrong_level_count_rejected(self, synth_dir, tmp_path):
        levels = tmp_path / "levels.json"
        levels.write_text(json.dumps({
            "layers_config": ["in_2c_2p"], "a": [1, 2, 3, 4], "batch": [4, 6, 8, 10],
        }))
        code = run([
            "sweep", "--data", str(synth_dir), "--levels", str(levels),
            "--out", str(tmp_path / "s"),
        ])
        assert code == 1
