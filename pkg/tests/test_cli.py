import json

import numpy as np
import pytest

from hyperproj.cli import main
from hyperproj.embeddings import load_embeddings
from hyperproj.projection import load_model


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def fixture_dir(tmp_path):
    out = tmp_path / "fix"
    assert run("synth", "--d", 6, "--n", 80, "--noise", 0, "--distractors", 2,
               "--seed", 5, "--out", out) == 0
    return out


@pytest.fixture
def split_dir(tmp_path, fixture_dir):
    out = tmp_path / "split"
    assert run("split", "--relations", fixture_dir / "relations.tsv",
               "--seed", 5, "--out", out) == 0
    return out


def train_quick(fixture_dir, split_dir, out, **flags):
    argv = ["train", "--embeddings", fixture_dir / "embeddings.txt",
            "--split-dir", split_dir, "--k", 1, "--epochs", 30,
            "--seed", 5, "--out", out]
    for key, value in flags.items():
        argv += [f"--{key.replace('_', '-')}", value]
    return run(*argv)


class TestSplitCommand:
    def test_bucket_word_sets_disjoint(self, tmp_path):
        rel = tmp_path / "r.tsv"
        rel.write_text("a\tb\thypernym\nc\td\thypernym\ne\tf\thypernym\ng\th\thypernym\n")
        out = tmp_path / "sp"
        assert run("split", "--relations", rel, "--fractions", 0.5, 0.25, 0.25,
                   "--seed", 1, "--out", out) == 0
        vocabs = []
        for bucket in ("train", "validation", "test"):
            words = set()
            for line in (out / f"{bucket}.tsv").read_text().splitlines():
                src, tgt, _ = line.split("\t")
                words |= {src, tgt}
            vocabs.append(words)
        assert not (vocabs[0] & vocabs[1])
        assert not (vocabs[0] & vocabs[2])
        assert not (vocabs[1] & vocabs[2])

    def test_rerun_is_byte_identical(self, tmp_path, fixture_dir):
        outs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            assert run("split", "--relations", fixture_dir / "relations.tsv",
                       "--seed", 9, "--out", out) == 0
            outs.append(out)
        for name in ("train.tsv", "validation.tsv", "test.tsv", "negatives.tsv",
                     "split_manifest.tsv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_bad_fractions_exit_2(self, tmp_path, fixture_dir):
        code = run("split", "--relations", fixture_dir / "relations.tsv",
                   "--fractions", 0.5, 0.2, 0.2, "--seed", 1, "--out", tmp_path / "sp")
        assert code == 2

    def test_manifest_records_hashes(self, tmp_path, fixture_dir, split_dir):
        manifest = json.loads((split_dir / "manifest.json").read_text())
        assert manifest["command"] == "split"
        assert str(fixture_dir / "relations.tsv") in manifest["inputs"]
        assert manifest["outputs"]
        assert "total" in manifest["timings"]


class TestClusterCommand:
    def test_writes_cluster_json(self, tmp_path, fixture_dir, split_dir):
        out = tmp_path / "clusters.json"
        assert run("cluster", "--embeddings", fixture_dir / "embeddings.txt",
                   "--split-dir", split_dir, "--k", 3, "--seed", 2, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["k"] == 3
        assert len(payload["centroids"]) == 3

    def test_train_accepts_precomputed_clusters(self, tmp_path, fixture_dir, split_dir):
        clusters = tmp_path / "clusters.json"
        assert run("cluster", "--embeddings", fixture_dir / "embeddings.txt",
                   "--split-dir", split_dir, "--k", 2, "--seed", 2, "--out", clusters) == 0
        model_path = tmp_path / "m.hprj"
        assert run("train", "--embeddings", fixture_dir / "embeddings.txt",
                   "--split-dir", split_dir, "--k", 2, "--epochs", 5, "--seed", 2,
                   "--clusters", clusters, "--out", model_path) == 0
        model = load_model(model_path)
        assert model.k == 2
        assert np.array_equal(model.clusters.centroids,
                              np.array(json.loads(clusters.read_text())["centroids"]))


class TestTrainCommand:
    def test_lambda_inert_under_baseline(self, tmp_path, fixture_dir, split_dir):
        m0, m5 = tmp_path / "m0.hprj", tmp_path / "m5.hprj"
        assert train_quick(fixture_dir, split_dir, m0, reg="none", **{"lambda": "0"}) == 0
        assert train_quick(fixture_dir, split_dir, m5, reg="none", **{"lambda": "5"}) == 0
        assert m0.read_bytes() == m5.read_bytes()

    def test_missing_embeddings_exit_2_no_partial_output(self, tmp_path, split_dir):
        model_path = tmp_path / "m.hprj"
        code = run("train", "--embeddings", tmp_path / "absent.txt",
                   "--split-dir", split_dir, "--k", 1, "--epochs", 5,
                   "--seed", 1, "--out", model_path)
        assert code == 2
        assert not model_path.exists()

    def test_writes_trace_csv(self, tmp_path, fixture_dir, split_dir):
        model_path = tmp_path / "m.hprj"
        assert train_quick(fixture_dir, split_dir, model_path) == 0
        trace = (tmp_path / "m.hprj.trace.csv").read_text().splitlines()
        assert trace[0] == "epoch,cluster,baseline_term,reg_term,total"
        assert len(trace) == 1 + 30  # one row per epoch for k=1

    def test_all_regularizers_train(self, tmp_path, fixture_dir, split_dir):
        for reg in ("asym", "asym-reproj", "neighbor", "neighbor-reproj"):
            out = tmp_path / f"{reg}.hprj"
            assert train_quick(fixture_dir, split_dir, out, reg=reg) == 0
            assert load_model(out).regularizer.value == reg


class TestEvalCommand:
    def test_report_and_pairs_written(self, tmp_path, fixture_dir, split_dir):
        model_path = tmp_path / "m.hprj"
        assert train_quick(fixture_dir, split_dir, model_path, epochs="200") == 0
        report_path = tmp_path / "report.json"
        assert run("eval", "--model", model_path,
                   "--embeddings", fixture_dir / "embeddings.txt",
                   "--test", split_dir / "test.tsv", "--l-max", 10,
                   "--out", report_path) == 0
        payload = json.loads(report_path.read_text())
        assert len(payload["hits"]) == 10
        assert payload["hits"] == sorted(payload["hits"])
        pairs_lines = (tmp_path / "report.json.pairs.tsv").read_text().splitlines()
        assert len(pairs_lines) == payload["n_pairs"]

    def test_malformed_test_tsv_exit_2(self, tmp_path, fixture_dir, split_dir):
        model_path = tmp_path / "m.hprj"
        assert train_quick(fixture_dir, split_dir, model_path) == 0
        bad = tmp_path / "bad.tsv"
        bad.write_text("only two\tcolumns\n")
        code = run("eval", "--model", model_path,
                   "--embeddings", fixture_dir / "embeddings.txt",
                   "--test", bad, "--out", tmp_path / "r.json")
        assert code == 2

    def test_perfect_projector_through_files(self, tmp_path):
        # gold hypernym vectors coincide with their hyponyms, so the
        # identity matrix is a perfect projector: hits must all be 1
        from conftest import make_model
        from hyperproj.projection import save_model

        emb = tmp_path / "e.txt"
        emb.write_text("x1 1 0\ny1 1 0\nx2 0 1\ny2 0 1\n")
        test = tmp_path / "t.tsv"
        test.write_text("x1\ty1\thypernym\nx2\ty2\thypernym\n")
        model_path = tmp_path / "ident.hprj"
        save_model(make_model(np.eye(2)), model_path)
        report_path = tmp_path / "r.json"
        assert run("eval", "--model", model_path, "--embeddings", emb,
                   "--test", test, "--l-max", 4, "--out", report_path) == 0
        payload = json.loads(report_path.read_text())
        assert payload["hits"] == [1.0, 1.0, 1.0, 1.0]
        assert payload["auc"] == 3.0

    def test_toy_rank_curve_through_files(self, tmp_path):
        # hand-built vectors: gold ranks 2 and 1 -> hit curve 0.5, 1, 1, 1
        from conftest import make_model
        from hyperproj.projection import save_model

        emb = tmp_path / "e.txt"
        emb.write_text("x1 1 0\ny1 0.9 0.3\nw 0.995 0.1\nx2 0 1\ny2 0.1 0.995\n")
        test = tmp_path / "t.tsv"
        test.write_text("x1\ty1\thypernym\nx2\ty2\thypernym\n")
        model_path = tmp_path / "ident.hprj"
        save_model(make_model(np.eye(2)), model_path)
        report_path = tmp_path / "r.json"
        assert run("eval", "--model", model_path, "--embeddings", emb,
                   "--test", test, "--l-max", 4, "--out", report_path) == 0
        payload = json.loads(report_path.read_text())
        assert payload["hits"] == [0.5, 1.0, 1.0, 1.0]


class TestPredictCommand:
    def test_identity_model_lists_own_neighbors(self, tmp_path, capsys):
        # build a tiny identity model through the library, then query the CLI
        from conftest import make_model
        from hyperproj.projection import save_model

        emb = tmp_path / "e.txt"
        emb.write_text("a 1 0\nb 0.9 0.1\nc 0 1\n")
        table = load_embeddings(emb)
        model = make_model(np.eye(2))
        model_path = tmp_path / "ident.hprj"
        save_model(model, model_path)
        assert run("predict", "--model", model_path, "--embeddings", emb,
                   "--l", 2, "a") == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split("\t")[:3] == ["a", "1", "b"]

    def test_planted_model_ranks_gold_first(self, tmp_path, capsys):
        fix, sp = tmp_path / "fix", tmp_path / "sp"
        model_path = tmp_path / "m.hprj"
        assert run("synth", "--d", 8, "--n", 200, "--noise", 0, "--seed", 23,
                   "--out", fix) == 0
        assert run("split", "--relations", fix / "relations.tsv", "--seed", 23,
                   "--out", sp) == 0
        assert run("train", "--embeddings", fix / "embeddings.txt", "--split-dir", sp,
                   "--k", 1, "--epochs", 700, "--seed", 23, "--out", model_path) == 0
        capsys.readouterr()
        first_train_pair = (sp / "train.tsv").read_text().splitlines()[0].split("\t")
        assert run("predict", "--model", model_path,
                   "--embeddings", fix / "embeddings.txt",
                   "--l", 5, first_train_pair[0]) == 0
        top = capsys.readouterr().out.splitlines()[0].split("\t")
        assert top[1] == "1"
        assert top[2] == first_train_pair[1]  # gold hypernym at rank 1

    def test_oov_warning_and_exit_codes(self, tmp_path, capsys):
        from conftest import make_model
        from hyperproj.projection import save_model

        emb = tmp_path / "e.txt"
        emb.write_text("a 1 0\nb 0 1\n")
        model_path = tmp_path / "m.hprj"
        save_model(make_model(np.eye(2)), model_path)
        assert run("predict", "--model", model_path, "--embeddings", emb,
                   "--l", 1, "a", "zzz") == 0
        err = capsys.readouterr().err
        assert "zzz" in err
        # every word unresolvable -> failure
        assert run("predict", "--model", model_path, "--embeddings", emb,
                   "--l", 1, "qqq") == 1


class TestSynthCommand:
    def test_same_seed_identical_fixtures(self, tmp_path):
        d1, d2 = tmp_path / "f1", tmp_path / "f2"
        for out in (d1, d2):
            assert run("synth", "--d", 5, "--n", 30, "--distractors", 1,
                       "--seed", 3, "--out", out) == 0
        assert (d1 / "embeddings.txt").read_bytes() == (d2 / "embeddings.txt").read_bytes()
        assert (d1 / "relations.tsv").read_bytes() == (d2 / "relations.tsv").read_bytes()

    def test_invalid_dimension_exit_2(self, tmp_path):
        assert run("synth", "--d", 1, "--n", 10, "--out", tmp_path / "f") == 2


class TestEndToEndDeterminism:
    def test_full_pipeline_reproduces_bytes(self, tmp_path, monkeypatch):
        # identical inputs means identical arguments too, so each run uses
        # the same relative paths from its own working directory
        artifacts = []
        for name in ("run1", "run2"):
            base = tmp_path / name
            base.mkdir()
            monkeypatch.chdir(base)
            assert run("synth", "--d", 6, "--n", 60, "--noise", 0.02,
                       "--distractors", 1, "--seed", 8, "--out", "fix") == 0
            assert run("split", "--relations", "fix/relations.tsv",
                       "--seed", 8, "--out", "sp") == 0
            assert run("cluster", "--embeddings", "fix/embeddings.txt",
                       "--split-dir", "sp", "--k", 2, "--seed", 8, "--out", "c.json") == 0
            assert run("train", "--embeddings", "fix/embeddings.txt",
                       "--split-dir", "sp", "--k", 2, "--clusters", "c.json",
                       "--epochs", 25, "--seed", 8, "--reg", "neighbor-reproj",
                       "--lambda", 0.5, "--out", "m.hprj") == 0
            assert run("eval", "--model", "m.hprj", "--embeddings", "fix/embeddings.txt",
                       "--test", "sp/test.tsv", "--out", "r.json") == 0
            artifacts.append(((base / "m.hprj").read_bytes(),
                              (base / "r.json").read_bytes(),
                              (base / "r.json.pairs.tsv").read_bytes()))
        assert artifacts[0] == artifacts[1]


def test_unknown_subcommand_exit_2():
    assert run("frobnicate") == 2


def test_usage_error_exit_2(tmp_path):
    assert run("split", "--relations") == 2
