import argparse
import os

import pytest

from rtge import cli


@pytest.fixture()
def corpus(tmp_path):
    """Small rotating-pattern corpus plus fast training defaults."""
    data = tmp_path / "data"
    rc = cli.main(["gen-synthetic", "--out-dir", str(data), "--entities", "12",
                   "--relations", "3", "--bins", "3"])
    assert rc == 0
    return data


FAST = ["--d", "8", "--kappa", "5", "--min-triples", "1"]


def _train(corpus, tmp_path, extra=()):
    ckpt = tmp_path / "model.ckpt"
    rc = cli.main(["train", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), *FAST, *extra])
    assert rc == 0
    return ckpt


def test_gen_synthetic_writes_three_splits(corpus):
    for split in ("train", "valid", "test"):
        lines = (corpus / f"{split}.txt").read_text().strip().splitlines()
        assert lines and all(len(l.split("\t")) == 5 for l in lines)


def test_preprocess_reports_bins_and_cache(corpus, tmp_path, capsys):
    cache = tmp_path / "graph.cache"
    rc = cli.main(["preprocess", "--train", str(corpus / "train.txt"),
                   "--cache", str(cache), "--min-triples", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("T=3")
    assert "bin 0 [" in out and "triples=" in out
    assert cache.exists()


def test_train_checkpoint_and_log(corpus, tmp_path):
    ckpt = tmp_path / "model.ckpt"
    log = tmp_path / "log.csv"
    rc = cli.main(["train", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), "--log-csv", str(log), *FAST])
    assert rc == 0
    assert ckpt.read_text().startswith("RTGE-CKPT v1\n")
    lines = log.read_text().strip().splitlines()
    assert lines[0] == "iter,J,task,smooth,penalty"
    assert len(lines) == 1 + 5
    i, j, task, smooth, pen = lines[1].split(",")
    assert i == "0"
    assert float(j) == pytest.approx(float(task) + float(smooth) + float(pen))


def test_train_from_cache(corpus, tmp_path):
    cache = tmp_path / "graph.cache"
    assert cli.main(["preprocess", "--train", str(corpus / "train.txt"),
                     "--cache", str(cache), "--min-triples", "1"]) == 0
    ckpt = tmp_path / "model.ckpt"
    rc = cli.main(["train", "--cache", str(cache),
                   "--checkpoint", str(ckpt), *FAST])
    assert rc == 0
    assert ckpt.exists()


def test_eval_emits_metrics_csv(corpus, tmp_path, capsys):
    ckpt = _train(corpus, tmp_path)
    capsys.readouterr()  # drop the training status line
    metrics = tmp_path / "metrics.csv"
    rc = cli.main(["eval", "--train", str(corpus / "train.txt"),
                   "--test", str(corpus / "test.txt"),
                   "--checkpoint", str(ckpt), "--metrics-out", str(metrics), *FAST])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "task,metric,value"
    for task in ("head", "tail", "relation", "time"):
        assert f"{task},mean_rank," in out
    assert metrics.read_text() == out


def test_eval_task_subset(corpus, tmp_path, capsys):
    ckpt = _train(corpus, tmp_path)
    capsys.readouterr()
    rc = cli.main(["eval", "--train", str(corpus / "train.txt"),
                   "--test", str(corpus / "test.txt"),
                   "--checkpoint", str(ckpt), "--tasks", "tail", *FAST])
    assert rc == 0
    out = capsys.readouterr().out
    assert "tail,mean_rank," in out and "head," not in out


def test_predict_tail_query(corpus, tmp_path, capsys):
    ckpt = _train(corpus, tmp_path)
    capsys.readouterr()
    rc = cli.main(["predict", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), "--topk", "3", *FAST,
                   "e0 r0 ? @bin1"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    label, loss = lines[0].split("\t")
    assert label.startswith("e")
    float(loss)


def test_predict_time_query(corpus, tmp_path, capsys):
    ckpt = _train(corpus, tmp_path)
    capsys.readouterr()
    rc = cli.main(["predict", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), "--topk", "2", *FAST,
                   "e0 r0 e1 @?"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(l.split("\t")[0].startswith("bin") for l in lines)


def test_predict_rejects_two_holes(corpus, tmp_path, capsys):
    ckpt = _train(corpus, tmp_path)
    rc = cli.main(["predict", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), *FAST, "? r0 ?"])
    assert rc == 2


def test_predict_unknown_entity_exit_2(corpus, tmp_path):
    ckpt = _train(corpus, tmp_path)
    rc = cli.main(["predict", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(ckpt), *FAST, "nosuch r0 ?"])
    assert rc == 2


def test_export_embeddings(corpus, tmp_path):
    ckpt = _train(corpus, tmp_path)
    out = tmp_path / "emb.csv"
    rc = cli.main(["export-embeddings", "--checkpoint", str(ckpt), "--out", str(out)])
    assert rc == 0
    assert out.read_text().startswith("kind,id,v1")


def test_missing_dataset_exit_2(tmp_path):
    rc = cli.main(["preprocess", "--train", str(tmp_path / "nope.txt")])
    assert rc == 2


def test_malformed_dataset_exit_2(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("a\tb\n")
    rc = cli.main(["preprocess", "--train", str(bad), "--min-triples", "1"])
    assert rc == 2


def test_divergence_exit_1(corpus, tmp_path):
    rc = cli.main(["train", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(tmp_path / "x.ckpt"),
                   "--d", "8", "--kappa", "5", "--min-triples", "1",
                   "--psi", "1e12"])
    assert rc == 1


def test_config_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nd = 32\ngamma = 4.0\nkappa=7\n")
    monkeypatch.setenv("TKGE_GAMMA", "8.0")
    args = argparse.Namespace(config=str(cfg_file), gamma=None, d=None, kappa=9)
    cfg = cli.resolve_config(args)
    assert cfg["d"] == 32          # file beats default
    assert cfg["gamma"] == 8.0     # env beats file
    assert cfg["kappa"] == 9       # flag beats env/file
    assert cfg["m"] == 5           # untouched default


def test_config_unknown_key(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("dd = 3\n")
    args = argparse.Namespace(config=str(cfg_file))
    with pytest.raises(Exception):
        cli.resolve_config(args)


def test_env_override_applies_to_train(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("TKGE_KAPPA", "2")
    log = tmp_path / "log.csv"
    rc = cli.main(["train", "--train", str(corpus / "train.txt"),
                   "--checkpoint", str(tmp_path / "m.ckpt"),
                   "--log-csv", str(log), "--d", "8", "--min-triples", "1"])
    assert rc == 0
    assert len(log.read_text().strip().splitlines()) == 1 + 2
