import csv
import subprocess
import sys

import numpy as np
import pytest

from twodpca.cli import main
from twodpca.dataset import LabeledDataset, load_csv, save_csv, split, SplitSpec
from twodpca.formats import read_pgm, write_pgm
from twodpca.modelio import load_model
from twodpca.recognition import extract_features, features

from conftest import random_dataset


@pytest.fixture
def corpus(tmp_path, rng):
    ds = random_dataset(rng, sizes=(6, 6, 6), h=8, w=8)
    path = tmp_path / "corpus.csv"
    save_csv(ds, path)
    return path


def _kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_fit_prints_summary(tmp_path, corpus, capsys):
    code, out, _ = _run(capsys, "fit", "--variant", "r2dpca", "--gamma", "0", "--s", "1",
                        "--p", "2.2", "--k", "5", "--data", corpus, "--split-train", "4",
                        "--out", tmp_path / "m.b2dp")
    assert code == 0
    kv = _kv(out)
    assert len(kv["omega"].split(",")) == 3
    assert len(kv["objectives_right"].split(",")) == 5
    assert all(int(i) >= 1 for i in kv["iterations_left"].split(","))
    assert load_model(tmp_path / "m.b2dp").config.gamma == 0.0


def test_gamma_one_and_g2dpca_write_identical_models(tmp_path, corpus, capsys):
    common = ["--s", "1.5", "--p", "2.6", "--k", "3", "--data", corpus, "--seed", "7",
              "--init", "random", "--split-train", "4"]
    assert _run(capsys, "fit", "--variant", "g2dpca", *common, "--out", tmp_path / "a")[0] == 0
    assert _run(capsys, "fit", "--variant", "r2dpca", "--gamma", "1", *common,
                "--out", tmp_path / "b")[0] == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_fit_missing_dataset_leaves_nothing(tmp_path, capsys):
    code, out, err = _run(capsys, "fit", "--k", "2", "--data", tmp_path / "nope",
                          "--out", tmp_path / "m.b2dp")
    assert code == 3 and out == "" and "nope" in err
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("extra", [["--gamma", "2"], ["--k", "0"], ["--variant", "g2dpca",
                                                                    "--s", "0.5"]])
def test_fit_config_errors(tmp_path, corpus, capsys, extra):
    argv = ["fit", "--k", "2", "--data", corpus, "--out", tmp_path / "m"] + extra
    assert _run(capsys, *argv)[0] == 2
    assert not (tmp_path / "m").exists()


def test_fit_numeric_failure(tmp_path, capsys):
    flat = LabeledDataset(np.zeros((4, 3, 3)), [0, 0, 1, 1], ("a", "b"))
    save_csv(flat, tmp_path / "flat.csv")
    code, _, err = _run(capsys, "fit", "--variant", "g2dpca", "--k", "1", "--data",
                        tmp_path / "flat.csv", "--out", tmp_path / "m")
    assert code == 4 and "orthogonal" in err


def test_fit_from_config_with_override(tmp_path, corpus, capsys):
    (tmp_path / "plan.toml").write_text(f"""
[dataset]
path = "{corpus.name}"
[split]
per_class_train = 4
seed = 2
[[methods]]
variant = "g2dpca"
s = 1.0
p = 2.0
[sweep]
k = [2]
""")
    code, out, _ = _run(capsys, "fit", "--config", tmp_path / "plan.toml", "--k", "3",
                        "--out", tmp_path / "m")
    assert code == 0 and _kv(out)["variant"] == "g2dpca"
    model = load_model(tmp_path / "m")
    assert model.U.shape[1] == 3 and model.config.solver.s == 1.0


def test_eval_training_set_as_probes(tmp_path, corpus, capsys):
    _run(capsys, "fit", "--variant", "2dpca", "--k", "8", "--data", corpus,
         "--out", tmp_path / "m")
    code, out, _ = _run(capsys, "eval", "--model", tmp_path / "m", "--gallery", corpus,
                        "--probes", corpus, "--out", tmp_path / "p.csv")
    assert code == 0 and _kv(out)["accuracy"] == "1.000000"
    with open(tmp_path / "p.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 18 and all(float(r["distance"]) == 0.0 for r in rows)


def test_eval_matches_distance_table(tmp_path, corpus, capsys):
    _run(capsys, "fit", "--variant", "g2dpca", "--s", "1.2", "--k", "3", "--data", corpus,
         "--split-train", "4", "--seed", "5", "--out", tmp_path / "m")
    code, out, _ = _run(capsys, "eval", "--model", tmp_path / "m", "--data", corpus,
                        "--split-train", "4", "--seed", "5", "--out", tmp_path / "p.csv")
    assert code == 0
    model = load_model(tmp_path / "m")
    train, test = split(load_csv(corpus), SplitSpec(4, 5))
    G = extract_features(model, train).features * model.D
    T = features(model, test) * model.D
    table = np.sqrt(((T[:, None] - G[None]) ** 2).sum(axis=(2, 3)))
    oracle = np.mean(train.labels[table.argmin(axis=1)] == test.labels)
    assert _kv(out)["accuracy"] == f"{oracle:.6f}"


def test_eval_data_errors(tmp_path, corpus, capsys, rng):
    _run(capsys, "fit", "--variant", "2dpca", "--k", "2", "--data", corpus,
         "--out", tmp_path / "m")
    (tmp_path / "empty").mkdir()
    code, _, _ = _run(capsys, "eval", "--model", tmp_path / "m", "--gallery", corpus,
                      "--probes", tmp_path / "empty")
    assert code == 3
    save_csv(random_dataset(rng, sizes=(2,), h=3, w=3), tmp_path / "small.csv")
    code, _, err = _run(capsys, "eval", "--model", tmp_path / "m", "--gallery", corpus,
                        "--probes", tmp_path / "small.csv")
    assert code == 3 and "3x3" in err


def test_reconstruct_full_rank_and_monotone(tmp_path, capsys, rng):
    imgs = tmp_path / "imgs"
    for cls in ("a", "b"):
        (imgs / cls).mkdir(parents=True)
        for i in range(4):
            write_pgm(imgs / cls / f"{i}.pgm", rng.random((8, 8)))
    _run(capsys, "fit", "--variant", "g2dpca", "--k", "8", "--data", imgs,
         "--tol", "1e-14", "--out", tmp_path / "m")
    code, out, _ = _run(capsys, "reconstruct", "--model", tmp_path / "m", "--images", imgs,
                        "--out-dir", tmp_path / "rec")
    assert code == 0
    with open(tmp_path / "rec" / "ratios.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 and all(abs(float(r["ratio"]) - 1) < 1e-10 for r in rows)
    assert read_pgm(tmp_path / "rec" / "a__0_k8x8.pgm")[0].shape == (8, 8)
    means = []
    for k in (1, 2, 4, 8):
        _, out, _ = _run(capsys, "reconstruct", "--model", tmp_path / "m", "--images", imgs,
                         "--k1", k, "--k2", k, "--out-dir", tmp_path / f"r{k}")
        means.append(float(_kv(out)["mean_ratio"]))
    assert means == sorted(means)


def test_reconstruct_rejects_zero_k(tmp_path, corpus, capsys):
    _run(capsys, "fit", "--variant", "2dpca", "--k", "2", "--data", corpus,
         "--out", tmp_path / "m")
    code, _, _ = _run(capsys, "reconstruct", "--model", tmp_path / "m", "--images", corpus,
                      "--k1", "0", "--k2", "0", "--out-dir", tmp_path / "rec")
    assert code == 2


def test_sweep_and_toy_are_reproducible(tmp_path, corpus, capsys):
    (tmp_path / "plan.toml").write_text(f"""
[dataset]
path = "{corpus.name}"
[split]
per_class_train = 4
seeds = [0, 1]
[[methods]]
variant = "2dpca"
[[methods]]
variant = "r2dpca"
gamma = 0.5
[sweep]
k_max = 3
[output]
results = "r.csv"
figure_data = "f.csv"
timing = false
""")
    code, out, _ = _run(capsys, "--serial", "sweep", "--config", tmp_path / "plan.toml")
    assert code == 0 and _kv(out)["rows"] == "12"
    first = (tmp_path / "r.csv").read_bytes()
    _run(capsys, "sweep", "--config", tmp_path / "plan.toml", "--jobs", "2")
    assert (tmp_path / "r.csv").read_bytes() == first
    assert (tmp_path / "f.csv").read_text().startswith("method,k,accuracy\n")
    _run(capsys, "toy", "--n", "4", "--seeds", "3", "--out", tmp_path / "t1.csv")
    _run(capsys, "toy", "--n", "4", "--seeds", "3", "--out", tmp_path / "t2.csv")
    assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t2.csv").read_bytes()


def test_weights(corpus, capsys):
    code, out, _ = _run(capsys, "weights", "--data", corpus)
    omega = [float(x) for x in _kv(out)["omega"].split(",")]
    assert code == 0 and len(omega) == 3 and abs(sum(omega) - 1) < 1e-12


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "twodpca", "--version"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("twodpca ")
