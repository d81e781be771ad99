import json

import numpy as np
import pytest

import tmforecast.cli as cli
from tmforecast.cli import main
from tmforecast.dataio import load_csv
from tmforecast.errors import TrainingDivergedError
from tmforecast.neural import load_model


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "tm.csv"
    assert main(["synth", "--nodes", "2", "--slots", "80", "--seed", "3", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def model(data, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "m.npz"
    assert main(["train", "--data", str(data), "--window", "4", "--hidden", "5", "--epochs", "3",
                 "--out", str(path)]) == 0
    return path


def test_synth(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    flags = ["synth", "--nodes", "23", "--slots", "309", "--seed", "1"]
    assert main(flags + ["--out", str(a)]) == 0
    assert main(flags + ["--out", str(b)]) == 0
    assert len(a.read_text().splitlines()) == 310
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["command"] == "synth" and manifest["seed"] == 1
    assert manifest["config"]["slots"] == 309


@pytest.mark.parametrize("flags", [
    ["--nodes", "0"], ["--slots", "-3"], ["--set", "noise_phi=2"], ["--set", "nonsense=1"],
])
def test_synth_usage_errors(tmp_path, flags):
    assert main(["synth", *flags, "--out", str(tmp_path / "x.csv")]) == 2


def test_synth_settings(tmp_path):
    conf = tmp_path / "gen.conf"
    conf.write_text("noise_sigma = 0\nspike_rate = 0\ndiurnal_amplitude=0\nweekly_amplitude=0\n")
    out = tmp_path / "flat.csv"
    assert main(["synth", "--nodes", "2", "--slots", "10", "--config", str(conf), "--out", str(out)]) == 0
    v = load_csv(out).values
    assert np.all(v == v[0])
    manifest = json.loads((tmp_path / "flat.csv.manifest.json").read_text())
    assert "config" in manifest["inputs"]


def test_train_outputs(model, capsys):
    curve = (model.parent / "m.npz.loss.csv").read_text().splitlines()
    assert curve[0] == "epoch,train_mse" and len(curve) == 4
    saved = load_model(model)
    assert saved.n_nodes == 2 and saved.window == 4
    manifest = json.loads((model.parent / "m.npz.manifest.json").read_text())
    assert manifest["config"]["lr"] == 0.01 and manifest["inputs"]["data"]["sha256"]


def test_train_usage_errors(data, tmp_path):
    out = str(tmp_path / "m.npz")
    assert main(["train", "--data", str(data), "--window", "0", "--out", out]) == 2
    assert main(["train", "--data", str(data), "--train-len", "80", "--out", out]) == 2
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--out", out]) == 2


def test_train_reports_final_mse(data, tmp_path, capsys):
    assert main(["train", "--data", str(data), "--window", "4", "--hidden", "3", "--epochs", "2",
                 "--train-len", "60", "--out", str(tmp_path / "m.npz")]) == 0
    out = capsys.readouterr().out
    assert "final training MSE" in out and "60 training slots, 20 held out" in out


def test_train_on_309_slots_leaves_46(tmp_path, capsys):
    data = tmp_path / "tm.csv"
    main(["synth", "--nodes", "1", "--slots", "309", "--out", str(data)])
    main(["train", "--data", str(data), "--window", "10", "--hidden", "2", "--epochs", "1",
          "--train-len", "263", "--out", str(tmp_path / "m.npz")])
    capsys.readouterr()
    assert main(["evaluate", "--model", str(tmp_path / "m.npz"), "--data", str(data),
                 "--train-len", "263", "--out", str(tmp_path / "e.csv")]) == 0
    assert "over 46 predictions" in capsys.readouterr().out


def test_divergence_exit_code(data, tmp_path, monkeypatch):
    def diverge(net, data, cfg, callback=None):
        raise TrainingDivergedError(7, float("inf"))

    monkeypatch.setattr(cli, "train", diverge)
    assert main(["train", "--data", str(data), "--out", str(tmp_path / "m.npz")]) == 5


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,f0,f1,f2\n0,1,2,3\n")
    assert main(["train", "--data", str(bad), "--out", str(tmp_path / "m.npz")]) == 3
    junk = tmp_path / "junk.npz"
    junk.write_bytes(b"not a model")
    assert main(["predict", "--model", str(junk), "--data", str(bad), "--out", str(tmp_path / "p.csv")]) == 3


def test_predict_one_step(model, data, tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--data", str(data), "--out", str(out)]) == 0
    pred = load_csv(out)
    assert pred.values.shape == (1, 4) and pred.start == 80


def test_predict_feeds_predictions_back(model, data, tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--data", str(data), "--steps", "3", "--out", str(out)]) == 0
    rows = load_csv(out).values
    saved = load_model(model)
    norm = saved.normalizer
    history = np.vstack([load_csv(data).values, rows[:1]])
    window = norm.normalize(history[-saved.window:])
    row2 = norm.denormalize(np.maximum(saved.network.predict(window), 0.0))
    np.testing.assert_allclose(rows[1], row2, rtol=1e-12)


def test_predict_dimension_mismatch(model, tmp_path):
    other = tmp_path / "n3.csv"
    main(["synth", "--nodes", "3", "--slots", "20", "--out", str(other)])
    assert main(["predict", "--model", str(model), "--data", str(other), "--out", str(tmp_path / "p.csv")]) == 4


def test_evaluate_csv(model, data, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["evaluate", "--model", str(model), "--data", str(data), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "axis,value,mse_normalized,mse_raw,seconds"
    assert [l.split(",")[1] for l in lines[1:]] == ["lstm", "naive"]


def test_sweep(data, tmp_path):
    out = tmp_path / "s.csv"
    flags = ["sweep", "--data", str(data), "--window", "4", "--epochs", "2", "--axis", "hidden",
             "--values", "2,3,4", "--no-timing", "--out", str(out)]
    assert main(flags) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4 and all(l.startswith("hidden_units,") for l in lines[1:])
    first = out.read_bytes()
    assert main(flags) == 0
    assert out.read_bytes() == first
    flags[flags.index("2,3,4")] = "10,10"
    assert main(flags) == 2


def test_sweep_all_failed_exit_code(data, tmp_path, monkeypatch):
    import tmforecast.evaluation as ev

    def diverge(net, data, cfg, callback=None):
        raise TrainingDivergedError(1)

    monkeypatch.setattr(ev, "train", diverge)
    assert main(["sweep", "--data", str(data), "--window", "4", "--axis", "depth", "--values", "1,2",
                 "--width", "3", "--out", str(tmp_path / "s.csv")]) == 1


def test_compare_on_constant_data(tmp_path):
    data = tmp_path / "flat.csv"
    main(["synth", "--nodes", "2", "--slots", "60", "--set", "noise_sigma=0", "--set", "spike_rate=0",
          "--set", "diurnal_amplitude=0", "--set", "weekly_amplitude=0", "--out", str(data)])
    out = tmp_path / "c.csv"
    assert main(["compare", "--data", str(data), "--window", "4", "--hidden", "6", "--mlp-hidden", "8",
                 "--epochs", "50", "--out", str(out)]) == 0
    rows = [l.split(",") for l in out.read_text().splitlines()[1:]]
    assert [r[1] for r in rows] == ["naive", "holt_winters", "arma", "arar", "arima", "mlp", "lstm"]
    assert all(float(r[2]) <= 1e-6 for r in rows)


def test_replay_reproduces_outputs(model, data, tmp_path):
    manifest = model.parent / "m.npz.manifest.json"
    out = tmp_path / "again.npz"
    assert main(["replay", str(manifest), "--out", str(out)]) == 0
    assert out.read_bytes() == model.read_bytes()
    assert (tmp_path / "again.npz.loss.csv").read_bytes() == (model.parent / "m.npz.loss.csv").read_bytes()


def test_replay_detects_changed_input(tmp_path):
    data = tmp_path / "tm.csv"
    main(["synth", "--nodes", "1", "--slots", "30", "--out", str(data)])
    main(["train", "--data", str(data), "--window", "3", "--hidden", "2", "--epochs", "1",
          "--out", str(tmp_path / "m.npz")])
    data.write_text(data.read_text().replace("t,f0\n0,", "t,f0\n0,1"))
    assert main(["replay", str(tmp_path / "m.npz.manifest.json")]) == 3
    (tmp_path / "broken.json").write_text("{")
    assert main(["replay", str(tmp_path / "broken.json")]) == 3
