import os

import numpy as np
import pytest

from wakeforge.cli import (build_parser, main, read_config_file, resolve_seed,
                           _parse_grid, _parse_pair)
from wakeforge.dataset import load_dataset
from wakeforge.errors import ConfigError
from wakeforge.network import load_model


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def clean_env(monkeypatch):
    monkeypatch.delenv("WAKEFORGE_SEED", raising=False)


@pytest.fixture()
def tiny_dataset(tmp_path, clean_env):
    path = tmp_path / "tiny.wknd"
    assert run("gen", "--model", "gaussian", "--n", "6", "--grid", "8x8",
               "--validation-count", "2", "--out", str(path)) == 0
    return path


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--help")
    assert exc.value.code == 0
    assert "wakeforge" in capsys.readouterr().out


def test_missing_command_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code != 0


def test_parse_helpers():
    assert _parse_grid("16x8") == (16, 8)
    assert _parse_pair("3,9", "x") == (3.0, 9.0)
    for bad in ("16", "1x8", "axb"):
        with pytest.raises(ConfigError):
            _parse_grid(bad)
    with pytest.raises(ConfigError):
        _parse_pair("9,3", "x")


def test_gen_writes_dataset(tiny_dataset):
    ds = load_dataset(tiny_dataset)
    assert ds.n == 6
    assert ds.grid_shape == (8, 8)
    assert ds.validation_count == 2
    assert os.path.exists(str(tiny_dataset) + ".manifest.txt")


def test_gen_determinism(tmp_path, clean_env):
    a, b = tmp_path / "a.wknd", tmp_path / "b.wknd"
    for p in (a, b):
        assert run("gen", "--n", "4", "--grid", "8x8", "--seed", "3",
                   "--validation-count", "1", "--out", str(p)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_usage_error_exit_1(tmp_path, clean_env, capsys):
    code = run("gen", "--n", "3", "--grid", "8x8",
               "--validation-count", "5", "--out", str(tmp_path / "x.wknd"))
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("WAKEFORGE_SEED", "3")
    env_out = tmp_path / "env.wknd"
    assert run("gen", "--n", "4", "--grid", "8x8", "--seed", "999",
               "--validation-count", "1", "--out", str(env_out)) == 0
    monkeypatch.delenv("WAKEFORGE_SEED")
    flag_out = tmp_path / "flag.wknd"
    assert run("gen", "--n", "4", "--grid", "8x8", "--seed", "3",
               "--validation-count", "1", "--out", str(flag_out)) == 0
    assert env_out.read_bytes() == flag_out.read_bytes()

    monkeypatch.setenv("WAKEFORGE_SEED", "notanint")
    assert run("gen", "--n", "4", "--grid", "8x8",
               "--validation-count", "1",
               "--out", str(tmp_path / "y.wknd")) == 1


def test_config_file_overlay(tmp_path, clean_env):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 4\ngrid = 8x8  # comment\nvalidation-count = 1\n")
    out = tmp_path / "c.wknd"
    # CLI --n wins over the file; grid comes from the file
    assert run("gen", "--config", str(cfg), "--n", "5",
               "--out", str(out)) == 0
    ds = load_dataset(out)
    assert ds.n == 5
    assert ds.grid_shape == (8, 8)
    assert ds.validation_count == 1

    values = read_config_file(cfg)
    assert values == {"n": "4", "grid": "8x8", "validation_count": "1"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("not a pair\n")
    assert run("gen", "--config", str(bad), "--n", "4",
               "--out", str(out)) == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("bogus = 1\n")
    assert run("gen", "--config", str(unknown), "--n", "4",
               "--out", str(out)) == 1


def test_resolve_seed_default():
    args = build_parser().parse_args(["gen", "--n", "2", "--out", "x"])
    assert resolve_seed(args) == 0


def test_train_and_transfer_round_trip(tmp_path, tiny_dataset, capsys):
    model = tmp_path / "dec.wknm"
    assert run("train", "--dataset", str(tiny_dataset), "--epochs", "3",
               "--out", str(model)) == 0
    assert "validation accuracy" in capsys.readouterr().out
    m = load_model(model)
    assert m.kind == "decoder"
    hist = (str(model) + ".history.csv")
    lines = open(hist).read().strip().splitlines()
    assert len(lines) == 4  # header + 3 epochs
    assert os.path.exists(str(model) + ".history.png")

    tuned = tmp_path / "tuned.wknm"
    assert run("transfer", "--pretrained", str(model), "--dataset",
               str(tiny_dataset), "--epochs", "2", "--out", str(tuned)) == 0
    t = load_model(tuned)
    # default freeze list pins the first two layers
    assert np.array_equal(t.layers[0].w, m.layers[0].w)
    assert np.array_equal(t.layers[1].w, m.layers[1].w)

    missing = run("train", "--dataset", str(tmp_path / "nope.wknd"),
                  "--out", str(tmp_path / "z.wknm"))
    assert missing == 1


def test_eval_reports(tmp_path, tiny_dataset, capsys):
    model = tmp_path / "dec.wknm"
    assert run("train", "--dataset", str(tiny_dataset), "--epochs", "3",
               "--out", str(model)) == 0
    capsys.readouterr()
    out_dir = tmp_path / "report"
    assert run("eval", "--decoder", str(model), "--out-dir",
               str(out_dir)) == 0
    for name in ("field_reference.png", "field_surrogate.png",
                 "error_map.png", "transects.png", "transects.csv",
                 "summary.csv"):
        assert (out_dir / name).exists(), name
    assert "mean field error" in capsys.readouterr().out


def test_optimize_command(tmp_path, clean_env, capsys):
    layout = tmp_path / "farm.layout"
    layout.write_text("0 0\n504 0\n")
    out = tmp_path / "opt.csv"
    assert run("optimize", "--task", "yaw", "--layout", str(layout),
               "--out", str(out)) == 0
    header, row = out.read_text().strip().splitlines()
    assert header.startswith("task,evaluator")
    assert row.startswith("yaw,reference-gaussian")
    assert "gain" in capsys.readouterr().out
    # surrogate evaluator without the networks is a usage error
    assert run("optimize", "--task", "yaw", "--layout", str(layout),
               "--evaluator", "surrogate-gaussian",
               "--out", str(out)) == 1
