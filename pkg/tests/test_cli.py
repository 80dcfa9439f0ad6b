import json

import pytest

from dualhal.banks import load_bank
from dualhal.cli import main


@pytest.fixture
def config_file(tmp_path):
    cfg = {
        "episodes": {"n_way": 5, "k_shot": 1, "m_query": 10, "episode_count": 5,
                     "master_seed": 3},
        "synthetic": {"n_base": 16, "n_novel": 8, "d": 12, "m": 6,
                      "samples_per_class": 30, "seed": 5},
        "selection": {"p": 8, "q": 2, "k": 1},
        "pipeline": "baseline",
        "classifier": {"iters": 150, "lr": 0.1, "l2": 0.001},
        "fusion_train": {"iterations": 200, "batch_size": 5,
                         "learning_rate": 0.01, "seed": 1},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_command(config_file, tmp_path, capsys):
    out = tmp_path / "res.json"
    code = main(["run", "--config", str(config_file), "--output", str(out)])
    assert code == 0
    assert "mean_accuracy=" in capsys.readouterr().out
    data = json.loads(out.read_text())
    assert len(data["per_episode"]) == 5


def test_run_flag_overrides(config_file, tmp_path):
    out = tmp_path / "res.json"
    code = main([
        "run", "--config", str(config_file), "--pipeline", "pvdh",
        "--episodes", "3", "--alpha", "0.4", "--resample-count", "10",
        "--output", str(out),
    ])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["config"]["pipeline"] == "pvdh"
    assert data["config"]["pvdh"]["alpha"] == 0.4
    assert data["config"]["pvdh"]["resample_count"] == 10
    assert len(data["per_episode"]) == 3


def test_sweep_command(config_file, capsys):
    code = main([
        "sweep", "--config", str(config_file), "--pipeline", "pvdh",
        "--param", "alpha", "--values", "0.0,0.6",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "alpha=0.0" in out and "alpha=0.6" in out


def test_sweep_unknown_param(config_file, capsys):
    code = main([
        "sweep", "--config", str(config_file), "--param", "nope", "--values", "1",
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_synth_command(tmp_path):
    spec = {"n_base": 4, "n_novel": 2, "d": 6, "m": 3, "samples_per_class": 3, "seed": 1}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    f_out, s_out = tmp_path / "f.bin", tmp_path / "s.bin"
    code = main(["synth", "--spec", str(spec_path),
                 "--features-out", str(f_out), "--semantics-out", str(s_out)])
    assert code == 0
    assert load_bank(f_out).dim == 6
    assert load_bank(s_out).dim == 3


def test_train_fusion_command(config_file, tmp_path):
    out = tmp_path / "net.fsfn"
    code = main(["train-fusion", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    from dualhal.fusion import load_fusion

    net = load_fusion(out)
    assert net.d == 12 and net.m == 6


def test_run_missing_config_errors(capsys):
    code = main(["run", "--config", "/nonexistent.json"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
