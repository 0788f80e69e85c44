import json

import pytest
import yaml

from oscchain.cli import main


def _write(tmp_path, doc):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_quench_run_writes_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, {"scenario": "quench", "chain": {"n_sites": 6, "coupling": 0.2}, "sites": [1, 3]})
    assert main(["quench", "--config", cfg, "--out", str(tmp_path / "runs"), "--t-end", "5"]) == 0
    (run_dir,) = (tmp_path / "runs").iterdir()
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["config"]["time"]["t_end"] == 5.0
    assert "peak E_N" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"scenario": "quench", "chain": {"n_sites": 6, "coupling": -0.1}})
    assert main(["quench", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "chain.coupling" in capsys.readouterr().err


def test_scenario_mismatch_is_config_error(tmp_path):
    cfg = _write(tmp_path, {"scenario": "channel", "chain": {"n_sites": 6, "coupling": 0.1}})
    assert main(["quench", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["quench", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_recurrence_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {
        "scenario": "decohere",
        "chain": {"n_sites": 2, "coupling": 0.4},
        "time": {"t_end": 50.0},
        "bath": {"modes_per_oscillator": 20, "cutoff": 5.0, "coupling": 0.01},
    })
    assert main(["decohere", "--config", cfg, "--out", str(tmp_path)]) == 4
    assert "M=" in capsys.readouterr().err


def test_unstable_potential_exit_code(tmp_path):
    cfg = _write(tmp_path, {
        "scenario": "decohere",
        "chain": {"n_sites": 2, "coupling": 0.4},
        "time": {"t_end": 5.0},
        "bath": {"modes_per_oscillator": 20, "cutoff": 5.0, "coupling": 0.5},
    })
    assert main(["decohere", "--config", cfg, "--out", str(tmp_path)]) == 4


def test_step_size_exit_code(tmp_path):
    cfg = _write(tmp_path, {
        "scenario": "quench",
        "chain": {"n_sites": 4, "coupling": 0.5},
        "ramp": {"kind": "linear", "duration": 10.0},
        "time": {"t_end": 1.0, "dt": 1.0, "dt_sample": 1.0},
    })
    assert main(["quench", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_validate(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["bogus"])
