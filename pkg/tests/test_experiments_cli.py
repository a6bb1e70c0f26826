import json

import numpy as np
import pytest

from slowmanifold.cli import main
from slowmanifold.exceptions import ConfigError
from slowmanifold.experiments import ExperimentConfig, parse_config, run_command
from slowmanifold.diagnostics import run_diagnostics

SMALL = {"seeds": [1], "y0_grid": [-1.0, 0.0, 1.0], "approx_epsilons": [0.1, 0.05]}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    import yaml

    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.n_modes == 8 and cfg.dt == 1e-4
    assert cfg.seeds == list(range(1, 9))
    assert len(cfg.y0_grid) == 21 and cfg.y0_grid[0] == -2.0 and cfg.y0_grid[-1] == 2.0


def test_round_trip():
    cfg = ExperimentConfig(epsilon=0.02, seeds=[3, 4], horizon=1.5)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_file_values_and_overrides(tmp_path):
    p = write_cfg(tmp_path, {"epsilon": 0.05, "alpha": 1.3})
    cfg = parse_config(p)
    assert cfg.epsilon == 0.05 and cfg.alpha == 1.3
    cfg = parse_config(p, {"epsilon": "0.02", "alpha": None})
    assert cfg.epsilon == 0.02 and cfg.alpha == 1.3


def test_json_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"example": "1", "seeds": [5]}))
    cfg = parse_config(p)
    assert cfg.example == "1" and cfg.seeds == [5]


@pytest.mark.parametrize("data,key", [
    ({"bogus": 1}, "bogus"),
    ({"epsilon": "abc"}, "epsilon"),
    ({"alpha": 2.5}, "alpha"),
    ({"n_modes": 2.5}, "n_modes"),
    ({"example": "2", "sigma2": 0.1}, "sigma2"),
])
def test_config_errors_name_key(tmp_path, data, key):
    p = write_cfg(tmp_path, data)
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert key in err.value.key


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.yaml")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["example2", "--alpha", "2.5", "--out", str(tmp_path)]) == 1
    assert main(["example2", "--epsilon", "x"]) == 1
    assert main(["nonsense"]) == 1
    p = write_cfg(tmp_path, {**SMALL, "max_iter": 1})
    assert main(["manifold", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_manifold_artifacts(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    out = tmp_path / "o"
    assert main(["manifold", "--config", str(p), "--out", str(out), "--modes", "4"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    lines = (out / "manifold_seed1.csv").read_text().splitlines()
    assert lines[0] == f"# manifest_hash={manifest['manifest_hash']}"
    assert lines[1].split(",") == ["y0_1", "h_coeff_1", "h_coeff_2", "h_coeff_3", "h_coeff_4",
                                   "iterations", "final_residual"]
    assert len(lines) == 5
    row = [float(v) for v in lines[3].split(",")]
    assert row[0] == 0.0 and row[1] == 0.0 or abs(row[1]) < 1e-10
    assert manifest["config"]["n_modes"] == 4
    assert set(manifest["artifacts"]) == {"manifold_seed1.csv"}


def test_example2_outputs_and_constants(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    out = tmp_path / "o"
    assert main(["example2", "--config", str(p), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["system"]["K"] == pytest.approx(0.01)
    assert manifest["system"]["conditions"]["s1_pass"] is False
    assert {"tracking_seed1.json", "approx_order.csv", "manifold_seed1.csv",
            "approx_order.json"} <= set(manifest["artifacts"])
    track = json.loads((out / "tracking_seed1.json").read_text())
    assert track["manifest_hash"] == manifest["manifest_hash"]
    assert track["decay_rate"] > track["predicted_rate"] * 0.8


def test_simulate(tmp_path):
    p = write_cfg(tmp_path, {**SMALL, "t_final": 0.05})
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(p), "--out", str(out)]) == 0
    lines = (out / "trajectory_seed1.csv").read_text().splitlines()
    assert lines[1].startswith("t,x_coeff_1")
    assert len(lines) == 2 + 501


def test_example1_runs(tmp_path):
    p = write_cfg(tmp_path, {**SMALL, "sigma2": 0.1, "epsilon": 0.05})
    out = tmp_path / "o"
    assert main(["example1", "--config", str(p), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["system"]["conditions"]["s3_pass"] is False


def test_diagnostics_zero_noise_skips():
    cfg = ExperimentConfig(sigma1=0.0, sigma2=0.0, seeds=[1])
    rep = run_diagnostics(cfg, quick=True)
    status = {c["name"]: c["status"] for c in rep["checks"]}
    assert status["stable_charfn"] == status["self_similarity"] == "skip"
    assert rep["n_properties"] >= 12
    assert rep["failed"] == 0


def test_run_command_is_deterministic(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    run_command("manifold", cfg, tmp_path / "a")
    run_command("manifold", cfg, tmp_path / "b")
    for name in ("manifest.json", "manifold_seed1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
