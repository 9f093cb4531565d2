import csv
import json
import os

import pytest

from pyqspectral.cli.config import parse_config
from pyqspectral.cli.run import main
from pyqspectral.errors import ConfigError
from pyqspectral.solvers import load_trajectory


def _report(out):
    with open(os.path.join(out, "report.json")) as f:
        return json.load(f)


def _header(path):
    with open(path, newline="") as f:
        return next(csv.reader(f))


#
# Configuration
#


def test_parse_config_defaults(write_config):
    cfg = parse_config(write_config(pipeline="verify"))
    assert cfg.q == 0.5
    assert cfg.mode == "full"
    assert cfg.time_nodes == 65
    assert cfg.problem.kind == "heat"
    assert cfg.phi.family == "gaussian-bump"
    assert cfg.phi.params["a"] == 0.125
    assert cfg.forcing.family == "zero"
    assert cfg.tolerances["residual"] is None


def test_parse_config_overrides(write_config):
    path = write_config(pipeline="verify", mode="full")
    cfg = parse_config(path, pipeline="kernel-table", mode="half", output_dir=None)
    assert cfg.pipeline == "kernel-table"
    assert cfg.mode == "half"


def test_parse_config_collects_violations(write_config):
    path = write_config(
        pipeline="solve-wave", q=1.2, time_nodes=1, problem={"kind": "wave", "b": 3.0, "m": 2.0}
    )
    with pytest.raises(ConfigError) as e:
        parse_config(path)
    assert len(e.value.violations) == 3
    assert "b^2 < 4m" in str(e.value)
    assert "0 < q < 1" in str(e.value)


def test_parse_config_rejects_unknown_pipeline(write_config):
    with pytest.raises(ConfigError, match="pipeline"):
        parse_config(write_config(pipeline="plot"))


def test_parse_config_unknown_tolerance(write_config):
    with pytest.raises(ConfigError, match="unknown tolerance"):
        parse_config(write_config(pipeline="verify", tolerances={"spectral": 1e-3}))


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_malformed_config_exits_2(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{pipeline: verify")
    assert main(["--config", str(path)]) == 2


def test_invalid_q_exits_2(write_config):
    assert main(["verify", "--config", write_config(q=1.2)]) == 2


def test_forced_wave_needs_forcing(write_config, tmp_path):
    path = write_config(pipeline="solve-forced-wave", problem={"kind": "forced-wave"})
    assert main(["--config", path]) == 2


#
# End to end
#


@pytest.mark.system
def test_kernel_table_run(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["kernel-table", "--config", write_config()]) == 0
    assert "certified_error" in _header(os.path.join(out, "kernel.csv"))
    report = _report(out)
    assert report["passed"]
    assert report["config"]["pipeline"] == "kernel-table"
    assert os.path.exists(os.path.join(out, "pyqspectral.log"))


@pytest.mark.system
def test_transform_run(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["transform", "--config", write_config()]) == 0
    names = [c["name"] for c in _report(out)["checks"]]
    assert "transform.structured_agreement" in names
    assert _header(os.path.join(out, "spectrum.csv")) == ["j", "sign", "xi", "re", "im"]


@pytest.mark.system
def test_transform_run_with_out_flag(write_config, tmp_path):
    out = str(tmp_path / "elsewhere")
    assert main(["transform", "--config", write_config(), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "report.json"))


@pytest.mark.system
def test_solve_heat_run(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["solve-heat", "--config", write_config()]) == 0
    assert os.path.exists(os.path.join(out, "trajectory.json"))
    assert _header(os.path.join(out, "solution.csv")) == ["t", "k", "sign", "x", "re_u", "im_u"]
    assert load_trajectory(os.path.join(out, "trajectory.json")).kind == "heat"


@pytest.mark.system
@pytest.mark.slow
def test_verify_run(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["verify", "--config", write_config()]) == 0
    report = _report(out)
    names = [c["name"] for c in report["checks"]]
    assert "heat.damping" in names
    assert "kernel.eigen_d2" in names
    assert report["transform"]["mode"] == "full"


@pytest.mark.system
@pytest.mark.slow
def test_verify_half_mode_fails(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["verify", "--config", write_config(), "--mode", "half"]) == 4
    failed = [c["name"] for c in _report(out)["checks"] if not c["passed"]]
    assert "heat.initial_condition" in failed


@pytest.mark.system
@pytest.mark.slow
def test_verify_stored_trajectory(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["solve-heat", "--config", write_config()]) == 0
    stored = os.path.join(out, "trajectory.json")
    assert main(["verify", "--config", write_config(trajectory=stored)]) == 0

    bad = str(tmp_path / "corrupted.json")
    load_trajectory(stored).corrupted(1.01).save_json(bad)
    assert main(["verify", "--config", write_config(trajectory=bad)]) == 4
    failed = [c["name"] for c in _report(out)["checks"] if not c["passed"]]
    assert "heat.initial_condition" in failed


@pytest.mark.system
def test_stored_trajectory_window_mismatch(write_config, tmp_path):
    out = str(tmp_path / "out")
    assert main(["solve-heat", "--config", write_config()]) == 0
    stored = os.path.join(out, "trajectory.json")
    assert main(["verify", "--config", write_config(k_max=36, trajectory=stored)]) == 2
