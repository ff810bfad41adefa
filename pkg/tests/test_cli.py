import json

import pytest
from click.testing import CliRunner

from wavebeam.cli import main

CONFIG = """
beam:
  name: S_64
actuation:
  delta_L: 10
  delta_tau: 35
  n_cycles: 3
solver:
  n_segments: 24
"""


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def config_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(CONFIG)
    return p


def test_simulate_writes_trace_report_and_figures(runner, config_file,
                                                 tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["simulate", str(config_file),
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "Type" in res.output
    stem = "S_64_dL10_dtau35_seed0"
    assert (out / f"{stem}.csv").exists()
    assert (out / f"{stem}.json").exists()
    assert (out / f"{stem}_tension.png").stat().st_size > 0
    assert (out / f"{stem}_markers.png").stat().st_size > 0


def test_simulate_no_figures_flag(runner, config_file, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["simulate", str(config_file),
                               "--out", str(out), "--no-figures"])
    assert res.exit_code == 0, res.output
    assert not list(out.glob("*.png"))


def test_classify_replays_a_trace(runner, config_file, tmp_path):
    out = tmp_path / "out"
    runner.invoke(main, ["simulate", str(config_file), "--out", str(out),
                         "--no-figures"])
    csv_path = out / "S_64_dL10_dtau35_seed0.csv"
    res = runner.invoke(main, ["classify", str(csv_path), "--period", "2.0"])
    assert res.exit_code == 0, res.output
    report = json.loads(res.output)
    assert report["label"] in ("TypeI", "TypeII", "TypeIII")
    assert report["seed"] == 0
    stored = json.loads((out / "S_64_dL10_dtau35_seed0.json").read_text())
    assert report["label"] == stored["label"]


def test_bad_config_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("beam:\n  name: S_64\nactuation:\n  delta_L: -5\n"
                   "  delta_tau: 15\n")
    res = runner.invoke(main, ["simulate", str(bad)])
    assert res.exit_code == 2
    assert "config error" in res.output


def test_bad_trace_exits_2(runner, tmp_path):
    junk = tmp_path / "junk.csv"
    junk.write_text("this is not a trace\n1,2,3\n")
    res = runner.invoke(main, ["classify", str(junk)])
    assert res.exit_code == 2


def test_sweep_command(runner, config_file, tmp_path):
    plan = tmp_path / "plan.yaml"
    plan.write_text("beams: [S_64]\ndelta_L_list: [0]\n"
                    "delta_tau_list: [35]\nrepetitions: 1\n")
    out = tmp_path / "sweep"
    res = runner.invoke(main, ["sweep", str(plan), str(config_file),
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert (out / "summary.csv").exists()


def test_locomote_command(runner, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(CONFIG + "ground:\n  c_longitudinal: 0.02\n"
                            "  c_lateral: 0.4\n")
    out = tmp_path / "out"
    res = runner.invoke(main, ["locomote", str(cfg), "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "net displacement" in res.output
    assert list(out.glob("*_loco.csv"))


def test_validate_command(runner):
    res = runner.invoke(main, ["validate"])
    assert res.exit_code == 0, res.output
    assert "all 4 checks passed" in res.output
