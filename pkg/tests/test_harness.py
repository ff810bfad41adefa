import csv
import json

import pytest

from wavebeam import harness
from wavebeam.config import RunConfig, SweepPlan
from wavebeam.geometry import preset
from wavebeam.tendon import ActuationProfile


@pytest.fixture(scope="module")
def quick_cfg():
    return RunConfig(
        beam=preset("S_64"), beam_id="S_64", n_segments=24,
        actuation=ActuationProfile(delta_L=10.0, delta_tau=35.0,
                                   n_cycles=3))


def test_run_single_produces_artifacts(quick_cfg, tmp_path):
    trace, report, csv_path, json_path = harness.run_single(
        quick_cfg, out_dir=tmp_path)
    assert csv_path.exists() and json_path.exists()
    assert csv_path.stem == "S_64_dL10_dtau35_seed0"
    assert report.label in ("TypeI", "TypeII", "TypeIII")
    payload = json.loads(json_path.read_text())
    assert payload["label"] == report.label
    assert payload["beam_id"] == "S_64"
    assert len(payload["config_hash"]) == 16


def test_run_locomotion_produces_artifacts(quick_cfg, tmp_path):
    trace, result, csv_path, json_path = harness.run_locomotion(
        quick_cfg, out_dir=tmp_path)
    assert csv_path.stem.endswith("_loco")
    assert trace.com is not None
    payload = json.loads(json_path.read_text())
    assert payload["ground_mode"] == "AnisotropicViscous"
    assert payload["net_displacement_m"] == pytest.approx(
        result.net_displacement)


def test_run_sweep_summary_layout(quick_cfg, tmp_path):
    plan = SweepPlan(beams=("S_64",), delta_L_list=(0.0, 10.0),
                     delta_tau_list=(35.0,), repetitions=2)
    path = harness.run_sweep(plan, quick_cfg, out_dir=tmp_path, jobs=1)
    with path.open() as f:
        rows = list(csv.DictReader(f))
    assert [r["delta_L_mm"] for r in rows] == ["0.0", "10.0"]
    for r in rows:
        assert set(r) == set(harness.SUMMARY_COLUMNS)
        assert r["n_ok"] == "2"
        assert r["error"] == ""
        assert r["label"] in ("TypeI", "TypeII", "TypeIII")


def test_run_sweep_keep_traces(quick_cfg, tmp_path):
    plan = SweepPlan(beams=("S_64",), delta_L_list=(0.0,),
                     delta_tau_list=(35.0,), repetitions=1)
    harness.run_sweep(plan, quick_cfg, out_dir=tmp_path, keep_traces=True)
    assert list(tmp_path.glob("S_64_dL0_dtau35_seed0.csv"))


def test_oracle_suite_passes():
    for res in harness.validate():
        assert res.passed, f"{res.name}: {res.detail}"
