"""Session fixtures: real simulator artifacts produced through its CLI.

The viz package only understands the on-disk CSV/JSON contract, so the
fixtures go through `wavebeam` as an external tool rather than importing
it.
"""
import csv
import shutil
import subprocess

import pytest

CONFIG = """
beam:
  name: S_64
actuation:
  delta_L: 10
  delta_tau: 35
  n_cycles: 3
solver:
  n_segments: 24
ground:
  c_longitudinal: 0.02
  c_lateral: 0.4
"""

STEM = "S_64_dL10_dtau35_seed0"


def _run(args):
    proc = subprocess.run(args, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    if shutil.which("wavebeam") is None:
        pytest.skip("wavebeam CLI not installed")
    root = tmp_path_factory.mktemp("artifacts")
    cfg = root / "run.yaml"
    cfg.write_text(CONFIG)
    _run(["wavebeam", "simulate", str(cfg), "--out", str(root),
          "--no-figures"])
    _run(["wavebeam", "locomote", str(cfg), "--out", str(root)])
    return {
        "trace": root / f"{STEM}.csv",
        "report": root / f"{STEM}.json",
        "loco_trace": root / f"{STEM}_loco.csv",
    }


@pytest.fixture(scope="session")
def summary_72(tmp_path_factory):
    """A full sweep summary: 3 beams x 4 delta_L x 6 delta_tau."""
    path = tmp_path_factory.mktemp("summary") / "summary.csv"
    cols = ("beam_id", "delta_L_mm", "delta_tau_mm", "label", "phase_deg",
            "peak_ratio", "drops_per_cycle", "n_ok", "error")
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols)
        w.writeheader()
        for beam in ("S_62", "S_64", "S_66"):
            for dl in (0.0, 5.0, 10.0, 15.0):
                for dt in (15.0, 20.0, 25.0, 30.0, 35.0, 40.0):
                    label = "TypeI" if dl == 0.0 else (
                        "TypeII" if dl >= 15.0 else "TypeIII")
                    w.writerow({"beam_id": beam, "delta_L_mm": dl,
                                "delta_tau_mm": dt, "label": label,
                                "phase_deg": 165.0, "peak_ratio": 1.1,
                                "drops_per_cycle": 0.8, "n_ok": 10,
                                "error": ""})
    return path
