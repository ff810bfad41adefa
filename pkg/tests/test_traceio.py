import numpy as np
import pytest

from wavebeam import traceio
from wavebeam.analysis import Trace
from wavebeam.tendon import ActuationProfile
from wavebeam.traceio import (TraceFormatError, estimate_period, read_trace,
                              write_report, write_trace)

RATE = 100.0


def _trace(with_com=False, n_cycles=4):
    profile = ActuationProfile(delta_L=5.0, delta_tau=20.0,
                               n_cycles=n_cycles)
    t = np.arange(int(n_cycles * profile.period * RATE) + 1) / RATE
    rng = np.random.default_rng(5)
    tl = 0.5 + 0.4 * np.sin(2 * np.pi * t / profile.period) \
        + 0.01 * rng.random(len(t))
    tr = 0.5 + 0.4 * np.sin(2 * np.pi * t / profile.period + np.pi)
    m = rng.random((8, len(t), 2))
    com = rng.random((len(t), 2)) if with_com else None
    return Trace(sample_rate=RATE, times=t, tension_left=tl,
                 tension_right=tr, marker_positions=m,
                 profile=profile, beam_id="S_64", com=com)


def test_round_trip_preserves_samples(tmp_path):
    trace = _trace()
    path = write_trace(trace, tmp_path / "t.csv", "ab12cd34ab12cd34", 7)
    back, meta = read_trace(path, period=trace.profile.period)
    assert meta["config_hash"] == "ab12cd34ab12cd34"
    assert meta["seed"] == 7
    assert back.sample_rate == trace.sample_rate
    # %.9g keeps 9 significant digits
    np.testing.assert_allclose(back.times, trace.times, rtol=1e-8)
    np.testing.assert_allclose(back.tension_left, trace.tension_left,
                               rtol=1e-8)
    np.testing.assert_allclose(back.marker_positions,
                               trace.marker_positions, rtol=1e-8)
    assert back.com is None


def test_round_trip_keeps_com_columns(tmp_path):
    trace = _trace(with_com=True)
    path = write_trace(trace, tmp_path / "t.csv", "00" * 8, 0)
    back, _ = read_trace(path, period=trace.profile.period)
    assert back.com is not None
    np.testing.assert_allclose(back.com, trace.com, rtol=1e-8)


def test_replay_estimates_the_period(tmp_path):
    trace = _trace()
    path = write_trace(trace, tmp_path / "t.csv", "00" * 8, 0)
    back, _ = read_trace(path)   # no period hint: recover from tensions
    assert back.profile.period == pytest.approx(trace.profile.period,
                                                rel=0.05)


def test_estimate_period_on_clean_sine():
    t = np.arange(1200) / RATE
    sig = np.sin(2 * np.pi * t / 1.7)
    assert estimate_period(sig, RATE) == pytest.approx(1.7, rel=0.03)


def test_header_and_schema_are_strict(tmp_path):
    trace = _trace()
    path = write_trace(trace, tmp_path / "t.csv", "00" * 8, 0)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1].split(",")[:3] == ["time_s", "tension_left_N",
                                      "tension_right_N"]

    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(["no header here"] + lines[1:]))
    with pytest.raises(TraceFormatError):
        read_trace(bad)

    cols = tmp_path / "cols.csv"
    body = [lines[0], lines[1].replace("m0_x", "mx_0")] + lines[2:]
    cols.write_text("\n".join(body))
    with pytest.raises(TraceFormatError):
        read_trace(cols)


def test_write_report_includes_provenance(tmp_path):
    import json
    path = write_report({"answer": 42}, tmp_path / "r.json", "ab" * 8, 3,
                        extra={"beam_id": "S_64"})
    data = json.loads(path.read_text())
    assert data["config_hash"] == "ab" * 8
    assert data["seed"] == 3
    assert data["answer"] == 42
    assert data["beam_id"] == "S_64"
