"""Classifier and signal-analysis tests on synthetic traces with known
ground truth."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavebeam import analysis
from wavebeam.analysis import (ClassifierConfig, InsufficientDataError,
                               Trace, UndefinedPhaseError,
                               detect_tension_drops, phase_shift)
from wavebeam.tendon import ActuationProfile

PERIOD = 2.0
RATE = 100.0


def _times(n_cycles=6):
    n = int(n_cycles * PERIOD * RATE) + 1
    return np.arange(n) / RATE


def _markers(t, lags_deg, amp=0.005, signs=None):
    """(8, T, 2) traveling-wave marker motion with prescribed phase lags."""
    m = np.zeros((8, len(t), 2))
    for i in range(8):
        m[i, :, 0] = 0.02 * i
        s = 1.0 if signs is None else signs[i]
        m[i, :, 1] = s * amp * np.sin(
            2 * np.pi * t / PERIOD - np.deg2rad(lags_deg[i]))
    return m


def _trace(tl, tr, markers, n_cycles=6):
    t = _times(n_cycles)
    return Trace(sample_rate=RATE, times=t, tension_left=tl,
                 tension_right=tr, marker_positions=markers,
                 profile=ActuationProfile(delta_L=0.0, delta_tau=15.0,
                                          n_cycles=n_cycles),
                 beam_id="synthetic")


def test_phase_shift_recovers_known_offsets():
    t = _times()
    a = np.sin(2 * np.pi * t / PERIOD)
    for deg in (0.0, 45.0, 90.0, 180.0):
        b = np.sin(2 * np.pi * t / PERIOD - np.deg2rad(deg))
        assert phase_shift(a, b, PERIOD, RATE) == pytest.approx(deg, abs=2.0)


def test_phase_shift_guards():
    t = _times(1)
    a = np.sin(2 * np.pi * t / PERIOD)
    with pytest.raises(InsufficientDataError):
        phase_shift(a, a, PERIOD, RATE)
    t = _times()
    with pytest.raises(UndefinedPhaseError):
        phase_shift(np.ones_like(t), np.sin(2 * np.pi * t / PERIOD),
                    PERIOD, RATE)


@given(gain=st.floats(min_value=0.1, max_value=50.0),
       offset=st.floats(min_value=-5.0, max_value=5.0),
       deg=st.floats(min_value=0.0, max_value=180.0))
def test_phase_shift_affine_invariant(gain, offset, deg):
    t = _times(4)
    a = np.sin(2 * np.pi * t / PERIOD)
    b = np.sin(2 * np.pi * t / PERIOD - np.deg2rad(deg))
    ref = phase_shift(a, b, PERIOD, RATE)
    assert phase_shift(a, gain * b + offset, PERIOD, RATE) == pytest.approx(
        ref, abs=1e-9)


def _with_snap(tension, i0, floor=0.1, fall=3, hold=5, rise=20):
    out = tension.copy()
    start = out[i0]
    out[i0:i0 + fall] = np.linspace(start, floor, fall)
    out[i0 + fall:i0 + fall + hold] = floor
    stop = i0 + fall + hold + rise
    out[i0 + fall + hold:stop] = np.linspace(floor, out[stop], rise)
    return out


def test_drop_detector_finds_planted_snaps():
    t = _times(6)
    tension = np.full(len(t), 0.8)
    tension = _with_snap(tension, 200)   # t = 2.0 s
    tension = _with_snap(tension, 500)   # t = 5.0 s
    events = detect_tension_drops(tension, RATE)
    assert len(events) == 2
    assert events[0] == pytest.approx(2.0, abs=0.1)
    assert events[1] == pytest.approx(5.0, abs=0.1)


def test_drop_detector_ignores_unloading_to_slack():
    # an abrupt fall that stays slack is an unloading event, not a snap
    t = _times(6)
    tension = np.full(len(t), 0.8)
    tension[800:803] = np.linspace(0.8, 0.02, 3)  # release into slack
    tension[803:] = 0.0
    assert detect_tension_drops(tension, RATE) == []


def test_drop_detector_ignores_reengagement_ring():
    # ring-down right after pick-up from slack must not count as a snap
    t = _times(6)
    tension = np.full(len(t), 0.8)
    tension[300:600] = 0.0
    tension[600:602] = np.linspace(0.0, 0.8, 2)
    tension[605:610] = 0.3          # settle dip 0.05 s after pick-up
    events = detect_tension_drops(tension, RATE)
    assert events == []
    # the same dip well after engagement is a real snap
    tension2 = np.full(len(t), 0.8)
    tension2[605:610] = 0.3
    assert len(detect_tension_drops(tension2, RATE)) == 1


def _periodic_snaps(phase_offset_deg):
    """One snap dip per cycle riding on a shifted sinusoid."""
    t = _times()
    sig = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD
                             - np.deg2rad(phase_offset_deg))
    for c in range(6):
        peak_t = (0.25 + phase_offset_deg / 360.0 + c) * PERIOD
        i0 = int(peak_t * RATE)
        if 0 <= i0 < len(sig) - 40:
            sig = _with_snap(sig, i0)
    return sig


def test_classifier_labels_synthetic_regimes():
    t = _times()
    smooth = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD)
    anti = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD - np.pi)

    in_phase = _trace(smooth, anti, _markers(t, [0.0] * 8))
    rep = analysis.classify_regime(in_phase)
    assert rep.label == "TypeI"
    assert rep.phase_shift_deg == pytest.approx(180.0, abs=2.0)

    lopsided = _trace(smooth, 0.28 + 0.22 * np.sin(
        2 * np.pi * t / PERIOD - np.pi), _markers(t, [0.0] * 8))
    rep = analysis.classify_regime(lopsided)
    assert rep.label == "TypeII"
    assert rep.peak_ratio >= 1.6

    lags = [20.0 * i for i in range(8)]
    wave = _trace(_periodic_snaps(0.0), _periodic_snaps(150.0),
                  _markers(t, lags))
    rep = analysis.classify_regime(wave)
    assert rep.label == "TypeIII"
    assert rep.phase_shift_deg < 170.0
    assert len(rep.drop_events_left) >= 5
    assert len(rep.drop_events_right) >= 5


def test_one_sided_snapping_is_lopsided_not_wave():
    t = _times()
    smooth = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD)
    snapping = _periodic_snaps(180.0)
    rep = analysis.classify_regime(
        _trace(snapping, smooth, _markers(t, [0.0] * 8)))
    assert rep.label == "TypeII"


def test_wave_metrics_orders_traveling_wave():
    t = _times()
    smooth = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD)
    lags = [20.0 * i for i in range(8)]
    m = analysis.wave_metrics(_trace(smooth, smooth, _markers(t, lags)))
    assert m.traveling_wave_index >= 0.95
    for i, lag in enumerate(m.marker_phase_lags_deg):
        assert lag == pytest.approx(lags[i], abs=2.0)

    signs = [1.0 if i % 2 == 0 else -1.0 for i in range(8)]
    standing = analysis.wave_metrics(
        _trace(smooth, smooth, _markers(t, [0.0] * 8, signs=signs)))
    assert abs(standing.traveling_wave_index) < 0.5


def test_classifier_threshold_overrides():
    t = _times()
    smooth = 0.5 + 0.4 * np.sin(2 * np.pi * t / PERIOD)
    ratio_trace = _trace(smooth, 0.32 + 0.25 * np.sin(
        2 * np.pi * t / PERIOD - np.pi), _markers(t, [0.0] * 8))
    strict = ClassifierConfig(peak_ratio_lopsided=1.2)
    assert analysis.classify_regime(ratio_trace, strict).label == "TypeII"
    lax = ClassifierConfig(peak_ratio_lopsided=2.5)
    assert analysis.classify_regime(ratio_trace, lax).label == "TypeI"
