import numpy as np
import pytest

from wavebeam import geometry, solver, tendon
from wavebeam.geometry import MM
from wavebeam.tendon import ActuationError, ActuationProfile


@pytest.fixture(scope="module")
def rig():
    spec = geometry.preset("S_64")
    beam = geometry.discretize(spec, n_segments=32)
    tendons = tendon.tendon_pair(spec, beam)
    env = tendon.bench_environment(beam)
    return spec, beam, tendons, env


def test_tendon_pair_sides_and_stiffness(rig):
    _, beam, tendons, _ = rig
    assert {t.side for t in tendons} == {"Left", "Right"}
    for t in tendons:
        assert t.stiffness == tendon.DEFAULT_TENDON_STIFFNESS
        assert t.routing_nodes[0] == 0
        assert t.routing_nodes[-1] == beam.node_count - 1


def test_straight_tendon_length_exceeds_chord(rig):
    # offset routing makes the path strictly longer than the centerline
    _, beam, tendons, _ = rig
    st = solver.rest_state(beam)
    for t in tendons:
        assert tendon.tendon_length(st, t) > beam.total_length


def test_profile_validation():
    with pytest.raises(ActuationError):
        ActuationProfile(delta_L=-1.0, delta_tau=15.0)
    with pytest.raises(ActuationError):
        ActuationProfile(delta_L=0.0, delta_tau=0.0)
    with pytest.raises(ActuationError):
        ActuationProfile(delta_L=0.0, delta_tau=15.0, waveform="Square")
    with pytest.raises(ActuationError):
        ActuationProfile(delta_L=0.0, delta_tau=15.0, n_cycles=0)
    with pytest.raises(ActuationError):
        ActuationProfile(delta_L=0.0, delta_tau=15.0,
                         period=2.0, drive_lag=1.0)


def test_antagonistic_schedule_with_no_lag(rig):
    _, beam, _, _ = rig
    L = beam.total_length
    profile = ActuationProfile(delta_L=5.0, delta_tau=20.0, drive_lag=0.0)
    base = L - profile.delta_L * MM
    ramp = profile.precompress_ramp
    for t in np.linspace(ramp, ramp + 2 * profile.period, 41):
        left, right = tendon.command_rest_lengths(profile, t, L)
        assert left + right == pytest.approx(2 * base, abs=1e-12)


def test_triangle_waveform_peaks_at_quarter_period(rig):
    _, beam, _, _ = rig
    L = beam.total_length
    profile = ActuationProfile(delta_L=0.0, delta_tau=20.0, drive_lag=0.0)
    ramp = profile.precompress_ramp
    _, r_quarter = tendon.command_rest_lengths(
        profile, ramp + profile.period / 4, L)
    assert r_quarter - L == pytest.approx(profile.delta_tau * MM)
    _, r_full = tendon.command_rest_lengths(profile, ramp + profile.period, L)
    assert r_full == pytest.approx(L)


def test_drive_lag_delays_only_the_left_side(rig):
    _, beam, _, _ = rig
    L = beam.total_length
    lagged = ActuationProfile(delta_L=0.0, delta_tau=20.0, drive_lag=0.1)
    ref = ActuationProfile(delta_L=0.0, delta_tau=20.0, drive_lag=0.0)
    t = lagged.precompress_ramp + 0.7
    l_lag, r_lag = tendon.command_rest_lengths(lagged, t, L)
    l_ref_shift, _ = tendon.command_rest_lengths(ref, t - 0.1, L)
    _, r_ref = tendon.command_rest_lengths(ref, t, L)
    assert r_lag == pytest.approx(r_ref, abs=1e-15)
    assert l_lag == pytest.approx(l_ref_shift, abs=1e-15)


def test_precompression_buckles_the_beam(rig):
    _, beam, tendons, env = rig
    profile = ActuationProfile(delta_L=10.0, delta_tau=25.0)
    st = tendon.precompress(beam, env, tendons, profile, seed=0)
    assert np.abs(st.positions[:, 1]).max() > 1e-3  # clearly off-axis
    assert np.abs(st.velocities).max() == 0.0


def test_mirrored_seeds_give_mirrored_equilibria(rig):
    # both rest lengths are equal during pre-compression, so the two
    # perturbation signs must settle into exact mirror images
    _, beam, tendons, env = rig
    profile = ActuationProfile(delta_L=10.0, delta_tau=25.0)
    a = tendon.precompress(beam, env, tendons, profile, seed=0)
    b = tendon.precompress(beam, env, tendons, profile, seed=2)
    assert np.abs(a.positions[:, 0] - b.positions[:, 0]).max() < 1e-12
    assert np.abs(a.positions[:, 1] + b.positions[:, 1]).max() < 1e-12


def test_run_actuated_trace_shapes(rig):
    _, beam, tendons, env = rig
    profile = ActuationProfile(delta_L=0.0, delta_tau=15.0, n_cycles=1)
    trace = tendon.run_actuated(beam, env, tendons, profile,
                                sample_rate=50.0, seed=0, beam_id="S_64")
    n = int(round(profile.period * 50.0)) + 1
    assert trace.times.shape == (n,)
    assert trace.tension_left.shape == (n,)
    assert trace.marker_positions.shape == (geometry.N_MARKERS, n, 2)
    assert trace.times[0] == 0.0
    assert np.all(trace.tension_left >= 0.0)
    assert trace.audit is not None and trace.audit.dissipated >= 0.0


def test_tension_positive_part_only(rig):
    _, beam, tendons, _ = rig
    st = solver.rest_state(beam)
    for t in tendons:
        length = tendon.tendon_length(st, t)
        assert tendon.tendon_tension(st, t, rest_length=length + 0.01) == 0.0
        taut = tendon.tendon_tension(st, t, rest_length=length - 0.01)
        assert taut == pytest.approx(t.stiffness * 0.01, rel=1e-6)
