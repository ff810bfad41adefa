"""Shared fixtures. The exemplar runs are expensive, so they are built
once per session and reused by the behaviour tests."""
import time

import pytest

from wavebeam import analysis, geometry, tendon

EXEMPLAR_CELLS = {
    "no_precompression": (0.0, 15.0),
    "lopsided": (15.0, 35.0),
    "wave": (10.0, 35.0),
}


@pytest.fixture(scope="session")
def s64():
    spec = geometry.preset("S_64")
    beam = geometry.discretize(spec)
    tendons = tendon.tendon_pair(spec, beam)
    env = tendon.bench_environment(beam)
    return spec, beam, tendons, env


@pytest.fixture(scope="session")
def exemplars(s64):
    """((delta_L, delta_tau) -> (trace, report), wall seconds) for the
    three reference cells."""
    _, beam, tendons, env = s64
    out = {}
    t0 = time.perf_counter()
    for dl, dt in EXEMPLAR_CELLS.values():
        profile = tendon.ActuationProfile(delta_L=dl, delta_tau=dt,
                                          n_cycles=10)
        trace = tendon.run_actuated(beam, env, tendons, profile,
                                    seed=0, beam_id="S_64")
        out[(dl, dt)] = (trace, analysis.classify_regime(trace))
    return out, time.perf_counter() - t0
