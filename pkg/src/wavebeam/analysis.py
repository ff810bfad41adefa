"""Trace container and signal analysis: phase shifts, tension-drop (snap)
detection, traveling-wave metrics and regime classification.

Classifier thresholds are narrative-derived and centralized in
ClassifierConfig so they can be tuned in one place.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

DEG = 180.0 / np.pi


class AnalysisError(ValueError):
    pass


class UndefinedPhaseError(AnalysisError):
    """Phase of a zero-variance signal is undefined."""


class InsufficientDataError(AnalysisError):
    pass


@dataclass(frozen=True)
class EnergyAudit:
    """Energy bookkeeping accumulated over one actuated run (J)."""
    actuator_work: float
    dissipated: float
    mechanical_initial: float
    mechanical_final: float


@dataclass(frozen=True)
class Trace:
    """Time-sampled tendon tensions and marker positions of one run."""
    sample_rate: float                 # Hz
    times: np.ndarray                  # (T,) s, uniform
    tension_left: np.ndarray           # (T,) N
    tension_right: np.ndarray          # (T,) N
    marker_positions: np.ndarray       # (n_markers, T, 2) m
    profile: object                    # generating ActuationProfile
    beam_id: str
    com: np.ndarray | None = None      # (T, 2) m, locomotion runs only
    audit: EnergyAudit | None = None

    def __post_init__(self):
        T = len(self.times)
        if not (len(self.tension_left) == len(self.tension_right) == T
                and self.marker_positions.shape[1] == T):
            raise AnalysisError("trace arrays must share one sample count")
        dts = np.diff(self.times)
        if T > 1 and not np.allclose(dts, 1.0 / self.sample_rate, rtol=1e-6):
            raise AnalysisError("times must increase at 1/sample_rate spacing")
        if np.any(self.tension_left < 0) or np.any(self.tension_right < 0):
            raise AnalysisError("tensions must be >= 0")

    @property
    def n_markers(self) -> int:
        return self.marker_positions.shape[0]


@dataclass(frozen=True)
class ClassifierConfig:
    """Decision thresholds for the three-regime taxonomy."""
    phase_cut_deg: float = 170.0       # below: candidate traveling wave
    peak_ratio_wave_max: float = 1.4   # "roughly the same" peaks
    peak_ratio_lopsided: float = 1.6   # one-sided buckling signature
    drop_fraction: float = 0.3         # of the running cycle peak
    drop_window: float = 0.15          # s; bench drag stretches a snap's
                                       # tension collapse over ~0.1 s
    drop_refractory: float = 0.1       # s
    slack_floor: float = 0.05          # of the running peak; recovery level
    engagement_guard: float = 0.25     # s taut before a fall can count
    drops_per_two_cycles: float = 1.0  # per tendon, TYPE III floor


DEFAULT_CLASSIFIER = ClassifierConfig()


@dataclass(frozen=True)
class RegimeReport:
    label: str                          # TypeI | TypeII | TypeIII
    phase_shift_deg: float
    drop_events_left: list[float]
    drop_events_right: list[float]
    peak_ratio: float
    marker_phase_lags_deg: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _xcorr_lag(a: np.ndarray, b: np.ndarray, max_lag: int) -> int:
    """Signed lag (samples) maximizing the cross-correlation of b against a.

    Positive lag means b is delayed relative to a.  Only fully overlapped
    windows are compared: the core of `a` is slid across `b`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a - a.mean()
    b = b - b.mean()
    if np.allclose(a, 0) or np.allclose(b, 0):
        raise UndefinedPhaseError("zero-variance signal has no phase")
    n = len(a)
    if n <= 2 * max_lag + 1:
        raise InsufficientDataError("signal too short for the requested lag range")
    core = a[max_lag:n - max_lag]
    corr = np.correlate(b, core, mode="valid")   # lags 0 .. 2*max_lag
    return int(np.argmax(corr)) - max_lag


def phase_shift(a, b, period: float, sample_rate: float) -> float:
    """Phase between two periodic signals in [0, 180] degrees.

    Cross-correlation maximum over lags within +-period/2, mapped to an
    absolute phase angle.  Invariant to positive affine transforms and
    symmetric in its arguments.
    """
    a = np.asarray(a, dtype=float)
    if len(a) < 3 * period * sample_rate:
        raise InsufficientDataError("signals must cover at least 3 periods")
    max_lag = int(round(period * sample_rate / 2.0))
    lag = _xcorr_lag(a, b, max_lag)
    phase = abs(lag) / (period * sample_rate) * 360.0
    return float(min(phase, 360.0 - phase)) if phase > 180.0 else float(phase)


def marker_phase_lag(ref, sig, period: float, sample_rate: float) -> float:
    """Signed phase lag of sig behind ref, in (-180, 180] degrees."""
    max_lag = int(round(period * sample_rate / 2.0))
    lag = _xcorr_lag(ref, sig, max_lag)
    return float(lag / (period * sample_rate) * 360.0)


def detect_tension_drops(tension, sample_rate: float,
                         config: ClassifierConfig = DEFAULT_CLASSIFIER,
                         period: float | None = None) -> list[float]:
    """Times of sudden tension drops (snap-through signatures).

    A drop is a fall of >= drop_fraction of the running cycle peak within
    drop_window seconds; events are separated by the refractory time and
    timed at the start of the fall.

    Falls that terminate in sustained slack are excluded: a snap-through is
    a transient between taut states, so the signal must climb back above
    slack_floor * running peak within the refractory time after the fall.
    An ordinary unloading ramp crossing into slack does not qualify.

    Falls too soon after the tendon leaves slack are excluded as well: a
    freshly re-engaged tendon rings as it picks up load, and the settle
    dip of that overshoot is not a snap event either.
    """
    tension = np.asarray(tension, dtype=float)
    n = len(tension)
    if n < 10:
        raise InsufficientDataError("need at least 10 samples")
    w = max(1, int(round(config.drop_window * sample_rate)))
    refr = int(round(config.drop_refractory * sample_rate))

    # running peak: trailing max over one cycle if known, else prefix max
    if period is not None:
        win = max(1, int(round(period * sample_rate)))
        peak_ref = np.array([tension[max(0, i - win):i + 1].max() for i in range(n)])
    else:
        peak_ref = np.maximum.accumulate(tension)

    # forward minimum within the window
    drop = np.empty(n)
    for i in range(n):
        j = min(n, i + w + 1)
        drop[i] = tension[i] - tension[i + 1:j].min(initial=tension[i])

    above = drop >= config.drop_fraction * np.maximum(peak_ref, 1e-12)

    # samples since the tendon last sat at slack (engagement age)
    slack = tension < config.slack_floor * np.maximum(peak_ref, 1e-12)
    age = np.empty(n, dtype=np.int64)
    a = n   # taut from the start counts as fully engaged
    for i in range(n):
        a = 0 if slack[i] else a + 1
        age[i] = a
    guard = int(round(config.engagement_guard * sample_rate))

    events = []
    i = 0
    while i < n:
        if above[i]:
            j = i
            while j < n and above[j]:
                j += 1
            k = i + int(np.argmax(drop[i:j]))   # steepest point of this episode
            jmin = k + 1 + int(np.argmin(tension[k + 1:min(n, k + w + 1)])) \
                if k + 1 < n else k
            recov = tension[jmin:min(n, jmin + refr + 1)].max(initial=0.0)
            taut_again = recov >= config.slack_floor * max(peak_ref[k], 1e-12)
            # the window max sits up to drop_window before the collapse;
            # report the steepest single-sample fall as the event time
            fall = k + int(np.argmin(np.diff(tension[k:jmin + 1]))) \
                if jmin > k else k
            if (taut_again and age[k] >= guard
                    and (not events or k - events[-1] >= refr)):
                events.append(fall)
            i = max(j, k + refr)
        else:
            i += 1
    return [float(k) / sample_rate for k in events]


def _drop_times(trace: Trace, tension, config) -> list[float]:
    rel = detect_tension_drops(tension, trace.sample_rate, config,
                               period=trace.profile.period)
    return [float(trace.times[0] + t) for t in rel]


def classify_regime(trace: Trace,
                    config: ClassifierConfig = DEFAULT_CLASSIFIER) -> RegimeReport:
    """Label a trace TypeI / TypeII / TypeIII with its evidence.

    TypeIII: drops on both tendons, phase below the cut, comparable peaks.
    TypeII:  lopsided peaks or single-sided drops.
    TypeI:   otherwise (antiphase bending, no snap events).
    """
    period = trace.profile.period
    duration = trace.times[-1] - trace.times[0]
    n_cycles = duration / period
    if n_cycles < 3 - 1e-9:
        raise InsufficientDataError(
            f"trace covers {n_cycles:.2f} cycles; need >= 3")

    phase = phase_shift(trace.tension_left, trace.tension_right,
                        period, trace.sample_rate)
    drops_l = _drop_times(trace, trace.tension_left, config)
    drops_r = _drop_times(trace, trace.tension_right, config)
    pk_l = float(trace.tension_left.max())
    pk_r = float(trace.tension_right.max())
    lo = min(pk_l, pk_r)
    peak_ratio = float(max(pk_l, pk_r) / lo) if lo > 0 else np.inf

    lags = marker_lags(trace)

    rate_l = len(drops_l) / n_cycles * 2.0
    rate_r = len(drops_r) / n_cycles * 2.0
    both_sides = (rate_l >= config.drops_per_two_cycles
                  and rate_r >= config.drops_per_two_cycles)
    # single-sided snapping must be sustained, not one startup transient
    one_sided = ((rate_l >= config.drops_per_two_cycles)
                 != (rate_r >= config.drops_per_two_cycles))

    if both_sides and phase < config.phase_cut_deg and peak_ratio <= config.peak_ratio_wave_max:
        label = "TypeIII"
    elif peak_ratio >= config.peak_ratio_lopsided or one_sided:
        label = "TypeII"
    else:
        label = "TypeI"

    return RegimeReport(
        label=label,
        phase_shift_deg=phase,
        drop_events_left=drops_l,
        drop_events_right=drops_r,
        peak_ratio=peak_ratio if np.isfinite(peak_ratio) else 1.0,
        marker_phase_lags_deg=lags,
    )


def _transverse_displacement(trace: Trace) -> np.ndarray:
    """Per-marker transverse (y) displacement about its mean, (m, T)."""
    y = trace.marker_positions[:, :, 1]
    return y - y.mean(axis=1, keepdims=True)


def marker_lags(trace: Trace, min_amplitude_fraction: float = 1e-5) -> list[float]:
    """Signed phase lag of each marker's transverse motion behind marker 0.

    Markers with negligible motion (including the reference candidates)
    are reported as NaN.  The reference is the first non-degenerate marker.
    """
    period = trace.profile.period
    disp = _transverse_displacement(trace)
    L = _body_length(trace)
    amp = disp.std(axis=1)
    ok = amp >= min_amplitude_fraction * L
    lags = [float("nan")] * trace.n_markers
    ref_idx = next((i for i in range(trace.n_markers) if ok[i]), None)
    if ref_idx is None:
        return lags
    for i in range(trace.n_markers):
        if not ok[i]:
            continue
        lags[i] = marker_phase_lag(disp[ref_idx], disp[i],
                                   period, trace.sample_rate)
    return lags


def _body_length(trace: Trace) -> float:
    p0 = trace.marker_positions[:, 0, :]
    return float(np.linalg.norm(np.diff(p0, axis=0), axis=1).sum()) or 1.0


@dataclass(frozen=True)
class WaveMetrics:
    marker_phase_lags_deg: list[float]
    traveling_wave_index: float
    excluded_markers: list[int]


def wave_metrics(trace: Trace) -> WaveMetrics:
    """Traveling-wave structure of the marker motion.

    The index is the Spearman rank correlation between marker order along
    the body and unwrapped phase lag: 1.0 for a clean traveling wave,
    near 0 for a standing one.
    """
    period = trace.profile.period
    duration = trace.times[-1] - trace.times[0]
    if duration / period < 3 - 1e-9:
        raise InsufficientDataError("need >= 3 actuation cycles")
    if trace.n_markers < 4:
        raise InsufficientDataError("need >= 4 markers")

    lags = marker_lags(trace)
    excluded = [i for i, v in enumerate(lags) if not np.isfinite(v)]
    valid = [(i, v) for i, v in enumerate(lags) if np.isfinite(v)]
    if len(valid) < 4:
        return WaveMetrics(lags, 0.0, excluded)

    order = [i for i, _ in valid]
    raw = np.array([v for _, v in valid])
    # unwrap modulo-360 jumps along the body
    unwrapped = np.degrees(np.unwrap(np.radians(raw)))
    if np.allclose(unwrapped, unwrapped[0], atol=1e-9):
        return WaveMetrics(lags, 0.0, excluded)
    rho = stats.spearmanr(order, unwrapped).statistic
    index = float(abs(rho)) if np.isfinite(rho) else 0.0
    return WaveMetrics(lags, index, excluded)
