"""Persistence for traces and regime reports.

Trace CSV schema (bit-exact):
    # config_hash=<hex> seed=<int>
    time_s,tension_left_N,tension_right_N,m0_x,m0_y,...,m7_y[,com_x,com_y]
followed by data rows, every float printed with 9 significant digits,
rows newline-terminated.  Reports are plain JSON with the same hash/seed
recorded alongside the classifier output.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import AnalysisError, Trace


class TraceFormatError(ValueError):
    """File does not match the trace CSV schema."""


_HEADER_RE = re.compile(r"^# config_hash=([0-9a-f]+) seed=(\d+)$")
_FMT = "%.9g"


def _columns(n_markers: int, with_com: bool) -> list[str]:
    cols = ["time_s", "tension_left_N", "tension_right_N"]
    for i in range(n_markers):
        cols += [f"m{i}_x", f"m{i}_y"]
    if with_com:
        cols += ["com_x", "com_y"]
    return cols


def write_trace(trace: Trace, path, config_hash: str, seed: int) -> Path:
    """Write a trace to CSV; returns the path written."""
    path = Path(path)
    nm = trace.n_markers
    with_com = trace.com is not None
    T = len(trace.times)
    ncol = 3 + 2 * nm + (2 if with_com else 0)
    data = np.empty((T, ncol))
    data[:, 0] = trace.times
    data[:, 1] = trace.tension_left
    data[:, 2] = trace.tension_right
    # marker_positions is (n_markers, T, 2) -> interleave x,y per marker
    data[:, 3:3 + 2 * nm] = np.transpose(
        trace.marker_positions, (1, 0, 2)).reshape(T, 2 * nm)
    if with_com:
        data[:, -2:] = trace.com
    with path.open("w", newline="\n") as f:
        f.write(f"# config_hash={config_hash} seed={seed}\n")
        f.write(",".join(_columns(nm, with_com)) + "\n")
        for row in data:
            f.write(",".join(_FMT % v for v in row) + "\n")
    return path


@dataclass(frozen=True)
class _ReplayProfile:
    """Minimal stand-in profile for traces reconstructed from CSV."""
    period: float
    delta_L: float = float("nan")
    delta_tau: float = float("nan")


def estimate_period(signal: np.ndarray, sample_rate: float) -> float:
    """Dominant period of a periodic signal via its autocorrelation.

    The first autocorrelation maximum after the initial zero crossing of
    the detrended signal's correlation gives the fundamental lag.
    """
    s = np.asarray(signal, dtype=float)
    s = s - s.mean()
    if np.allclose(s, 0.0):
        raise AnalysisError("signal is constant; no period to estimate")
    ac = np.correlate(s, s, mode="full")[len(s) - 1:]
    # skip the trivial lag-0 peak: first index where ac goes negative
    neg = np.flatnonzero(ac < 0)
    if len(neg) == 0:
        raise AnalysisError("signal autocorrelation never decays; "
                            "cannot estimate a period")
    k = neg[0] + int(np.argmax(ac[neg[0]:]))
    return float(k / sample_rate)


def read_trace(path, period: float | None = None) -> tuple[Trace, dict]:
    """Parse a trace CSV; returns (trace, meta) with meta holding
    config_hash and seed from the header.

    The actuation period is not part of the on-disk schema; pass it
    explicitly or it will be estimated from the left-tendon signal.
    """
    path = Path(path)
    with path.open() as f:
        header = f.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise TraceFormatError(
                f"{path}: first line must be '# config_hash=<hex> "
                f"seed=<int>', got {header!r}")
        meta = {"config_hash": m.group(1), "seed": int(m.group(2))}
        names = f.readline().rstrip("\n").split(",")
        body = f.read()

    n_extra = len(names) - 3
    with_com = names[-2:] == ["com_x", "com_y"]
    nm = (n_extra - 2) // 2 if with_com else n_extra // 2
    expected = _columns(nm, with_com)
    if names != expected:
        bad = next((c for c, e in zip(names, expected) if c != e),
                   names[min(len(expected), len(names)) - 1])
        raise TraceFormatError(
            f"{path}: column {bad!r} does not match the trace schema")

    try:
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    except ValueError as e:
        raise TraceFormatError(f"{path}: bad numeric row: {e}") from e
    if data.shape[1] != len(names):
        raise TraceFormatError(
            f"{path}: rows have {data.shape[1]} fields, header has "
            f"{len(names)}")
    if data.shape[0] < 3:
        raise TraceFormatError(f"{path}: need at least 3 samples")

    times = data[:, 0]
    sample_rate = 1.0 / float(np.mean(np.diff(times)))
    markers = np.transpose(
        data[:, 3:3 + 2 * nm].reshape(-1, nm, 2), (1, 0, 2))
    com = data[:, -2:].copy() if with_com else None
    if period is None:
        period = estimate_period(data[:, 1], sample_rate)
    trace = Trace(sample_rate=sample_rate, times=times,
                  tension_left=data[:, 1], tension_right=data[:, 2],
                  marker_positions=markers,
                  profile=_ReplayProfile(period=period),
                  beam_id="replay", com=com)
    return trace, meta


def write_report(report, path, config_hash: str, seed: int,
                 extra: dict | None = None) -> Path:
    """Write a regime report (or any to_dict-able record) as JSON."""
    path = Path(path)
    payload = {"config_hash": config_hash, "seed": seed}
    payload.update(report.to_dict() if hasattr(report, "to_dict")
                   else dict(report))
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    return path
