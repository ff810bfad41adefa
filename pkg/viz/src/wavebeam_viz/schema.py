"""Readers for the simulator's persisted artifacts.

This package deliberately has no dependency on the simulator itself: the
CSV/JSON files on disk are the contract. Anything that does not match the
schema fails loudly, naming the offending column.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """An artifact does not match the expected on-disk schema."""


_HEADER_RE = re.compile(r"^# config_hash=([0-9a-f]+) seed=(\d+)$")

SUMMARY_COLUMNS = ("beam_id", "delta_L_mm", "delta_tau_mm", "label",
                   "phase_deg", "peak_ratio", "drops_per_cycle", "n_ok",
                   "error")


def _trace_columns(n_markers: int, with_com: bool) -> list[str]:
    cols = ["time_s", "tension_left_N", "tension_right_N"]
    for i in range(n_markers):
        cols += [f"m{i}_x", f"m{i}_y"]
    if with_com:
        cols += ["com_x", "com_y"]
    return cols


def read_trace(path) -> dict:
    """Parse a trace CSV into arrays.

    Returns {times, tension_left, tension_right, markers (m, T, 2),
    com (T, 2) | None, config_hash, seed}.
    """
    path = Path(path)
    with path.open() as f:
        header = f.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise SchemaError(f"{path}: missing '# config_hash=... seed=...' "
                              "header line")
        names = f.readline().rstrip("\n").split(",")
        body = f.read()

    with_com = names[-2:] == ["com_x", "com_y"]
    n_extra = len(names) - 3 - (2 if with_com else 0)
    n_markers = n_extra // 2
    expected = _trace_columns(n_markers, with_com)
    if names != expected:
        bad = next((c for c, e in zip(names, expected) if c != e), names[-1])
        raise SchemaError(f"{path}: unexpected column {bad!r}")

    try:
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    except ValueError as e:
        raise SchemaError(f"{path}: bad numeric row: {e}") from e
    if data.shape[1] != len(names):
        raise SchemaError(f"{path}: rows have {data.shape[1]} fields, "
                          f"header names {len(names)}")

    markers = np.transpose(
        data[:, 3:3 + 2 * n_markers].reshape(-1, n_markers, 2), (1, 0, 2))
    return {
        "times": data[:, 0],
        "tension_left": data[:, 1],
        "tension_right": data[:, 2],
        "markers": markers,
        "com": data[:, -2:].copy() if with_com else None,
        "config_hash": m.group(1),
        "seed": int(m.group(2)),
    }


def read_report(path) -> dict:
    """Parse a report JSON (classification or locomotion summary)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: report must be a JSON object")
    return data


def read_summary(path) -> list[dict]:
    """Parse a sweep summary.csv into typed row dicts."""
    path = Path(path)
    with path.open() as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty summary")
        for col in SUMMARY_COLUMNS:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = []
        for raw in reader:
            try:
                rows.append({
                    "beam_id": raw["beam_id"],
                    "delta_L_mm": float(raw["delta_L_mm"]),
                    "delta_tau_mm": float(raw["delta_tau_mm"]),
                    "label": raw["label"],
                    "phase_deg": float(raw["phase_deg"])
                    if raw["phase_deg"] else float("nan"),
                    "peak_ratio": float(raw["peak_ratio"])
                    if raw["peak_ratio"] else float("nan"),
                    "drops_per_cycle": float(raw["drops_per_cycle"])
                    if raw["drops_per_cycle"] else float("nan"),
                    "n_ok": int(raw["n_ok"]),
                    "error": raw["error"],
                })
            except (KeyError, ValueError) as e:
                raise SchemaError(f"{path}: bad summary row {raw}: {e}") from e
    if not rows:
        raise SchemaError(f"{path}: summary has no rows")
    return rows
