"""Batch figure rendering from persisted artifacts.

Four figure kinds:

  TensionTimeSeries  both tendon tensions vs time, detected drop events
                     marked (taken from the run's report JSON when given)
  MarkerDisplacement per-marker transverse displacement vs time
  RegimeMap          per-beam grids of the sweep summary colored by label
  LocomotionPath     center-of-mass trajectory of a locomotion trace

Rendering is read-only and deterministic: identical inputs give identical
image bytes (fixed style, fixed SVG hash salt, no timestamps).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "wavebeam-viz"

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors

from .schema import SchemaError, read_report, read_summary, read_trace

KINDS = ("TensionTimeSeries", "MarkerDisplacement", "RegimeMap",
         "LocomotionPath")

LABEL_COLORS = {
    "TypeI": "#4878cf",
    "TypeII": "#e8a33d",
    "TypeIII": "#d65f5f",
    "Failed": "#999999",
}


@dataclass(frozen=True)
class FigureRequest:
    """One rendering job: input artifacts -> one image file."""
    kind: str
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("need at least one input path")
        for p in self.inputs:
            if not Path(p).exists():
                raise SchemaError(f"input {p} does not exist")


def _save(fig, output):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=130, metadata=_no_dates(out))
    plt.close(fig)
    return out


def _no_dates(out):
    # PNG is date-free already; SVG embeds one unless told otherwise
    if out.suffix.lower() == ".svg":
        return {"Date": None}
    return None


def _tension_time_series(request):
    trace = read_trace(request.inputs[0])
    report = read_report(request.inputs[1]) if len(request.inputs) > 1 else {}
    fig, ax = plt.subplots(figsize=(8.0, 3.2))
    ax.plot(trace["times"], trace["tension_left"], lw=0.9,
            color="#4878cf", label="left tendon")
    ax.plot(trace["times"], trace["tension_right"], lw=0.9,
            color="#d65f5f", label="right tendon")
    for t in report.get("drop_events_left", []):
        ax.axvline(t, color="#4878cf", alpha=0.3, lw=0.8)
    for t in report.get("drop_events_right", []):
        ax.axvline(t, color="#d65f5f", alpha=0.3, lw=0.8)
    title = report.get("label", "")
    if title:
        title += f", phase {report.get('phase_shift_deg', float('nan')):.0f} deg"
    ax.set(xlabel="time [s]", ylabel="tension [N]", title=title)
    ax.legend(frameon=False, loc="upper right")
    return _save(fig, request.output)


def _marker_displacement(request):
    trace = read_trace(request.inputs[0])
    markers = trace["markers"]
    fig, ax = plt.subplots(figsize=(8.0, 3.2))
    cmap = plt.get_cmap("viridis")
    n = markers.shape[0]
    for i in range(n):
        y = markers[i, :, 1]
        ax.plot(trace["times"], (y - y.mean()) * 1e3, lw=0.8,
                color=cmap(i / max(n - 1, 1)), label=f"marker {i}")
    ax.set(xlabel="time [s]", ylabel="transverse displacement [mm]")
    ax.legend(frameon=False, ncol=4, fontsize=7)
    return _save(fig, request.output)


def summary_grids(rows):
    """Arrange summary rows as per-beam label grids.

    Returns (beam_ids, delta_L values, delta_tau values, grids) where
    grids[b][i][j] is the label at (delta_L[i], delta_tau[j]).
    """
    beams = sorted({r["beam_id"] for r in rows})
    dls = sorted({r["delta_L_mm"] for r in rows})
    dts = sorted({r["delta_tau_mm"] for r in rows})
    grids = {b: [["" for _ in dts] for _ in dls] for b in beams}
    for r in rows:
        i = dls.index(r["delta_L_mm"])
        j = dts.index(r["delta_tau_mm"])
        if grids[r["beam_id"]][i][j]:
            raise SchemaError(
                f"duplicate summary cell ({r['beam_id']}, "
                f"{r['delta_L_mm']}, {r['delta_tau_mm']})")
        grids[r["beam_id"]][i][j] = r["label"]
    for b, g in grids.items():
        for i, row in enumerate(g):
            for j, label in enumerate(row):
                if not label:
                    raise SchemaError(
                        f"summary is missing cell ({b}, {dls[i]}, {dts[j]})")
    return beams, dls, dts, grids


def _regime_map(request):
    rows = read_summary(request.inputs[0])
    beams, dls, dts, grids = summary_grids(rows)
    order = ["TypeI", "TypeII", "TypeIII", "Failed"]
    cmap = colors.ListedColormap([LABEL_COLORS[k] for k in order])
    fig, axes = plt.subplots(1, len(beams),
                             figsize=(3.1 * len(beams), 2.9),
                             squeeze=False)
    for ax, b in zip(axes[0], beams):
        data = np.array([[order.index(lbl) if lbl in order else 3
                          for lbl in row] for row in grids[b]])
        ax.imshow(data, cmap=cmap, vmin=-0.5, vmax=3.5, origin="lower",
                  aspect="auto")
        for i in range(len(dls)):
            for j in range(len(dts)):
                ax.text(j, i, grids[b][i][j].replace("Type", ""),
                        ha="center", va="center", fontsize=7)
        ax.set(title=b, xticks=range(len(dts)),
               xticklabels=[f"{v:g}" for v in dts],
               yticks=range(len(dls)),
               yticklabels=[f"{v:g}" for v in dls])
        ax.set_xlabel("delta_tau [mm]")
    axes[0][0].set_ylabel("delta_L [mm]")
    return _save(fig, request.output)


def _locomotion_path(request):
    trace = read_trace(request.inputs[0])
    com = trace["com"]
    if com is None:
        raise SchemaError(f"{request.inputs[0]}: no com_x/com_y columns; "
                          "not a locomotion trace")
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(com[:, 0] * 1e3, com[:, 1] * 1e3, lw=1.0, color="#4878cf")
    ax.plot(com[0, 0] * 1e3, com[0, 1] * 1e3, "o", color="#2c9e4b",
            ms=5, label="start")
    ax.plot(com[-1, 0] * 1e3, com[-1, 1] * 1e3, "s", color="#d65f5f",
            ms=5, label="end")
    ax.set(xlabel="x [mm]", ylabel="y [mm]",
           title="center-of-mass trajectory")
    ax.axis("equal")
    ax.legend(frameon=False)
    return _save(fig, request.output)


_RENDERERS = {
    "TensionTimeSeries": _tension_time_series,
    "MarkerDisplacement": _marker_displacement,
    "RegimeMap": _regime_map,
    "LocomotionPath": _locomotion_path,
}


def render(request: FigureRequest) -> Path:
    """Render one figure; returns the written image path."""
    return _RENDERERS[request.kind](request)
