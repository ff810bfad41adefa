"""Command-line entry points.

Exit codes: 0 success, 1 run/check failure, 2 config error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import analysis, harness, traceio
from .config import ConfigError, load_run_config, load_sweep_plan


def _load_config(path, seed):
    try:
        cfg = load_run_config(path)
    except (ConfigError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _report_figures(trace, report, out_dir, stem):
    """Render the report-path figures next to the delimited output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(trace.times, trace.tension_left, label="left", lw=0.9)
    ax.plot(trace.times, trace.tension_right, label="right", lw=0.9)
    for t in report.drop_events_left:
        ax.axvline(t, color="C0", alpha=0.25, lw=0.8)
    for t in report.drop_events_right:
        ax.axvline(t, color="C1", alpha=0.25, lw=0.8)
    ax.set(xlabel="time [s]", ylabel="tension [N]",
           title=f"{trace.beam_id}: {report.label}, "
                 f"phase {report.phase_shift_deg:.0f} deg")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(Path(out_dir) / f"{stem}_tension.png", dpi=130)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 3.2))
    for i in range(trace.n_markers):
        ax.plot(trace.times, trace.marker_positions[i, :, 1] * 1e3,
                lw=0.8, label=f"m{i}")
    ax.set(xlabel="time [s]", ylabel="transverse displacement [mm]")
    ax.legend(frameon=False, ncol=4, fontsize=7)
    fig.tight_layout()
    fig.savefig(Path(out_dir) / f"{stem}_markers.png", dpi=130)
    plt.close(fig)


@click.group()
def main():
    """Planar tendon-driven flexible-beam simulator."""


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None,
              help="output directory (default: config's output.directory)")
@click.option("--seed", type=int, default=None, help="override the seed")
@click.option("--figures/--no-figures", default=True,
              help="render tension/marker PNGs alongside the CSV")
def simulate(config, out, seed, figures):
    """Run one actuated simulation and classify its regime."""
    cfg = _load_config(config, seed)
    try:
        trace, report, csv_path, json_path = harness.run_single(cfg, out_dir=out)
    except Exception as e:
        click.echo(f"run failed: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    if figures:
        _report_figures(trace, report, csv_path.parent, csv_path.stem)
    click.echo(f"{report.label} phase={report.phase_shift_deg:.1f} deg "
               f"peak_ratio={report.peak_ratio:.2f} "
               f"drops={len(report.drop_events_left)}/"
               f"{len(report.drop_events_right)}")
    click.echo(f"wrote {csv_path} and {json_path}")


@main.command()
@click.argument("plan", type=click.Path(exists=True))
@click.argument("config", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="concurrent combinations")
@click.option("--keep-traces", is_flag=True,
              help="persist every run's CSV, not just the summary")
def sweep(plan, config, out, seed, jobs, keep_traces):
    """Run a (beam x delta_L x delta_tau) grid; write summary.csv."""
    cfg = _load_config(config, seed)
    try:
        sweep_plan = load_sweep_plan(plan)
    except (ConfigError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    try:
        path = harness.run_sweep(sweep_plan, cfg, out_dir=out, jobs=jobs,
                                 keep_traces=keep_traces)
    except Exception as e:
        click.echo(f"sweep failed: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    click.echo(f"wrote {path}")


@main.command()
@click.argument("trace_csv", type=click.Path(exists=True))
@click.option("--period", type=float, default=None,
              help="actuation period in s (default: estimated from tension)")
def classify(trace_csv, period):
    """Classify a persisted trace CSV; print the report as JSON."""
    try:
        trace, meta = traceio.read_trace(trace_csv, period=period)
        report = analysis.classify_regime(trace)
    except (traceio.TraceFormatError, analysis.AnalysisError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2 if isinstance(e, traceio.TraceFormatError) else 1)
    out = {"config_hash": meta["config_hash"], "seed": meta["seed"]}
    out.update(report.to_dict())
    click.echo(json.dumps(out, indent=2))


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
def locomote(config, out, seed):
    """Free-floating locomotion run against the configured ground model."""
    cfg = _load_config(config, seed)
    try:
        trace, result, csv_path, json_path = harness.run_locomotion(
            cfg, out_dir=out)
    except Exception as e:
        click.echo(f"run failed: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    click.echo(f"net displacement {result.net_displacement * 1e3:.2f} mm, "
               f"stride {result.stride_displacement * 1e3:.2f} mm/cycle")
    click.echo(f"wrote {csv_path} and {json_path}")


@main.command()
def validate():
    """Run the built-in oracle suite (buckling, gradient, energy, momentum)."""
    results = harness.validate()
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        click.echo(f"{mark} {r.name}: {r.detail} "
                   f"(measured {r.measured:.6g}, expected {r.expected:.6g} "
                   f"+- {r.tolerance:g})")
        failed += not r.passed
    if failed:
        click.echo(f"{failed}/{len(results)} checks failed", err=True)
        sys.exit(1)
    click.echo(f"all {len(results)} checks passed")


if __name__ == "__main__":
    main()
