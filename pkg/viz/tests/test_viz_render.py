import pytest

from wavebeam_viz import FigureRequest, SchemaError, render
from wavebeam_viz.cli import main
from wavebeam_viz.render import summary_grids
from wavebeam_viz.schema import read_summary, read_trace


def test_renders_all_four_kinds(artifacts, summary_72, tmp_path):
    jobs = [
        ("TensionTimeSeries", (artifacts["trace"], artifacts["report"])),
        ("MarkerDisplacement", (artifacts["trace"],)),
        ("RegimeMap", (summary_72,)),
        ("LocomotionPath", (artifacts["loco_trace"],)),
    ]
    for kind, inputs in jobs:
        out = render(FigureRequest(kind=kind,
                                   inputs=tuple(str(p) for p in inputs),
                                   output=str(tmp_path / f"{kind}.png")))
        assert out.exists() and out.stat().st_size > 0, kind


def test_regime_map_reflects_all_72_cells(summary_72):
    rows = read_summary(summary_72)
    assert len(rows) == 72
    beams, dls, dts, grids = summary_grids(rows)
    assert beams == ["S_62", "S_64", "S_66"]
    assert len(dls) == 4 and len(dts) == 6
    cells = [lbl for b in beams for row in grids[b] for lbl in row]
    assert len(cells) == 72
    assert all(lbl in ("TypeI", "TypeII", "TypeIII") for lbl in cells)


def test_regime_map_rejects_incomplete_summary(summary_72, tmp_path):
    lines = summary_72.read_text().splitlines()
    partial = tmp_path / "partial.csv"
    partial.write_text("\n".join(lines[:-1]) + "\n")   # drop one cell
    with pytest.raises(SchemaError, match="missing cell"):
        summary_grids(read_summary(partial))
    dup = tmp_path / "dup.csv"
    dup.write_text("\n".join(lines + [lines[-1]]) + "\n")
    with pytest.raises(SchemaError, match="duplicate"):
        summary_grids(read_summary(dup))


def test_rendering_is_deterministic(artifacts, tmp_path):
    req = lambda p: FigureRequest(kind="TensionTimeSeries",
                                  inputs=(str(artifacts["trace"]),
                                          str(artifacts["report"])),
                                  output=str(p))
    a = render(req(tmp_path / "a.png")).read_bytes()
    b = render(req(tmp_path / "b.png")).read_bytes()
    assert a == b
    s1 = render(req(tmp_path / "a.svg")).read_text()
    s2 = render(req(tmp_path / "b.svg")).read_text()
    assert s1 == s2


def test_drop_markers_follow_the_report(artifacts, tmp_path):
    # without the report JSON the figure still renders (no event markers)
    out = render(FigureRequest(kind="TensionTimeSeries",
                               inputs=(str(artifacts["trace"]),),
                               output=str(tmp_path / "bare.png")))
    assert out.stat().st_size > 0


def test_schema_violations_are_named(artifacts, tmp_path):
    trace_lines = artifacts["trace"].read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(
        [trace_lines[0], trace_lines[1].replace("m0_x", "marker0")]
        + trace_lines[2:]) + "\n")
    with pytest.raises(SchemaError, match="marker0"):
        read_trace(bad)

    headless = tmp_path / "headless.csv"
    headless.write_text("\n".join(trace_lines[1:]) + "\n")
    with pytest.raises(SchemaError, match="config_hash"):
        read_trace(headless)


def _without_com(trace_path, out_path):
    lines = trace_path.read_text().splitlines()
    names = lines[1].split(",")
    if names[-2:] == ["com_x", "com_y"]:
        keep = len(names) - 2
        lines = [lines[0]] + [",".join(l.split(",")[:keep])
                              for l in lines[1:]]
    out_path.write_text("\n".join(lines) + "\n")
    return out_path


def test_locomotion_path_needs_com_columns(artifacts, tmp_path):
    bare = _without_com(artifacts["trace"], tmp_path / "bare.csv")
    with pytest.raises(SchemaError, match="com"):
        render(FigureRequest(kind="LocomotionPath",
                             inputs=(str(bare),),
                             output=str(tmp_path / "x.png")))


def test_request_validation(tmp_path):
    with pytest.raises(SchemaError):
        FigureRequest(kind="PieChart", inputs=("x",), output="y")
    with pytest.raises(SchemaError):
        FigureRequest(kind="RegimeMap", inputs=(), output="y")
    with pytest.raises(SchemaError):
        FigureRequest(kind="RegimeMap",
                      inputs=(str(tmp_path / "absent.csv"),), output="y")


def test_cli_round_trip(artifacts, summary_72, tmp_path):
    out = tmp_path / "map.png"
    assert main(["RegimeMap", str(out), str(summary_72)]) == 0
    assert out.exists()
    bare = _without_com(artifacts["trace"], tmp_path / "bare.csv")
    assert main(["LocomotionPath", str(tmp_path / "no.png"),
                 str(bare)]) == 2
