import io
import json
import math
import re

import pytest

from qkdlc.errors import DomainError
from qkdlc.export import (
    CSV_FIELDS,
    SENTINEL_COLOR,
    colormap,
    emit_csv,
    emit_json,
    emit_svg_heatmap,
    read_csv,
    svg_heatmap,
)
from qkdlc.optimize import SweepGrid, SweepRecord, sweep


@pytest.fixture(scope="module")
def records():
    return sweep(SweepGrid([10.0, 50.0, 100.0], [0.01, 0.05, 0.1], pair="bb84"))


def rec(d, r, ratio, rate_lc=0.1):
    return SweepRecord(d, r, 1.0, 1.0, rate_lc, 0.01, ratio)


def test_csv_round_trip_is_exact(records):
    buf = io.StringIO()
    n = emit_csv(records, buf)
    text = buf.getvalue()
    assert n == len(text.encode())
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert len(lines) == 1 + len(records)
    back = read_csv(io.StringIO(text))
    for a, b in zip(records, back):
        for f in CSV_FIELDS:
            assert getattr(a, f) == getattr(b, f)


def test_csv_handles_non_finite(tmp_path):
    rs = [rec(1.0, 0.0, math.inf), rec(2.0, 0.0, math.nan)]
    path = tmp_path / "s.csv"
    emit_csv(rs, path)
    back = read_csv(path)
    assert back[0].ratio == math.inf and math.isnan(back[1].ratio)


def test_csv_rejects_bad_header():
    with pytest.raises(DomainError):
        read_csv(io.StringIO("a,b\n1,2\n"))
    with pytest.raises(DomainError):
        read_csv(io.StringIO(",".join(CSV_FIELDS) + "\n1,2\n"))


def test_json_layout(records):
    buf = io.StringIO()
    emit_json(records + [rec(200.0, 0.5, math.inf)], buf, config={"pair": "bb84"})
    doc = json.loads(buf.getvalue())
    assert doc["config"] == {"pair": "bb84"}
    assert len(doc["records"]) == len(records) + 1
    assert set(doc["records"][0]) == set(CSV_FIELDS)
    assert doc["records"][-1]["ratio"] == "inf"


def test_empty_records_rejected():
    with pytest.raises(DomainError):
        emit_csv([], io.StringIO())


def test_svg_single_cell():
    svg = svg_heatmap([rec(1.0, 0.1, 5.0)], "ratio", "linear")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count('class="cell"') == 1


def test_svg_cells_carry_values(records):
    svg = svg_heatmap(records, "ratio", "log", title="BB84 <ratio>")
    assert svg.count('class="cell"') == 9
    values = sorted(float(v) for v in re.findall(r'data-value="([^"]+)"', svg))
    assert values == sorted(r.ratio for r in records)
    assert "BB84 &lt;ratio&gt;" in svg


def test_svg_log_scale_with_no_positive_values():
    svg = svg_heatmap([rec(1.0, 0.1, 0.0), rec(2.0, 0.1, 0.0)], "ratio", "log")
    cells = re.findall(r'class="cell"[^>]*fill="(#[0-9a-f]{6})"', svg)
    assert cells == [SENTINEL_COLOR, SENTINEL_COLOR]


def test_svg_extremes_map_to_ramp_ends():
    svg = svg_heatmap([rec(1.0, 0.1, 1.0), rec(2.0, 0.1, 2.0), rec(3.0, 0.1, math.nan)], "ratio", "linear")
    fills = re.findall(r'class="cell"[^>]*fill="(#[0-9a-f]{6})"', svg)
    assert fills == [colormap(0.0), colormap(1.0), SENTINEL_COLOR]


def test_svg_rejects_incomplete_grid_and_bad_options():
    with pytest.raises(DomainError):
        svg_heatmap([rec(1.0, 0.1, 1.0), rec(2.0, 0.2, 1.0)])
    with pytest.raises(DomainError):
        svg_heatmap([rec(1.0, 0.1, 1.0)], value="distance_km")
    with pytest.raises(DomainError):
        svg_heatmap([rec(1.0, 0.1, 1.0)], scale="sqrt")


def test_svg_is_byte_stable(records, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg_heatmap(records, "rate_lc", "log", a)
    emit_svg_heatmap(list(records), "rate_lc", "log", b)
    assert a.read_bytes() == b.read_bytes()


def test_bb84_ratio_gradient_over_figure_domain():
    grid = SweepGrid([10.0, 40.0, 70.0, 100.0, 130.0], [0.01, 0.03, 0.05, 0.08, 0.1], pair="bb84")
    cells = {(r.distance_km, r.leak_fraction): r.ratio for r in sweep(grid)}
    for r in grid.leaks:
        row = [cells[(d, r)] for d in grid.distances]
        assert row == sorted(row)
    for d in grid.distances:
        col = [cells[(d, r)] for r in grid.leaks]
        assert col == sorted(col, reverse=True)
