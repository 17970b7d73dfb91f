import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vqcollide import svg

NS = "{http://www.w3.org/2000/svg}"


def _line(path):
    svg.line_plot([("a", [1, 2, 5, 10], [3, 2, np.nan, 1]), ("b & c", [1, 10], [1, 2])],
                  path, title="t < 1", xlabel="E", ylabel="sigma", logx=True)


def test_line_plot_is_valid_and_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    _line(p1)
    _line(p2)
    assert p1.read_bytes() == p2.read_bytes()
    root = ET.parse(p1).getroot()
    assert root.tag == NS + "svg"
    lines = root.findall(NS + "polyline")
    assert len(lines) == 2
    assert len(lines[0].get("points").split()) == 3  # NaN point dropped
    assert "b & c" in [t.text for t in root.iter(NS + "text")]


def test_heatmap_cells_and_nan(tmp_path):
    grid = np.array([[1e-12, 1e-6, np.nan], [1e-3, 0.0, 1e-9]])
    p = tmp_path / "h.svg"
    svg.heatmap(grid, [1.0, 2.0, 3.0], [0.5, 1.0], p)
    root = ET.parse(p).getroot()
    fills = [r.get("fill") for r in root.iter(NS + "rect")]
    assert "#bbbbbb" in fills
    assert fills.count("#bbbbbb") == 1
    assert svg.colormap(0.0) in fills and svg.colormap(1.0) in fills


def test_heatmap_shape_checked(tmp_path):
    with pytest.raises(ValueError):
        svg.heatmap(np.ones((2, 3)), [1, 2], [1, 2, 3], tmp_path / "x.svg")


def test_colormap_endpoints():
    assert svg.colormap(0.0) == "#440154"
    assert svg.colormap(1.0) == "#fde725"
    assert svg.colormap(-3) == svg.colormap(0.0)
