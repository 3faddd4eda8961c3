import xml.etree.ElementTree as ET

import numpy as np

from photon_mux.render import _contour_edges, heatmaps, line_chart

NS = "{http://www.w3.org/2000/svg}"


def test_line_chart_is_valid_svg_and_deterministic():
    series = [("a", [1, 10, 100], [0.1, 0.5, 0.3]), ("b", [1, 10, 100], [0.2, 0.2, 0.2])]
    svg = line_chart(series, "x", "y", "t & co", log_x=True, hline=("ref", 0.15))
    assert svg == line_chart(series, "x", "y", "t & co", log_x=True, hline=("ref", 0.15))
    root = ET.fromstring(svg.encode())
    assert len(root.findall(f"{NS}polyline")) == 2
    assert "t &amp; co" in svg


def test_heatmap_cells_and_contours():
    values = np.array([[0.0, 1.0], [2.0, 3.0]])
    svg = heatmaps([{"values": values, "x_axis": (0, 1), "y_axis": (0, 1), "title": "p",
                     "markers": [(0.5, 0.5)], "lines": [((0, 1), (0, 1))]}], "x", "y", levels=(1.5,))
    root = ET.fromstring(svg.encode())
    paths = root.findall(f"{NS}path")
    assert len(paths) == 1 and paths[0].find(f"{NS}title").text == "1.5"
    assert len(root.findall(f"{NS}circle")) == 1


def test_contour_edges_separate_levels():
    values = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert list(_contour_edges(values, 0.5)) == [(1, 0, 1, 1), (1, 1, 1, 2)]
    assert list(_contour_edges(values, 5.0)) == []
