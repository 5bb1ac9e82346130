import xml.etree.ElementTree as ET

import numpy as np
import pytest

from smnorms import figures

NS = "{http://www.w3.org/2000/svg}"


def test_radar_geometry_and_xml():
    labels = ["a", "b", "c", "d"]
    svg = figures.radar_svg(labels, [5.0, 2.5, 0.0, 1.0], 5.0, title="x <&> y", size=400)
    root = ET.fromstring(svg.encode())
    circles = root.findall(f"{NS}circle")
    assert len(circles) == 4
    cx, cy, radius = 200, 210, 400 * 0.34
    # spoke 0 points straight up and is at full scale
    assert float(circles[0].get("cx")) == pytest.approx(cx, abs=0.01)
    assert float(circles[0].get("cy")) == pytest.approx(cy - radius, abs=0.01)
    # spoke 1 points right at half scale
    assert float(circles[1].get("cx")) == pytest.approx(cx + radius / 2, abs=0.01)


def test_radar_zero_vector_is_valid():
    svg = figures.radar_svg([str(i) for i in range(12)], [0.0] * 12, 5.0)
    root = ET.fromstring(svg.encode())
    pts = {c.get("cx") + "," + c.get("cy") for c in root.findall(f"{NS}circle")}
    assert len(pts) == 1


def test_radar_needs_three_spokes():
    with pytest.raises(ValueError):
        figures.radar_svg(["a", "b"], [1, 2], 5)


def test_histogram_and_heatmap_parse():
    rng = np.random.default_rng(0)
    ET.fromstring(figures.histogram_svg(rng.uniform(0, 5, 100), rng.uniform(0, 5, 100),
                                        "Visual", "rho = 0.5").encode())
    C = np.corrcoef(rng.normal(size=(5, 50)))
    root = ET.fromstring(figures.heatmap_svg(C, list("abcde"), "corr").encode())
    assert len(root.findall(f"{NS}rect")) == 1 + 25
    D = np.abs(rng.normal(size=(4, 4)))
    ET.fromstring(figures.heatmap_svg(D, None, symmetric=False).encode())


def test_heatmap_diverging_colours():
    svg = figures.heatmap_svg(np.array([[1.0, -1.0], [-1.0, 1.0]]), title="t")
    assert "#1f77b4" in svg and "#d62728" in svg
