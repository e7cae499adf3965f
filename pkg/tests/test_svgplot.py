import xml.etree.ElementTree as ET

import numpy as np
import pytest

from velsel.svgplot import Series, line_plot

NS = "{http://www.w3.org/2000/svg}"


def test_plot_is_valid_and_deterministic(tmp_path):
    x = np.array([1.0, 2.0, 4.0, 8.0])
    series = [Series(x, x ** 0.5, "theory"),
              Series(x, x ** 0.5 * 1.02, "mc", yerr=0.05 * x, style="points")]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    line_plot(a, series, "U0 (uK)", "eta", "title", logx=True, logy=True)
    line_plot(b, series, "U0 (uK)", "eta", "title", logx=True, logy=True)
    assert a.read_bytes() == b.read_bytes()
    root = ET.parse(a).getroot()
    assert root.tag == NS + "svg"
    assert len(root.findall(NS + "polyline")) == 1
    assert len(root.findall(NS + "circle")) == 4
    # one error bar per point plus tick marks
    bars = [l for l in root.findall(NS + "line") if l.get("stroke") != "black"]
    assert len(bars) == 4


def test_log_axes_skip_nonpositive(tmp_path):
    p = tmp_path / "c.svg"
    line_plot(p, [Series([1, 2, 3], [0.0, 1.0, 2.0], "s", style="points")], "x", "y", logy=True)
    assert len(ET.parse(p).getroot().findall(NS + "circle")) == 2


def test_linear_axes_and_escaping(tmp_path):
    p = tmp_path / "d.svg"
    line_plot(p, [Series([0, 1], [0, 1], "a < b")], "x & y", "z")
    text = p.read_text()
    assert "a &lt; b" in text and "x &amp; y" in text


def test_nothing_to_plot(tmp_path):
    with pytest.raises(ValueError):
        line_plot(tmp_path / "e.svg", [], "x", "y")
    with pytest.raises(ValueError):
        line_plot(tmp_path / "e.svg", [Series([np.nan], [np.nan], "n")], "x", "y")
