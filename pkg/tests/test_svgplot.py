"""SVG rendering: determinism, escaping, and input validation."""

import pytest

from priorbench.svgplot import render_line_chart, render_scatter


def test_line_chart_bytes_are_deterministic(tmp_path):
    series = [("raw", [1, 2, 3, 4], [2.0, 1.0, 0.5, 0.25], {"opacity": 0.4}),
              ("smooth", [1, 2, 3, 4], [2.0, 1.5, 1.0, 0.7], {"width": 2.0})]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_line_chart(str(a), "loss", "epoch", "value", series)
    render_line_chart(str(b), "loss", "epoch", "value", series)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("<svg")
    assert text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 2


def test_scatter_bytes_are_deterministic(tmp_path):
    groups = {"flow": ([1.0, 2.0, 3.0], [0.5, 0.4, 0.35]),
              "diffusion": ([2.0, 4.0], [0.6, 0.45])}
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_scatter(str(a), "sweep", "ms", "fid", groups)
    render_scatter(str(b), "sweep", "ms", "fid", groups)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().count("<circle") == 5


def test_labels_are_escaped(tmp_path):
    path = tmp_path / "esc.svg"
    render_line_chart(str(path), "a < b & c > d", "x<t>", "y&z",
                      [("s<1>", [0, 1], [0, 1])])
    text = path.read_text()
    assert "a &lt; b &amp; c &gt; d" in text
    assert "x&lt;t&gt;" in text
    assert "s&lt;1&gt;" in text
    assert "<t>" not in text


def test_constant_series_still_renders(tmp_path):
    path = tmp_path / "flat.svg"
    render_line_chart(str(path), "flat", "x", "y", [("c", [1, 2, 3], [5, 5, 5])])
    assert "<polyline" in path.read_text()


def test_empty_inputs_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_line_chart(str(tmp_path / "x.svg"), "t", "x", "y", [])
    with pytest.raises(ValueError):
        render_line_chart(str(tmp_path / "x.svg"), "t", "x", "y",
                          [("s", [], [])])
    with pytest.raises(ValueError):
        render_scatter(str(tmp_path / "x.svg"), "t", "x", "y", {})
