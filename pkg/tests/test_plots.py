import xml.etree.ElementTree as ET

from ciotrl.plots import render_line_chart


def chart(series):
    return render_line_chart(title="demo", xlabel="x", ylabel="y", series=series)


def test_output_is_deterministic():
    series = [("a", [0, 1, 2], [0.0, 0.5, 0.25]), ("b", [0, 1, 2], [1.0, 1.0, 0.9])]
    assert chart(series) == chart(series)


def test_polyline_per_series_and_wellformed():
    series = [("a", [0, 1, 2], [0.0, 0.5, 0.25]), ("b", [0, 1, 2], [1.0, 1.0, 0.9])]
    svg = chart(series)
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    polylines = root.findall(f"{ns}polyline")
    assert len(polylines) == 2
    for node in polylines:
        assert len(node.get("points").split()) == 3
    texts = [node.text for node in root.iter(f"{ns}text")]
    assert "demo" in texts and "a" in texts and "b" in texts


def test_constant_series_does_not_collapse():
    svg = chart([("flat", [0, 1, 2, 3], [2.0, 2.0, 2.0, 2.0])])
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    points = root.find(f"{ns}polyline").get("points").split()
    ys = {p.split(",")[1] for p in points}
    assert len(ys) == 1  # flat line
    xs = [float(p.split(",")[0]) for p in points]
    assert xs == sorted(xs) and xs[0] < xs[-1]


def test_empty_series_still_renders():
    svg = chart([])
    ET.fromstring(svg)
    assert "<svg" in svg and svg.endswith("</svg>\n")


def test_single_point_series():
    svg = chart([("dot", [5], [1.25])])
    ET.fromstring(svg)
