"""Density-curve sampling and the two-panel SVG figure."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest
from scipy import stats

from fairsteer.distributions import (
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
)
from fairsteer.errors import InputValidationError
from fairsteer.svg import (
    ENVELOPE_SIGMAS,
    N_CURVE_POINTS,
    DensityCurves,
    build_curves,
    curves_to_csv,
    render_svg,
)

from conftest import make_binary

KEYS = ((0, 0), (1, 0), (0, 1), (1, 1))
UNIFORM_Q = {key: 0.25 for key in KEYS}

BEFORE = make_binary(
    {(0, 0): 0.0, (1, 0): 2.0, (0, 1): 1.0, (1, 1): 4.0},
    {(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.5, (1, 1): 1.5},
    UNIFORM_Q,
)
AFTER = make_binary(
    {(0, 0): 0.5, (1, 0): 2.5, (0, 1): 1.0, (1, 1): 4.0},
    {(0, 0): 1.5, (1, 0): 1.5, (0, 1): 1.5, (1, 1): 1.5},
    UNIFORM_Q,
)


def _multivariate():
    subgroups = {
        key: MultivariateSubgroupGaussian(np.zeros(2), np.eye(2)) for key in KEYS
    }
    return FairDistribution(JointWeights(UNIFORM_Q), subgroups, (0, 1), (0, 1))


class TestBuildCurves:
    def test_grid_and_series_shape(self):
        curves = build_curves(BEFORE, AFTER)
        assert curves.xs.shape == (N_CURVE_POINTS,)
        assert set(curves.series) == {
            (phase, i, a) for phase in ("before", "after") for i, a in KEYS
        }
        for ys in curves.series.values():
            assert ys.shape == curves.xs.shape
            assert np.all(ys >= 0.0)

    def test_envelope_covers_both_models(self):
        curves = build_curves(BEFORE, AFTER)
        spans = [
            (g.mean - ENVELOPE_SIGMAS * g.std, g.mean + ENVELOPE_SIGMAS * g.std)
            for dist in (BEFORE, AFTER)
            for g in dist.subgroups.values()
        ]
        assert curves.xs[0] == pytest.approx(min(lo for lo, _ in spans))
        assert curves.xs[-1] == pytest.approx(max(hi for _, hi in spans))

    def test_values_are_normal_densities(self):
        curves = build_curves(BEFORE, AFTER, n_points=64)
        g = BEFORE.subgroup(1, 1)
        np.testing.assert_allclose(
            curves.series[("before", 1, 1)],
            stats.norm.pdf(curves.xs, loc=g.mean, scale=g.std),
            rtol=1e-12,
        )

    def test_multivariate_rejected(self):
        with pytest.raises(InputValidationError, match="univariate"):
            build_curves(_multivariate(), _multivariate())

    def test_n_points_validated(self):
        with pytest.raises(InputValidationError, match="n_points"):
            build_curves(BEFORE, AFTER, n_points=1)

    def test_series_shape_validated(self):
        xs = np.linspace(0.0, 1.0, 8)
        with pytest.raises(InputValidationError, match="grid"):
            DensityCurves(xs, {("before", 0, 0): np.zeros(7)})


class TestCurvesCsv:
    def test_header_orders_before_then_after(self):
        header, _ = curves_to_csv(build_curves(BEFORE, AFTER, n_points=16))
        columns = header.split(",")
        assert columns[0] == "x"
        assert columns[1:5] == ["before_0_0", "before_0_1", "before_1_0", "before_1_1"]
        assert columns[5:] == ["after_0_0", "after_0_1", "after_1_0", "after_1_1"]

    def test_rows_mirror_the_series_exactly(self):
        curves = build_curves(BEFORE, AFTER, n_points=16)
        header, rows = curves_to_csv(curves)
        assert len(rows) == 16
        parsed = np.array([[float(cell) for cell in row.split(",")] for row in rows])
        np.testing.assert_array_equal(parsed[:, 0], curves.xs)
        column_of = {name: idx for idx, name in enumerate(header.split(","))}
        for (phase, i, a), ys in curves.series.items():
            np.testing.assert_array_equal(parsed[:, column_of[f"{phase}_{i}_{a}"]], ys)


class TestRenderSvg:
    def _render(self, **overrides):
        defaults = dict(
            title="shifted & steered",
            thresholds_before={0: (1.0,), 1: (2.5,)},
            thresholds_after={0: (1.7,), 1: (1.7,)},
            annotations=("KL 0.0304", "dEO 0.0918 -> 0.0"),
        )
        defaults.update(overrides)
        return render_svg(build_curves(BEFORE, AFTER, n_points=32), **defaults)

    def test_parses_as_xml_with_all_polylines(self):
        root = ET.fromstring(self._render())
        assert root.tag.endswith("svg")
        ns = "{http://www.w3.org/2000/svg}"
        polylines = root.findall(f".//{ns}polyline")
        assert len(polylines) == 8
        for poly in polylines:
            assert len(poly.attrib["points"].split()) == 32

    def test_threshold_rules_are_dashed_and_labeled(self):
        doc = self._render()
        assert doc.count('stroke-dasharray="4,3"') == 4
        root = ET.fromstring(doc)
        ns = "{http://www.w3.org/2000/svg}"
        texts = [el.text for el in root.findall(f".//{ns}text")]
        assert texts.count("0") >= 2 and texts.count("1") >= 2

    def test_out_of_range_thresholds_skipped(self):
        doc = self._render(
            thresholds_before={0: (float("inf"), 1e9)}, thresholds_after={}
        )
        assert doc.count("stroke-dasharray") == 0

    def test_title_and_annotations_escaped(self):
        doc = self._render(annotations=("a < b & c",))
        assert "shifted &amp; steered" in doc
        assert "a &lt; b &amp; c" in doc
        ET.fromstring(doc)

    def test_legend_names_every_cell(self):
        root = ET.fromstring(self._render())
        ns = "{http://www.w3.org/2000/svg}"
        texts = [el.text or "" for el in root.findall(f".//{ns}text")]
        for i, a in KEYS:
            assert f"class {i}, group {a}" in texts
