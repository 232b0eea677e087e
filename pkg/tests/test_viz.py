import colorsys
import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svydiff.errors import RenderError
from svydiff.estimation import Variable
from svydiff.inference import DifferenceResult, SigClass, std_normal_cdf, two_sided_class
from svydiff.ingest import AreaGeometry
from svydiff.viz import (
    ALASKA,
    CONUS,
    AlbersParams,
    BBox,
    HueClass,
    MapMode,
    MapSpec,
    classify_hue,
    fill_color,
    hsl_hex,
    project_albers,
    render_map,
    render_qq,
)
from svydiff.inference import qq_series


def test_classify_hue_examples():
    assert classify_hue(0.05, 0.02) is HueClass.LARGE_POSITIVE
    assert classify_hue(-0.01, 0.02) is HueClass.SMALL_NEGATIVE
    assert classify_hue(-0.02, 0.02) is HueClass.LARGE_NEGATIVE
    assert classify_hue(0.02, 0.02) is HueClass.LARGE_POSITIVE
    assert classify_hue(0.0, 0.02) is HueClass.SMALL_POSITIVE
    assert classify_hue(0.011, 0.02) is HueClass.SMALL_POSITIVE
    with pytest.raises(ValueError):
        classify_hue(0.1, 0.0)


def test_fill_color_combined_rules():
    spec = MapSpec(mode=MapMode.COMBINED)
    assert fill_color(spec, HueClass.LARGE_NEGATIVE, SigClass.AT_1PCT, -1) == "#ff0000"
    assert fill_color(spec, HueClass.LARGE_POSITIVE, SigClass.NOT_SIGNIFICANT, 1) == "#ffffff"
    assert fill_color(spec, HueClass.SMALL_NEGATIVE, SigClass.NO_TEST, -1) == spec.no_test_fill
    at5 = fill_color(spec, HueClass.LARGE_POSITIVE, SigClass.AT_5PCT, 1)
    assert at5 == hsl_hex(220.0, 0.65)


def test_fill_color_difference_mode_ignores_significance():
    spec = MapSpec(mode=MapMode.DIFFERENCE)
    green = hsl_hex(130.0, 1.0)
    assert fill_color(spec, HueClass.SMALL_POSITIVE, SigClass.NOT_SIGNIFICANT, 1) == green
    assert fill_color(spec, HueClass.SMALL_POSITIVE, SigClass.AT_1PCT, 1) == green
    assert fill_color(spec, None, SigClass.NO_TEST, 0) == spec.no_test_fill


def test_fill_color_pvalue_mode_uses_sign_only():
    spec = MapSpec(mode=MapMode.PVALUE)
    blue = hsl_hex(220.0, 1.0)
    red = hsl_hex(0.0, 0.65)
    assert fill_color(spec, HueClass.SMALL_POSITIVE, SigClass.AT_1PCT, 1) == blue
    assert fill_color(spec, HueClass.LARGE_NEGATIVE, SigClass.AT_5PCT, -1) == red
    assert fill_color(spec, HueClass.SMALL_NEGATIVE, SigClass.NOT_SIGNIFICANT, -1) == "#ffffff"


def test_ladder_validation():
    with pytest.raises(ValueError):
        MapSpec(saturation_ladder={SigClass.AT_1PCT: 0.5, SigClass.AT_5PCT: 0.65,
                                   SigClass.AT_10PCT: 0.35, SigClass.NOT_SIGNIFICANT: 0.0})
    with pytest.raises(ValueError):
        MapSpec(saturation_ladder={SigClass.AT_1PCT: 1.0, SigClass.AT_5PCT: 0.65,
                                   SigClass.AT_10PCT: 0.35, SigClass.NOT_SIGNIFICANT: 0.1})
    with pytest.raises(ValueError):
        MapSpec(magnitude_break={Variable.VACANCY: 0.0, Variable.PPH: 0.1})


def hue_family(color):
    r, g, b = (int(color[i : i + 2], 16) / 255 for i in (1, 3, 5))
    h, _, s = colorsys.rgb_to_hls(r, g, b)
    return h * 360.0, s


@settings(max_examples=80, deadline=None)
@given(
    st.floats(-1, 1, allow_nan=False),
    st.sampled_from([SigClass.AT_1PCT, SigClass.AT_5PCT, SigClass.AT_10PCT]),
    st.sampled_from([MapMode.COMBINED, MapMode.PVALUE, MapMode.DIFFERENCE]),
)
def test_hue_sign_coherence(diff, sig, mode):
    spec = MapSpec(mode=mode)
    hue_class = classify_hue(diff, 0.02)
    color = fill_color(spec, hue_class, sig, 1 if diff >= 0 else -1)
    hue, saturation = hue_family(color)
    assert saturation > 0
    if diff >= 0:
        assert 100.0 <= hue <= 250.0  # green/blue side
    else:
        assert hue <= 60.0 or hue >= 350.0  # orange/red side


def test_projection_reference_point_is_origin():
    x, y = project_albers(CONUS.lon0, CONUS.lat0, CONUS)
    assert abs(x) < 1e-15 and abs(y) < 1e-15


def test_projection_longitude_symmetry():
    x1, y1 = project_albers(-96.0 - 10.0, 40.0, CONUS)
    x2, y2 = project_albers(-96.0 + 10.0, 40.0, CONUS)
    assert x1 == pytest.approx(-x2, rel=1e-12)
    assert y1 == pytest.approx(y2, rel=1e-12)


def test_projection_rejects_poles_and_equal_parallels():
    with pytest.raises(ValueError):
        project_albers(-96.0, 90.0, CONUS)
    with pytest.raises(ValueError):
        project_albers(-96.0, -91.0, CONUS)
    with pytest.raises(ValueError):
        AlbersParams(lat1=40.0, lat2=40.0)


def albers_oracle(lon, lat, params):
    """Textbook spherical Albers evaluation, written independently with numpy."""
    lam, phi = np.radians([lon, lat])
    lam0, phi0, phi1, phi2 = np.radians([params.lon0, params.lat0, params.lat1, params.lat2])
    n = (np.sin(phi1) + np.sin(phi2)) / 2.0
    big_c = np.cos(phi1) ** 2 + 2.0 * n * np.sin(phi1)
    rho = np.sqrt(big_c - 2.0 * n * np.sin(phi)) / n
    rho0 = np.sqrt(big_c - 2.0 * n * np.sin(phi0)) / n
    theta = n * (lam - lam0)
    return float(rho * np.sin(theta)), float(rho0 - rho * np.cos(theta))


@pytest.mark.parametrize(
    "lon, lat, params",
    [
        (-75.0, 35.0, CONUS),
        (-120.3, 47.7, CONUS),
        (-89.9, 29.9, CONUS),
        (-149.9, 61.2, ALASKA),
        (-151.0, 63.1, ALASKA),
    ],
)
def test_projection_matches_independent_oracle(lon, lat, params):
    mine = project_albers(lon, lat, params)
    ref = albers_oracle(lon, lat, params)
    assert mine[0] == pytest.approx(ref[0], abs=1e-9)
    assert mine[1] == pytest.approx(ref[1], abs=1e-9)


def test_projection_equal_area_jacobian():
    # the areal scale factor of an equal-area projection of the unit sphere
    # is cos(lat): check with central finite differences
    lon, lat = -100.0, 41.0
    h = 1e-5
    dx_dlon = (np.array(project_albers(lon + h, lat)) - np.array(project_albers(lon - h, lat))) / (
        2 * math.radians(h)
    )
    dx_dlat = (np.array(project_albers(lon, lat + h)) - np.array(project_albers(lon, lat - h))) / (
        2 * math.radians(h)
    )
    jac = abs(dx_dlon[0] * dx_dlat[1] - dx_dlon[1] * dx_dlat[0])
    assert jac == pytest.approx(math.cos(math.radians(lat)), rel=1e-5)


def grid_geometries(geoids, lon0=-100.0, lat0=40.0, side=1.0, cols=3):
    geoms = []
    for i, geoid in enumerate(geoids):
        x0 = lon0 + (i % cols) * side
        y0 = lat0 + (i // cols) * side
        ring = ((x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side), (x0, y0))
        geoms.append(AreaGeometry(geoid, f"Area {geoid}", ((ring,),)))
    return geoms


def result_for(geoid, diff, se, variable=Variable.VACANCY, base=0.2):
    survey = base + diff
    diff = survey - base  # keep the exact survey - base identity under float rounding
    if se is None or se == 0.0:
        return DifferenceResult(geoid, variable, survey, base, diff, se, None, None, SigClass.NO_TEST)
    z = diff / se
    p = std_normal_cdf(z)
    return DifferenceResult(geoid, variable, survey, base, diff, se, z, p, two_sided_class(p))


GEOIDS = ["56001", "56003", "56005", "56007", "56009", "56011", "56013", "56015", "56017"]


def mixed_results():
    diffs = [0.03, -0.01, 0.001, -0.04, 0.015, -0.002, 0.05, -0.03, 0.0]
    ses = [0.002, 0.05, 0.01, 0.015, 0.009, 0.05, None, 0.5, 0.01]
    return [result_for(g, d, s) for g, d, s in zip(GEOIDS, diffs, ses)]


def path_fills(svg):
    return dict(re.findall(r'<path id="area-(\d{5})" fill="([^"]+)"', svg))


def test_render_map_deterministic_and_ordered():
    geoms = grid_geometries(GEOIDS)
    results = mixed_results()
    spec = MapSpec()
    a = render_map(geoms, results, spec)
    b = render_map(list(reversed(geoms)), list(reversed(results)), spec)
    assert a == b
    order = re.findall(r'<path id="area-(\d{5})"', a)
    assert order == sorted(order)


def test_render_map_all_not_significant_unshaded():
    geoms = grid_geometries(GEOIDS)
    results = [result_for(g, 0.001 * (1 if i % 2 else -1), 0.05) for i, g in enumerate(GEOIDS)]
    spec = MapSpec(mode=MapMode.COMBINED)
    fills = path_fills(render_map(geoms, results, spec))
    assert set(fills.values()) == {spec.not_significant_fill}


def test_render_map_unshaded_invariant_combined_and_pvalue():
    geoms = grid_geometries(GEOIDS)
    results = mixed_results()
    for mode in (MapMode.COMBINED, MapMode.PVALUE):
        spec = MapSpec(mode=mode)
        fills = path_fills(render_map(geoms, results, spec))
        for r in results:
            if r.sig_class is SigClass.NOT_SIGNIFICANT:
                assert fills[r.geoid] == spec.not_significant_fill
            if r.sig_class is SigClass.NO_TEST:
                assert fills[r.geoid] == spec.no_test_fill


def test_render_map_missing_result_gets_no_test_fill():
    geoms = grid_geometries(["56001", "56003"], cols=2)
    results = [result_for("56001", 0.03, 0.002)]
    spec = MapSpec()
    fills = path_fills(render_map(geoms, results, spec))
    assert fills["56003"] == spec.no_test_fill


def test_render_map_region_filter_changes_membership_not_fills():
    geoms = grid_geometries(GEOIDS) + grid_geometries(["08001"], lon0=-90.0)
    results = mixed_results() + [result_for("08001", 0.04, 0.003)]
    full = path_fills(render_map(geoms, results, MapSpec()))
    state = path_fills(render_map(geoms, results, MapSpec(region_filter=("56",))))
    assert set(state) == set(GEOIDS)
    for geoid, fill in state.items():
        assert full[geoid] == fill
    box = path_fills(render_map(geoms, results, MapSpec(region_filter=BBox(-101.0, 39.0, -98.5, 41.5))))
    assert set(box) <= set(full)
    for geoid, fill in box.items():
        assert full[geoid] == fill


def test_render_map_empty_filter_is_error():
    geoms = grid_geometries(GEOIDS)
    with pytest.raises(RenderError, match="region filter"):
        render_map(geoms, mixed_results(), MapSpec(region_filter=("08",)))


def test_render_map_duplicate_and_mixed_variable_errors():
    geoms = grid_geometries(["56001"], cols=1)
    r = result_for("56001", 0.03, 0.01)
    with pytest.raises(RenderError, match="duplicate"):
        render_map(geoms, [r, r], MapSpec())
    r2 = result_for("56003", 0.03, 0.01, variable=Variable.PPH)
    with pytest.raises(RenderError, match="variable"):
        render_map(geoms, [r, r2], MapSpec())


def test_render_map_coordinates_have_three_decimals():
    svg = render_map(grid_geometries(GEOIDS), mixed_results(), MapSpec())
    for d in re.findall(r' d="([^"]+)"', svg):
        for num in re.findall(r"-?\d+\.\d+", d):
            assert len(num.split(".")[1]) == 3
        assert "-0.000" not in d


def swatch_saturations(svg, ident):
    sats = []
    for cls in ("at1pct", "at5pct", "at10pct"):
        match = re.search(rf'<rect id="swatch-{ident}-{cls}"[^>]*fill="(#[0-9a-f]{{6}})"', svg)
        assert match, f"missing swatch {ident}/{cls}"
        sats.append(hue_family(match.group(1))[1])
    return sats


def test_legend_saturation_strictly_decreasing():
    svg = render_map(grid_geometries(GEOIDS), mixed_results(), MapSpec(mode=MapMode.COMBINED))
    for ident in ("largepositive", "smallpositive", "smallnegative", "largenegative"):
        sats = swatch_saturations(svg, ident)
        assert sats[0] > sats[1] > sats[2] > 0.0
    svg_p = render_map(grid_geometries(GEOIDS), mixed_results(), MapSpec(mode=MapMode.PVALUE))
    for ident in ("positive", "negative"):
        sats = swatch_saturations(svg_p, ident)
        assert sats[0] > sats[1] > sats[2] > 0.0


def test_legend_fits_inside_canvas():
    for mode in (MapMode.COMBINED, MapMode.PVALUE, MapMode.DIFFERENCE):
        spec = MapSpec(mode=mode)
        svg = render_map(grid_geometries(GEOIDS), mixed_results(), spec)
        legend = svg[svg.index('<g id="legend"'):]
        bottoms = [float(y) + 12 for y in re.findall(r'<rect[^>]* y="([-\d.]+)"', legend)]
        assert bottoms and max(bottoms) <= spec.canvas[1]


def test_render_map_metadata_comment():
    spec = MapSpec(mode=MapMode.PVALUE, region_filter=("56",))
    svg = render_map(grid_geometries(GEOIDS), mixed_results(), spec, config_note="jobs=2")
    head = svg.splitlines()[2]
    for fragment in ("mode=pvalue", "variable=vacancy", "filter=state:56", "geometry_sha256=", "config=jobs=2"):
        assert fragment in head


def test_render_qq_deterministic_and_marks_on_line():
    series = qq_series([0.5])
    svg = render_qq(series)
    assert svg == render_qq(series)
    # the single marker sits on the reference line's midpoint
    ref = re.search(r'id="reference-line"[^>]*? d="M([-\d.]+) ([-\d.]+)L([-\d.]+) ([-\d.]+)"', svg)
    x0, y0, x1, y1 = (float(v) for v in ref.groups())
    marks = re.search(r'id="observations"[^>]*? d="M([-\d.]+) ([-\d.]+)L', svg)
    mx = float(marks.group(1)) + 2.5
    my = float(marks.group(2))
    assert mx == pytest.approx((x0 + x1) / 2, abs=0.01)
    assert my == pytest.approx((y0 + y1) / 2, abs=0.01)


def test_render_qq_shifted_series_sits_below_line():
    # observed systematically below expected: markers render below the
    # identity line, which in SVG coordinates means larger y
    ps = [0.5 * (i + 1) / 101 for i in range(100)]
    svg = render_qq(qq_series(ps))
    ref = re.search(r'id="reference-line"[^>]*? d="M([-\d.]+) ([-\d.]+)L([-\d.]+) ([-\d.]+)"', svg)
    x0, y0, x1, y1 = (float(v) for v in ref.groups())
    obs = re.search(r'id="observations"[^>]*? d="([^"]+)"', svg).group(1)
    pts = re.findall(r"M([-\d.]+) ([-\d.]+)L", obs)
    horizontal = pts[0::2]
    for sx, sy in horizontal:
        x = float(sx) + 2.5
        y = float(sy)
        line_y = y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        assert y >= line_y - 1e-6


def test_render_qq_empty_is_error():
    with pytest.raises(RenderError):
        render_qq([])
