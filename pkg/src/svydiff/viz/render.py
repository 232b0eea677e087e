"""Deterministic SVG choropleths and QQ scatters.

Output is plain SVG 1.1 assembled from strings: one path per area ordered by
geoid, a legend group with id-tagged swatches, and a metadata comment that
records the render settings and input digests.  Coordinates are written with
exactly three decimals so identical inputs give byte-identical documents.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence

from ..errors import RenderError
from ..estimation import Variable
from ..inference import DifferenceResult, SigClass
from ..ingest import AreaGeometry
from .projection import CONUS, project_albers
from .style import (
    BBox,
    HUE_DEGREES,
    HueClass,
    MapMode,
    MapSpec,
    SHADED_CLASSES,
    classify_hue,
    fill_color,
    hsl_hex,
)

LEGEND_HEIGHT = 122
MARGIN = 12


def _fmt(value: float) -> str:
    s = f"{value:.3f}"
    return "0.000" if s == "-0.000" else s


def _fmtg(value: float) -> str:
    return f"{value:g}"


def _digest(parts: Iterable[str]) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()[:12]


def _geometry_digest(geoms: Sequence[AreaGeometry]) -> str:
    return _digest(
        f"{g.geoid}|{g.name}|{g.rings!r}" for g in sorted(geoms, key=lambda g: g.geoid)
    )


def _results_digest(results: Sequence[DifferenceResult]) -> str:
    return _digest(
        f"{r.geoid}|{r.variable.value}|{r.difference!r}|{r.se!r}|{r.p_one_sided!r}|{r.sig_class.value}"
        for r in sorted(results, key=lambda r: (r.variable.value, r.geoid))
    )


def _in_region(geom: AreaGeometry, region) -> bool:
    if region is None:
        return True
    if isinstance(region, BBox):
        return region.intersects(geom.bbox())
    return geom.geoid[:2] in region


def filter_geometries(geoms: Iterable[AreaGeometry], region) -> list[AreaGeometry]:
    """Geometries inside the region filter, ordered by geoid."""
    kept = [g for g in sorted(geoms, key=lambda g: g.geoid) if _in_region(g, region)]
    return kept


class _Fit:
    """Affine fit of projected coordinates onto a pixel rectangle, y flipped."""

    def __init__(self, points: list[tuple[float, float]], box: tuple[float, float, float, float]):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        x0, y0, width, height = box
        span_x = max(xs) - min(xs)
        span_y = max(ys) - min(ys)
        self.scale = min(
            width / span_x if span_x > 0 else float("inf"),
            height / span_y if span_y > 0 else float("inf"),
        )
        if self.scale == float("inf"):
            self.scale = 1.0
        self.x_min = min(xs)
        self.y_max = max(ys)
        self.ox = x0 + (width - span_x * self.scale) / 2.0
        self.oy = y0 + (height - span_y * self.scale) / 2.0

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return self.ox + (x - self.x_min) * self.scale, self.oy + (self.y_max - y) * self.scale


def _path_d(projected_polys, fit: _Fit) -> str:
    parts = []
    for poly in projected_polys:
        for ring in poly:
            first = True
            for x, y in ring:
                px, py = fit.apply(x, y)
                parts.append(f"{'M' if first else 'L'}{_fmt(px)} {_fmt(py)}")
                first = False
            parts.append("Z")
    return "".join(parts)


def _swatch(x: float, y: float, fill: str, swatch_id: str) -> str:
    return (
        f'<rect id="{swatch_id}" x="{_fmt(x)}" y="{_fmt(y)}" width="18" height="12" '
        f'fill="{fill}" stroke="#888888" stroke-width="0.5"/>'
    )


def _text(x: float, y: float, content: str, size: int = 11) -> str:
    return f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}">{content}</text>'


def _hue_rows(spec: MapSpec, variable: Variable | None):
    brk = spec.magnitude_break.get(variable, 0.0) if variable is not None else 0.0
    brk_txt = _fmtg(brk) if brk else "break"
    return (
        (HueClass.LARGE_POSITIVE, f"increase &#8805; {brk_txt}"),
        (HueClass.SMALL_POSITIVE, f"increase &lt; {brk_txt}"),
        (HueClass.SMALL_NEGATIVE, f"decrease &lt; {brk_txt}"),
        (HueClass.LARGE_NEGATIVE, f"decrease &#8805; {brk_txt}"),
    )


def _legend(spec: MapSpec, variable: Variable | None, y_top: float) -> list[str]:
    lines = ['<g id="legend" font-family="sans-serif" fill="#222222">']
    x0 = MARGIN + 4
    y = y_top + 14
    var_label = variable.value if variable is not None else "difference"
    lines.append(_text(x0, y, f"{var_label} difference, {spec.mode.value} mode", size=12))
    y += 8
    row_h = 16
    if spec.mode is MapMode.DIFFERENCE:
        for hue, label in _hue_rows(spec, variable):
            fill = hsl_hex(HUE_DEGREES[hue], 1.0)
            lines.append(_swatch(x0, y, fill, f"swatch-{hue.value.lower()}-full"))
            lines.append(_text(x0 + 24, y + 10, label))
            y += row_h
        lines.append(_swatch(x0, y, spec.no_test_fill, "swatch-notest"))
        lines.append(_text(x0 + 24, y + 10, "no test"))
    else:
        level_labels = {SigClass.AT_1PCT: "1%", SigClass.AT_5PCT: "5%", SigClass.AT_10PCT: "10%"}
        col_w = 24
        header_y = y + 10
        for j, cls in enumerate(SHADED_CLASSES):
            lines.append(_text(x0 + j * col_w + 2, header_y, level_labels[cls], size=10))
        y += 14
        if spec.mode is MapMode.PVALUE:
            rows = [(HueClass.LARGE_POSITIVE, "positive", "increase"), (HueClass.LARGE_NEGATIVE, "negative", "decrease")]
        else:
            rows = [(hue, hue.value.lower(), label) for hue, label in _hue_rows(spec, variable)]
        for hue, ident, label in rows:
            for j, cls in enumerate(SHADED_CLASSES):
                fill = hsl_hex(HUE_DEGREES[hue], spec.saturation_ladder[cls])
                lines.append(_swatch(x0 + j * col_w, y, fill, f"swatch-{ident}-{cls.value.lower()}"))
            lines.append(_text(x0 + len(SHADED_CLASSES) * col_w + 6, y + 10, label))
            y += row_h
        lines.append(_swatch(x0, y, spec.not_significant_fill, "swatch-notsignificant"))
        lines.append(_text(x0 + 24, y + 10, "not significant (&gt; 10%)"))
        lines.append(_swatch(x0 + 190, y, spec.no_test_fill, "swatch-notest"))
        lines.append(_text(x0 + 190 + 24, y + 10, "no test"))
    lines.append("</g>")
    return lines


def _area_fill(spec: MapSpec, result: DifferenceResult | None, variable: Variable | None) -> str:
    if result is None or result.sig_class is SigClass.NO_TEST or result.difference is None:
        return fill_color(spec, None, SigClass.NO_TEST, 0)
    brk = spec.magnitude_break[result.variable]
    hue = classify_hue(result.difference, brk)
    sign = 1 if result.difference >= 0 else -1
    return fill_color(spec, hue, result.sig_class, sign)


def render_map(
    geometries: Iterable[AreaGeometry],
    results: Iterable[DifferenceResult],
    spec: MapSpec,
    *,
    config_note: str = "",
) -> str:
    """Render one choropleth; results must all carry the same variable.

    Geometries without a result row render in the no-test fill.  The region
    filter selects membership before projection and never alters fills.
    """
    geoms = list(geometries)
    results = list(results)
    variables = {r.variable for r in results}
    if len(variables) > 1:
        raise RenderError("results mix variables; render one variable per map")
    variable = variables.pop() if variables else None
    by_geoid: dict[str, DifferenceResult] = {}
    for r in results:
        if r.geoid in by_geoid:
            raise RenderError(f"duplicate result row for geoid {r.geoid}")
        by_geoid[r.geoid] = r

    kept = filter_geometries(geoms, spec.region_filter)
    if not kept:
        raise RenderError("no areas remain after the region filter")

    params = spec.projection or CONUS
    projected = []
    all_points: list[tuple[float, float]] = []
    for geom in kept:
        polys = tuple(
            tuple(tuple(project_albers(lon, lat, params) for lon, lat in ring) for ring in poly)
            for poly in geom.rings
        )
        projected.append(polys)
        for poly in polys:
            for ring in poly:
                all_points.extend(ring)

    width, height = spec.canvas
    map_box = (MARGIN, MARGIN, width - 2 * MARGIN, height - LEGEND_HEIGHT - 2 * MARGIN)
    fit = _Fit(all_points, map_box)

    ladder_note = ",".join(
        f"{cls.value}:{_fmtg(spec.saturation_ladder[cls])}" for cls in (*SHADED_CLASSES, SigClass.NOT_SIGNIFICANT)
    )
    if isinstance(spec.region_filter, BBox):
        bb = spec.region_filter
        filter_note = f"bbox:{_fmtg(bb.lon_min)},{_fmtg(bb.lat_min)},{_fmtg(bb.lon_max)},{_fmtg(bb.lat_max)}"
    elif spec.region_filter:
        filter_note = "state:" + "+".join(spec.region_filter)
    else:
        filter_note = "none"
    brk_note = ",".join(f"{v.value}:{_fmtg(b)}" for v, b in sorted(spec.magnitude_break.items(), key=lambda kv: kv[0].value))
    meta = (
        f"mode={spec.mode.value} variable={variable.value if variable else 'none'} "
        f"breaks={brk_note} ladder={ladder_note} "
        f"projection=albers:{_fmtg(params.lat1)},{_fmtg(params.lat2)},{_fmtg(params.lon0)},{_fmtg(params.lat0)} "
        f"filter={filter_note} canvas={width}x{height} "
        f"geometry_sha256={_geometry_digest(kept)} results_sha256={_results_digest(results)}"
    )
    if config_note:
        meta += f" config={config_note}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- {meta} -->",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#fdfdfd"/>',
        '<g id="areas" stroke="#777777" stroke-width="0.5" fill-rule="evenodd">',
    ]
    for geom, polys in zip(kept, projected):
        fill = _area_fill(spec, by_geoid.get(geom.geoid), variable)
        lines.append(f'<path id="area-{geom.geoid}" fill="{fill}" d="{_path_d(polys, fit)}"/>')
    lines.append("</g>")
    lines.extend(_legend(spec, variable, height - LEGEND_HEIGHT))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_qq(
    series: Sequence[tuple[float, float]],
    *,
    title: str = "",
    canvas: tuple[int, int] = (520, 520),
) -> str:
    """QQ scatter of observed p-values against uniform plotting positions.

    The identity reference line is red; observations are black plus signs.
    """
    if not series:
        raise RenderError("empty QQ series")
    width, height = canvas
    pad = 46
    plot_w = width - 2 * pad
    plot_h = height - 2 * pad

    def to_px(ex: float, ob: float) -> tuple[float, float]:
        return pad + ex * plot_w, height - pad - ob * plot_h

    x0, y0 = to_px(0.0, 0.0)
    x1, y1 = to_px(1.0, 1.0)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- qq n={len(series)} -->",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{_fmt(pad)}" y="{_fmt(pad)}" width="{_fmt(plot_w)}" height="{_fmt(plot_h)}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
    ]
    ticks = [0.0, 0.25, 0.5, 0.75, 1.0]
    tick_lines = []
    label_lines = []
    for t in ticks:
        tx, _ = to_px(t, 0.0)
        _, ty = to_px(0.0, t)
        tick_lines.append(f"M{_fmt(tx)} {_fmt(height - pad)}L{_fmt(tx)} {_fmt(height - pad + 5)}")
        tick_lines.append(f"M{_fmt(pad)} {_fmt(ty)}L{_fmt(pad - 5)} {_fmt(ty)}")
        label_lines.append(_text(tx - 8, height - pad + 18, _fmtg(t), size=10))
        label_lines.append(_text(pad - 30, ty + 4, _fmtg(t), size=10))
    lines.append(f'<path stroke="#333333" stroke-width="1" fill="none" d="{"".join(tick_lines)}"/>')
    lines.append('<g id="axis-labels" font-family="sans-serif" fill="#222222">')
    lines.extend(label_lines)
    lines.append(_text(width / 2 - 60, height - 12, "expected p-value (uniform)", size=12))
    lines.append(
        f'<text x="14" y="{_fmt(height / 2 + 50)}" font-size="12" '
        f'transform="rotate(-90 14 {_fmt(height / 2 + 50)})">observed p-value</text>'
    )
    if title:
        lines.append(_text(pad, 24, title, size=13))
    lines.append("</g>")
    lines.append(
        f'<path id="reference-line" stroke="#cc0000" stroke-width="1.5" fill="none" '
        f'd="M{_fmt(x0)} {_fmt(y0)}L{_fmt(x1)} {_fmt(y1)}"/>'
    )
    marks = []
    r = 2.5
    for expected, observed in series:
        px, py = to_px(expected, observed)
        marks.append(f"M{_fmt(px - r)} {_fmt(py)}L{_fmt(px + r)} {_fmt(py)}")
        marks.append(f"M{_fmt(px)} {_fmt(py - r)}L{_fmt(px)} {_fmt(py + r)}")
    lines.append(f'<path id="observations" stroke="#000000" stroke-width="1" fill="none" d="{"".join(marks)}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
