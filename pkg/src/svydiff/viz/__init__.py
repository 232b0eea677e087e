"""Choropleth styling, projection, and deterministic SVG rendering."""

from .projection import ALASKA, CONUS, PRESETS, AlbersParams, project_albers
from .render import filter_geometries, render_map, render_qq
from .style import (
    BBox,
    DEFAULT_BREAKS,
    DEFAULT_LADDER,
    HUE_DEGREES,
    HueClass,
    MapMode,
    MapSpec,
    NEGATIVE_HUES,
    POSITIVE_HUES,
    SHADED_CLASSES,
    classify_hue,
    fill_color,
    hsl_hex,
)

__all__ = [
    "ALASKA",
    "CONUS",
    "PRESETS",
    "AlbersParams",
    "BBox",
    "DEFAULT_BREAKS",
    "DEFAULT_LADDER",
    "HUE_DEGREES",
    "HueClass",
    "MapMode",
    "MapSpec",
    "NEGATIVE_HUES",
    "POSITIVE_HUES",
    "SHADED_CLASSES",
    "classify_hue",
    "fill_color",
    "filter_geometries",
    "hsl_hex",
    "project_albers",
    "render_map",
    "render_qq",
]
