"""Hue classification, the saturation ladder, and fill-color rules.

Difference estimates are coded by hue (four classes split by sign and a
per-variable magnitude break) and statistical certainty by saturation: the
stronger the significance level, the more saturated the fill.  Areas that are
not significant are left unshaded, and areas with no test at all get a
distinct neutral fill, in every mode.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from enum import Enum

from ..estimation import Variable
from ..inference import SigClass
from .projection import AlbersParams


class HueClass(Enum):
    LARGE_POSITIVE = "LargePositive"  # blue
    SMALL_POSITIVE = "SmallPositive"  # green
    SMALL_NEGATIVE = "SmallNegative"  # orange
    LARGE_NEGATIVE = "LargeNegative"  # red


HUE_DEGREES = {
    HueClass.LARGE_POSITIVE: 220.0,
    HueClass.SMALL_POSITIVE: 130.0,
    HueClass.SMALL_NEGATIVE: 30.0,
    HueClass.LARGE_NEGATIVE: 0.0,
}

POSITIVE_HUES = (HueClass.LARGE_POSITIVE, HueClass.SMALL_POSITIVE)
NEGATIVE_HUES = (HueClass.SMALL_NEGATIVE, HueClass.LARGE_NEGATIVE)


class MapMode(Enum):
    DIFFERENCE = "difference"
    PVALUE = "pvalue"
    COMBINED = "combined"


def classify_hue(difference: float, magnitude_break: float) -> HueClass:
    """Four-way hue class by sign and magnitude.

    Ties at the break go to the Large class; a difference of exactly zero is
    SmallPositive by convention.
    """
    if not magnitude_break > 0:
        raise ValueError("magnitude_break must be > 0")
    if difference >= magnitude_break:
        return HueClass.LARGE_POSITIVE
    if difference >= 0.0:
        return HueClass.SMALL_POSITIVE
    if difference > -magnitude_break:
        return HueClass.SMALL_NEGATIVE
    return HueClass.LARGE_NEGATIVE


def hsl_hex(hue_degrees: float, saturation: float, lightness: float = 0.5) -> str:
    """HSL to lowercase #rrggbb."""
    r, g, b = colorsys.hls_to_rgb((hue_degrees % 360.0) / 360.0, lightness, saturation)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


DEFAULT_LADDER = {
    SigClass.AT_1PCT: 1.0,
    SigClass.AT_5PCT: 0.65,
    SigClass.AT_10PCT: 0.35,
    SigClass.NOT_SIGNIFICANT: 0.0,
}

DEFAULT_BREAKS = {Variable.VACANCY: 0.02, Variable.PPH: 0.10}

SHADED_CLASSES = (SigClass.AT_1PCT, SigClass.AT_5PCT, SigClass.AT_10PCT)


@dataclass(frozen=True)
class BBox:
    """Longitude/latitude bounding box used as a region filter."""

    lon_min: float
    lat_min: float
    lon_max: float
    lat_max: float

    def __post_init__(self) -> None:
        if self.lon_min > self.lon_max or self.lat_min > self.lat_max:
            raise ValueError("bounding box has min > max")

    def intersects(self, other: tuple[float, float, float, float]) -> bool:
        lon_min, lat_min, lon_max, lat_max = other
        return not (
            lon_max < self.lon_min
            or lon_min > self.lon_max
            or lat_max < self.lat_min
            or lat_min > self.lat_max
        )


@dataclass(frozen=True)
class MapSpec:
    """Everything a render needs besides the data itself."""

    mode: MapMode = MapMode.COMBINED
    magnitude_break: dict[Variable, float] = field(default_factory=lambda: dict(DEFAULT_BREAKS))
    saturation_ladder: dict[SigClass, float] = field(default_factory=lambda: dict(DEFAULT_LADDER))
    region_filter: BBox | tuple[str, ...] | None = None
    projection: AlbersParams | None = None  # None = CONUS default
    canvas: tuple[int, int] = (960, 640)
    no_test_fill: str = "#cccccc"
    not_significant_fill: str = "#ffffff"

    def __post_init__(self) -> None:
        for var, brk in self.magnitude_break.items():
            if not brk > 0:
                raise ValueError(f"magnitude break for {var.value} must be > 0")
        ladder = self.saturation_ladder
        for cls in (SigClass.AT_1PCT, SigClass.AT_5PCT, SigClass.AT_10PCT, SigClass.NOT_SIGNIFICANT):
            if cls not in ladder:
                raise ValueError(f"saturation ladder missing {cls.value}")
        if ladder[SigClass.NOT_SIGNIFICANT] != 0.0:
            raise ValueError("NotSignificant must map to saturation 0")
        steps = [ladder[c] for c in SHADED_CLASSES] + [0.0]
        if any(a <= b for a, b in zip(steps, steps[1:])):
            raise ValueError("saturation ladder must be strictly decreasing from At1Pct to NotSignificant")
        if self.canvas[0] < 100 or self.canvas[1] < 100:
            raise ValueError("canvas too small")


def fill_color(
    spec: MapSpec,
    hue_class: HueClass | None,
    sig_class: SigClass,
    difference_sign: int,
) -> str:
    """Fill for one area under the spec's render mode.

    Difference mode ignores significance (full-saturation hues); PValue mode
    keeps only the sign of the difference (blue up, red down); Combined mode
    uses the four hues with the significance saturation ladder.  NoTest areas
    always get the neutral no-test fill, and insignificant areas are unshaded
    outside Difference mode.
    """
    if sig_class is SigClass.NO_TEST:
        return spec.no_test_fill
    if spec.mode is MapMode.DIFFERENCE:
        if hue_class is None:
            return spec.no_test_fill
        return hsl_hex(HUE_DEGREES[hue_class], 1.0)
    if sig_class is SigClass.NOT_SIGNIFICANT:
        return spec.not_significant_fill
    saturation = spec.saturation_ladder[sig_class]
    if spec.mode is MapMode.PVALUE:
        hue = HUE_DEGREES[HueClass.LARGE_POSITIVE] if difference_sign >= 0 else HUE_DEGREES[HueClass.LARGE_NEGATIVE]
        return hsl_hex(hue, saturation)
    if hue_class is None:
        return spec.no_test_fill
    return hsl_hex(HUE_DEGREES[hue_class], saturation)
