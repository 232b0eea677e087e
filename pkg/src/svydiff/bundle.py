"""Single-file JSON bundle consumed by the static web viewer.

The bundle embeds everything interactivity needs: per-area values with
preformatted display strings (so tooltips match the results file exactly),
QQ series and tabulations, default map styling, and the GeoJSON geometry.
Serialization is canonical (sorted keys, fixed separators) so re-running an
unchanged pipeline reproduces identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

from ._fmt import fmt_sig
from .errors import MismatchError
from .estimation import Variable
from .inference import (
    DifferenceResult,
    SigClass,
    count_significant,
    qq_series,
    sign_test,
    significance_table,
    tabulate_pvalues,
)
from .ingest import AreaGeometry
from .viz import CONUS, MapSpec, SHADED_CLASSES

BUNDLE_SCHEMA = "svydiff-bundle/1"


def _value_payload(result: DifferenceResult | None) -> dict:
    if result is None:
        return {
            "estimate": None,
            "base": None,
            "diff": None,
            "se": None,
            "z": None,
            "p": None,
            "sig": SigClass.NO_TEST.value,
            "display": {"estimate": "", "base": "", "diff": "", "se": "", "p": ""},
        }
    return {
        "estimate": result.survey_estimate,
        "base": result.base_value,
        "diff": result.difference,
        "se": result.se,
        "z": result.z_score,
        "p": result.p_one_sided,
        "sig": result.sig_class.value,
        "display": {
            "estimate": fmt_sig(result.survey_estimate),
            "base": fmt_sig(result.base_value),
            "diff": fmt_sig(result.difference),
            "se": fmt_sig(result.se),
            "p": fmt_sig(result.p_one_sided),
        },
    }


def build_bundle(
    geometries: Iterable[AreaGeometry],
    results_by_variable: Mapping[Variable, list[DifferenceResult]],
    spec: MapSpec,
    *,
    max_missing: float = 0.25,
) -> dict:
    """Assemble the viewer bundle.

    Geometry features with no result row in any variable are kept with a
    NoTest payload, but if their share exceeds ``max_missing`` the input
    pairing is considered wrong and an error is raised.
    """
    geometries = sorted(geometries, key=lambda g: g.geoid)
    if not geometries:
        raise MismatchError("no geometry features to bundle")
    lookup: dict[str, dict[Variable, DifferenceResult]] = {}
    for variable, results in results_by_variable.items():
        for r in results:
            lookup.setdefault(r.geoid, {})[variable] = r

    missing = [g.geoid for g in geometries if g.geoid not in lookup]
    share = len(missing) / len(geometries)
    if share > max_missing:
        raise MismatchError(
            f"{len(missing)} of {len(geometries)} geometry features "
            f"({share:.0%}) have no results (limit {max_missing:.0%}); first missing: {missing[0]}"
        )

    variables = sorted(results_by_variable, key=lambda v: v.value)
    areas = []
    for geom in geometries:
        per_var = lookup.get(geom.geoid, {})
        areas.append(
            {
                "geoid": geom.geoid,
                "name": geom.name,
                "values": {v.value: _value_payload(per_var.get(v)) for v in variables},
            }
        )

    params = spec.projection or CONUS
    diagnostics = {}
    for variable in variables:
        results = results_by_variable[variable]
        tab = tabulate_pvalues(results)
        sig = significance_table(tab)
        k, n = count_significant(results)
        diagnostics[variable.value] = {
            "tabulation": {
                "n": tab.n,
                "bins": [
                    {
                        "label": b.label,
                        "lo": b.lo,
                        "hi": b.hi,
                        "count": b.count,
                        "percent": b.percent,
                        "expected_percent": b.expected_percent,
                    }
                    for b in tab.bins
                ],
            },
            "significance": {cls.value: sig[cls] for cls in sig},
            "sign_test": (
                {"k": k, "n": n, "p0": 0.10, "z": sign_test(k, n).z} if n >= 1 else None
            ),
            "qq": [[e, o] for e, o in qq_series([r.p_one_sided for r in results if r.p_one_sided is not None])],
        }

    geometry_doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"GEOID": g.geoid, "NAME": g.name},
                "geometry": _rings_geojson(g),
            }
            for g in geometries
        ],
    }

    return {
        "schema": BUNDLE_SCHEMA,
        "variables": [v.value for v in variables],
        "map_defaults": {
            "mode": spec.mode.value,
            "magnitude_break": {v.value: spec.magnitude_break[v] for v in spec.magnitude_break},
            "saturation_ladder": {cls.value: spec.saturation_ladder[cls] for cls in SHADED_CLASSES}
            | {SigClass.NOT_SIGNIFICANT.value: 0.0},
            "projection": {"lat1": params.lat1, "lat2": params.lat2, "lon0": params.lon0, "lat0": params.lat0},
            "no_test_fill": spec.no_test_fill,
            "not_significant_fill": spec.not_significant_fill,
        },
        "diagnostics": diagnostics,
        "areas": areas,
        "geometry": geometry_doc,
    }


def _rings_geojson(geom: AreaGeometry) -> dict:
    polys = [[[list(pt) for pt in ring] for ring in poly] for poly in geom.rings]
    if len(polys) == 1:
        return {"type": "Polygon", "coordinates": polys[0]}
    return {"type": "MultiPolygon", "coordinates": polys}


def write_bundle(bundle: dict, path) -> None:
    data = json.dumps(bundle, sort_keys=True, separators=(",", ":"), allow_nan=False)
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)
        fh.write("\n")
