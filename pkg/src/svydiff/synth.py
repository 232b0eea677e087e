"""Synthetic microdata with known ground truth for desk-scale verification.

Each synthetic area draws units independently: a unit is vacant with the
area's true vacancy probability, and occupied units have 1 + Poisson(pph - 1)
persons, so the expected persons-per-household equals the configured truth.
Baselines equal the per-area truth, except for a planted fraction of areas
whose baseline is shifted by the effect size, giving them a known nonzero
true difference (signs alternate across the altered areas).

Replicate weights use a random-sign scheme: in replicate r every unit's
weight is independently multiplied by 1.5 or 0.5 (factor 1 + delta*s with
delta = 1/2 and s a fair sign).  Each replicate difference is then a sum of
small perturbations over all units, and E[(theta_r - theta_0)^2] =
delta^2 * sum(z_i^2) for the linearized estimator, which makes the
replication variance with the default 4/R factor an unbiased estimator of
the sampling variance.  A one-group-per-replicate scheme was tried first:
calibrating it to the 4/R factor forces delta = sqrt(R-1)/2, a weight tilt
so large that the ratio estimators leave the linear regime and the variance
comes out low.  The half-weight scheme keeps every perturbation small.

Geometry is a grid of uniform square cells; each grid row forms one
synthetic state (geoid = row+1 as state FIPS, column+1 as county FIPS), so
state filters select horizontal bands.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from .errors import SynthError
from .ingest import NATIONAL_GEOID

PerArea = Union[float, Sequence[float]]


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one generated dataset; the seed fully determines the output."""

    n_areas: int = 100
    units_per_area: int | tuple[int, int] = (100, 200)
    true_vacancy: PerArea = 0.2
    true_pph: PerArea = 2.5
    altered_fraction: float = 0.0
    effect_vacancy: float = 0.05
    effect_pph: float = 0.25
    replicate_count: int = 80
    seed: int = 0


@dataclass(frozen=True)
class SynthPaths:
    microdata: Path
    baseline: Path
    geometry: Path
    truth: Path


#: weight perturbation that calibrates the 4/R replication variance factor
REPLICATE_DELTA = 0.5


def _expand(value: PerArea, n: int, label: str) -> np.ndarray:
    if np.isscalar(value):
        out = np.full(n, float(value))
    else:
        out = np.asarray(value, dtype=np.float64)
        if out.shape != (n,):
            raise SynthError(f"{label} must be scalar or length n_areas ({n}), got shape {out.shape}")
    return out


def _grid_layout(n_areas: int) -> tuple[int, int, float]:
    cols = int(math.ceil(math.sqrt(n_areas)))
    rows = int(math.ceil(n_areas / cols))
    # keep the whole grid inside a plausible CONUS-like window
    cell = min(50.0 / cols, 25.0 / rows)
    return cols, rows, cell


def _geoids(n_areas: int) -> list[str]:
    cols, rows, _ = _grid_layout(n_areas)
    if rows > 99 or cols > 999:
        raise SynthError(f"n_areas {n_areas} exceeds the synthetic geoid space")
    return [f"{1 + i // cols:02d}{1 + i % cols:03d}" for i in range(n_areas)]


def _validate(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    if config.n_areas < 1:
        raise SynthError("n_areas must be >= 1")
    if config.replicate_count < 1:
        raise SynthError("replicate_count must be >= 1")
    if not 0.0 <= config.altered_fraction <= 1.0:
        raise SynthError("altered_fraction must lie in [0, 1]")
    units = config.units_per_area
    if isinstance(units, tuple):
        lo, hi = units
        if lo < 1 or hi < lo:
            raise SynthError(f"units_per_area range {units} is infeasible")
    elif units < 1:
        raise SynthError("units_per_area must be >= 1")
    vacancy = _expand(config.true_vacancy, config.n_areas, "true_vacancy")
    pph = _expand(config.true_pph, config.n_areas, "true_pph")
    if ((vacancy < 0) | (vacancy > 1)).any():
        raise SynthError("true_vacancy values must lie in [0, 1]")
    if (pph < 1).any():
        raise SynthError("true_pph values must be >= 1 (occupied units have at least one person)")
    return vacancy, pph


def generate(config: SynthConfig, out_dir) -> SynthPaths:
    """Write microdata, baseline, geometry, and the truth manifest.

    Identical configs (including seed) produce byte-identical files.
    """
    vacancy, pph = _validate(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = config.n_areas
    rep_count = config.replicate_count
    rng = np.random.default_rng(config.seed)
    geoids = _geoids(n)

    n_altered = int(round(config.altered_fraction * n))
    altered = np.sort(rng.permutation(n)[:n_altered])
    sign = np.zeros(n)
    sign[altered] = [1.0 if i % 2 == 0 else -1.0 for i in range(n_altered)]

    base_vacancy = vacancy - sign * config.effect_vacancy
    base_pph = pph - sign * config.effect_pph
    if ((base_vacancy < 0) | (base_vacancy > 1)).any():
        raise SynthError("effect_vacancy pushes a baseline vacancy rate outside [0, 1]")
    if (base_pph <= 0).any():
        raise SynthError("effect_pph pushes a baseline pph to or below zero")

    if isinstance(config.units_per_area, tuple):
        lo, hi = config.units_per_area
        units = rng.integers(lo, hi + 1, size=n)
    else:
        units = np.full(n, int(config.units_per_area), dtype=np.int64)

    geoid_col = []
    vacant_parts = []
    persons_parts = []
    weight_parts = []
    rep_parts = []
    occupied_counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        m = int(units[i])
        vacant = rng.random(m) < vacancy[i]
        persons = np.where(vacant, 0, 1 + rng.poisson(max(pph[i] - 1.0, 0.0), size=m))
        # two-decimal weights keep every replicate weight exact in <= 4 decimals,
        # which roughly halves the microdata file size at national scale
        weight = np.round(rng.uniform(0.5, 1.5, size=m), 2)
        signs = rng.integers(0, 2, size=(m, rep_count)) * 2 - 1
        reps = np.round(weight[:, None] * (1.0 + REPLICATE_DELTA * signs), 6)
        geoid_col.extend([geoids[i]] * m)
        vacant_parts.append(vacant)
        persons_parts.append(persons)
        weight_parts.append(weight)
        rep_parts.append(reps)
        occupied_counts[i] = int(m - vacant.sum())

    vacant_all = np.concatenate(vacant_parts)
    persons_all = np.concatenate(persons_parts)
    weight_all = np.concatenate(weight_parts)
    reps_all = np.vstack(rep_parts)

    micro = pd.DataFrame({"geoid": geoid_col, "status": np.where(vacant_all, "V", "O"), "persons": persons_all, "wgt": weight_all})
    for r in range(rep_count):
        micro[f"repwgt{r + 1}"] = reps_all[:, r]
    microdata_path = out_dir / "microdata.csv"
    micro.to_csv(microdata_path, index=False, lineterminator="\n")

    total_units = int(units.sum())
    total_occupied = int(occupied_counts.sum())
    national_vacancy = float(np.sum(units * base_vacancy) / total_units)
    national_pph = float(np.sum(occupied_counts * base_pph) / total_occupied) if total_occupied else 1.0
    baseline = pd.DataFrame(
        {
            "geoid": geoids + [NATIONAL_GEOID],
            "vacancy_rate": np.append(np.round(base_vacancy, 6), round(national_vacancy, 6)),
            "pph": np.append(np.round(base_pph, 6), round(national_pph, 6)),
        }
    )
    baseline_path = out_dir / "baseline.csv"
    baseline.to_csv(baseline_path, index=False, lineterminator="\n")

    geometry_path = out_dir / "areas.geojson"
    _write_geometry(geoids, geometry_path)

    truth = pd.DataFrame(
        {
            "geoid": geoids,
            "true_vacancy_diff": np.round(sign * config.effect_vacancy, 6),
            "true_pph_diff": np.round(sign * config.effect_pph, 6),
        }
    )
    truth_path = out_dir / "truth.csv"
    truth.to_csv(truth_path, index=False, lineterminator="\n")

    return SynthPaths(microdata_path, baseline_path, geometry_path, truth_path)


def _write_geometry(geoids: list[str], path: Path) -> None:
    n = len(geoids)
    cols, _, cell = _grid_layout(n)
    lon0, lat0 = -120.0, 25.0
    features = []
    for i, geoid in enumerate(geoids):
        col = i % cols
        row = i // cols
        x0 = round(lon0 + col * cell, 6)
        x1 = round(lon0 + (col + 1) * cell, 6)
        y0 = round(lat0 + row * cell, 6)
        y1 = round(lat0 + (row + 1) * cell, 6)
        features.append(
            {
                "type": "Feature",
                "properties": {"GEOID": geoid, "NAME": f"Area {geoid}"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
                },
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def read_truth(path) -> dict[str, tuple[float, float]]:
    """Truth manifest as geoid -> (true vacancy diff, true pph diff)."""
    frame = pd.read_csv(path, dtype={"geoid": str})
    return {
        str(row.geoid): (float(row.true_vacancy_diff), float(row.true_pph_diff))
        for row in frame.itertuples(index=False)
    }
