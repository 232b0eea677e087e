"""Readers and writers for microdata, baseline, and geometry inputs.

Input formats are delimited UTF-8 text with a mandatory header:

* microdata: ``geoid,status,persons,wgt,repwgt1..repwgtR`` with status O or V;
* baseline:  ``geoid,vacancy_rate,pph`` (an optional ``US`` row carries the
  national baseline);
* geometry:  a GeoJSON FeatureCollection in WGS-84 degrees with a ``GEOID``
  property per feature.

All readers validate eagerly and raise :class:`~svydiff.errors.IngestError`
naming the offending file, row, or feature.
"""

from __future__ import annotations

import json
import re
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Union

import numpy as np
import pandas as pd

from .errors import IngestError

GEOID_PATTERN = re.compile(r"[0-9]{5}")
NATIONAL_GEOID = "US"

_MICRO_FIXED = ("geoid", "status", "persons", "wgt")
_BASELINE_COLUMNS = ("geoid", "vacancy_rate", "pph")


class Occupancy(Enum):
    OCCUPIED = "O"
    VACANT = "V"


@dataclass(frozen=True)
class UnitRecord:
    """One housing unit: area code, occupancy, size, and its weight columns."""

    geoid: str
    status: Occupancy
    persons: int
    weight: float
    rep_weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not GEOID_PATTERN.fullmatch(self.geoid):
            raise ValueError(f"geoid {self.geoid!r} is not a 5-digit code")
        if self.persons < 0:
            raise ValueError("persons must be >= 0")
        if self.status is Occupancy.VACANT and self.persons != 0:
            raise ValueError("vacant unit must have persons = 0")
        if self.status is Occupancy.OCCUPIED and self.persons < 1:
            raise ValueError("occupied unit must have persons >= 1")
        if not self.weight > 0:
            raise ValueError("full-sample weight must be > 0")
        if len(self.rep_weights) < 1:
            raise ValueError("at least one replicate weight is required")


@dataclass(frozen=True)
class BaselineRecord:
    """Fixed comparison values for one area (or the national ``US`` row)."""

    geoid: str
    base_vacancy_rate: float
    base_pph: float

    def __post_init__(self) -> None:
        if self.geoid != NATIONAL_GEOID and not GEOID_PATTERN.fullmatch(self.geoid):
            raise ValueError(f"geoid {self.geoid!r} is not a 5-digit code or 'US'")
        if not 0.0 <= self.base_vacancy_rate <= 1.0:
            raise ValueError("vacancy_rate must lie in [0, 1]")
        if not self.base_pph > 0:
            raise ValueError("pph must be > 0")


# polygons -> rings -> (lon, lat) vertices
Rings = tuple[tuple[tuple[tuple[float, float], ...], ...], ...]


@dataclass(frozen=True)
class AreaGeometry:
    """Boundary of one area in longitude/latitude degrees."""

    geoid: str
    name: str
    rings: Rings

    def __post_init__(self) -> None:
        if not self.rings or any(not poly for poly in self.rings):
            raise ValueError("geometry must contain at least one ring")
        for poly in self.rings:
            for ring in poly:
                for lon, lat in ring:
                    if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
                        raise ValueError(f"coordinate ({lon}, {lat}) outside WGS-84 range")

    def bbox(self) -> tuple[float, float, float, float]:
        """(lon_min, lat_min, lon_max, lat_max) over all rings."""
        lons = [pt[0] for poly in self.rings for ring in poly for pt in ring]
        lats = [pt[1] for poly in self.rings for ring in poly for pt in ring]
        return min(lons), min(lats), max(lons), max(lats)


class MicrodataTable(Sequence):
    """Validated microdata held column-wise.

    Behaves as a sequence of :class:`UnitRecord` for record-at-a-time use;
    estimation operates directly on the column arrays, which is what makes
    national-scale files tractable.
    """

    __slots__ = ("geoid", "vacant", "persons", "weight", "rep_weights")

    def __init__(self, geoid, vacant, persons, weight, rep_weights):
        self.geoid = np.asarray(geoid, dtype=object)
        self.vacant = np.asarray(vacant, dtype=bool)
        self.persons = np.asarray(persons, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.rep_weights = np.asarray(rep_weights, dtype=np.float64)
        n = len(self.geoid)
        if self.rep_weights.ndim != 2 or self.rep_weights.shape[0] != n:
            raise ValueError("rep_weights must be an (n_records, R) matrix")
        if not all(len(a) == n for a in (self.vacant, self.persons, self.weight)):
            raise ValueError("column lengths disagree")
        if self.rep_weights.shape[1] < 1:
            raise ValueError("replicate count must be >= 1")

    @property
    def rep_count(self) -> int:
        return self.rep_weights.shape[1]

    @classmethod
    def from_records(cls, records: Iterable[UnitRecord]) -> "MicrodataTable":
        records = list(records)
        if records:
            r0 = len(records[0].rep_weights)
            for i, rec in enumerate(records):
                if len(rec.rep_weights) != r0:
                    raise ValueError(f"record {i} has {len(rec.rep_weights)} replicate weights, expected {r0}")
            reps = np.array([rec.rep_weights for rec in records], dtype=np.float64)
        else:
            reps = np.empty((0, 1), dtype=np.float64)
        return cls(
            geoid=[rec.geoid for rec in records],
            vacant=[rec.status is Occupancy.VACANT for rec in records],
            persons=[rec.persons for rec in records],
            weight=[rec.weight for rec in records],
            rep_weights=reps,
        )

    def __len__(self) -> int:
        return len(self.geoid)

    def __getitem__(self, index):
        if isinstance(index, (slice, list, np.ndarray)):
            return MicrodataTable(
                self.geoid[index],
                self.vacant[index],
                self.persons[index],
                self.weight[index],
                self.rep_weights[index],
            )
        status = Occupancy.VACANT if self.vacant[index] else Occupancy.OCCUPIED
        return UnitRecord(
            geoid=str(self.geoid[index]),
            status=status,
            persons=int(self.persons[index]),
            weight=float(self.weight[index]),
            rep_weights=tuple(float(v) for v in self.rep_weights[index]),
        )


RecordsLike = Union[MicrodataTable, Iterable[UnitRecord]]


def as_table(records: RecordsLike) -> MicrodataTable:
    if isinstance(records, MicrodataTable):
        return records
    return MicrodataTable.from_records(records)


def _row_err(path: Path, row: int, message: str) -> IngestError:
    # data rows are 1-based; line numbers count the header
    return IngestError(f"{path}: row {row} (line {row + 1}): {message}")


def _microdata_header(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if not first.strip():
        raise IngestError(f"{path}: empty file, expected a header line")
    columns = [c.strip() for c in first.rstrip("\n\r").split(",")]
    if tuple(columns[:4]) != _MICRO_FIXED:
        raise IngestError(f"{path}: header must start with {','.join(_MICRO_FIXED)}, got {','.join(columns[:4])}")
    rep_cols = columns[4:]
    if not rep_cols:
        raise IngestError(f"{path}: header declares no repwgt columns")
    for i, name in enumerate(rep_cols, start=1):
        if name != f"repwgt{i}":
            raise IngestError(f"{path}: replicate column {4 + i} must be named repwgt{i}, got {name!r}")
    return columns


def _diagnose_cells(path: Path, columns: list[str]) -> None:
    """Slow pass after a failed typed read: locate the first malformed cell."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    numeric = [c for c in columns if c not in ("geoid", "status")]
    for col in numeric:
        values = frame[col].to_numpy()
        parsed = pd.to_numeric(frame[col], errors="coerce").to_numpy()
        bad = np.flatnonzero(np.isnan(parsed) | (values == ""))
        if bad.size:
            row = int(bad[0]) + 1
            raise _row_err(path, row, f"column {col}: cannot parse {values[bad[0]]!r} as a number")
    persons = pd.to_numeric(frame["persons"], errors="coerce").to_numpy()
    frac = np.flatnonzero(persons != np.floor(persons))
    if frac.size:
        row = int(frac[0]) + 1
        raise _row_err(path, row, f"persons must be an integer, got {frame['persons'].iloc[frac[0]]!r}")


def read_microdata(path) -> MicrodataTable:
    """Read and validate a microdata file; record order is preserved."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    columns = _microdata_header(path)
    rep_count = len(columns) - 4
    dtypes: dict[str, object] = {"geoid": str, "status": str}
    dtypes.update({c: np.float64 for c in columns if c not in ("geoid", "status")})
    try:
        frame = pd.read_csv(path, dtype=dtypes, float_precision="round_trip")
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        if match:
            line = int(match.group(1))
            raise _row_err(path, line - 1, "wrong number of fields (extra columns)") from exc
        raise IngestError(f"{path}: {exc}") from exc
    except ValueError as exc:
        _diagnose_cells(path, columns)
        raise IngestError(f"{path}: {exc}") from exc
    if list(frame.columns) != columns:
        raise IngestError(f"{path}: parsed columns disagree with header")

    numeric = frame[[c for c in columns if c not in ("geoid", "status")]].to_numpy()
    nan_rows, nan_cols = np.nonzero(np.isnan(numeric))
    if nan_rows.size:
        row = int(nan_rows[0]) + 1
        col = columns[2:][int(nan_cols[0])]
        if col.startswith("repwgt"):
            present = rep_count - int(frame.iloc[nan_rows[0], 4:].isna().sum())
            raise _row_err(path, row, f"expected {rep_count} replicate weights, found {present}")
        raise _row_err(path, row, f"missing value in column {col}")

    geoid = frame["geoid"].to_numpy(dtype=object)
    ok = frame["geoid"].str.fullmatch(GEOID_PATTERN).fillna(False).to_numpy(dtype=bool)
    bad = np.flatnonzero(~ok)
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, f"geoid {geoid[bad[0]]!r} is not a 5-digit code")

    status = frame["status"].to_numpy(dtype=object)
    bad = np.flatnonzero(~np.isin(status, ("O", "V")))
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, f"status must be O or V, got {status[bad[0]]!r}")
    vacant = status == "V"

    persons_f = frame["persons"].to_numpy(dtype=np.float64)
    bad = np.flatnonzero((persons_f != np.floor(persons_f)) | (persons_f < 0))
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, f"persons must be a non-negative integer, got {persons_f[bad[0]]!r}")
    persons = persons_f.astype(np.int64)

    bad = np.flatnonzero(vacant & (persons != 0))
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, "vacant unit has persons != 0")
    bad = np.flatnonzero(~vacant & (persons < 1))
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, "occupied unit has persons = 0")

    weight = frame["wgt"].to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~(weight > 0))
    if bad.size:
        raise _row_err(path, int(bad[0]) + 1, f"wgt must be > 0, got {weight[bad[0]]!r}")

    reps = frame[[f"repwgt{i}" for i in range(1, rep_count + 1)]].to_numpy(dtype=np.float64)
    if len(frame) == 0:
        reps = np.empty((0, rep_count), dtype=np.float64)
    return MicrodataTable(geoid, vacant, persons, weight, reps)


def write_microdata(records: RecordsLike, path) -> None:
    """Write records in the microdata file format, losslessly for round-trips."""
    table = as_table(records)
    path = Path(path)
    rep_count = table.rep_count
    header = list(_MICRO_FIXED) + [f"repwgt{i}" for i in range(1, rep_count + 1)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(table)):
            status = "V" if table.vacant[i] else "O"
            cells = [
                str(table.geoid[i]),
                status,
                str(int(table.persons[i])),
                repr(float(table.weight[i])),
            ]
            cells.extend(repr(float(v)) for v in table.rep_weights[i])
            fh.write(",".join(cells) + "\n")


def read_baseline(path) -> dict[str, BaselineRecord]:
    """Read the baseline file into a mapping keyed by geoid (plus optional ``US``)."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    try:
        frame = pd.read_csv(path, dtype={"geoid": str}, float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise IngestError(f"{path}: empty file, expected a header line") from exc
    if tuple(frame.columns) != _BASELINE_COLUMNS:
        raise IngestError(f"{path}: header must be {','.join(_BASELINE_COLUMNS)}, got {','.join(frame.columns)}")
    out: dict[str, BaselineRecord] = {}
    for i, row in enumerate(frame.itertuples(index=False), start=1):
        geoid = str(row.geoid)
        if geoid in out:
            raise _row_err(path, i, f"duplicate geoid {geoid}")
        try:
            record = BaselineRecord(geoid, float(row.vacancy_rate), float(row.pph))
        except (TypeError, ValueError) as exc:
            raise _row_err(path, i, str(exc)) from exc
        out[geoid] = record
    return out


def _as_rings(geom_type: str, coords) -> Rings:
    def ring(points) -> tuple[tuple[float, float], ...]:
        return tuple((float(pt[0]), float(pt[1])) for pt in points)

    if geom_type == "Polygon":
        polys = [coords]
    elif geom_type == "MultiPolygon":
        polys = list(coords)
    else:
        raise ValueError(f"unsupported geometry type {geom_type!r}")
    return tuple(tuple(ring(r) for r in poly) for poly in polys)


def read_geometry(path) -> list[AreaGeometry]:
    """Read a GeoJSON FeatureCollection of Polygon/MultiPolygon features."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise IngestError(f"{path}: expected a GeoJSON FeatureCollection")
    out: list[AreaGeometry] = []
    for idx, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        geoid = props.get("GEOID")
        if geoid is None:
            raise IngestError(f"{path}: feature {idx}: missing GEOID property")
        geoid = str(geoid)
        geometry = feature.get("geometry") or {}
        try:
            rings = _as_rings(geometry.get("type", "<none>"), geometry.get("coordinates", []))
            name = str(props.get("NAME") or props.get("name") or geoid)
            out.append(AreaGeometry(geoid=geoid, name=name, rings=rings))
        except (TypeError, ValueError, IndexError) as exc:
            raise IngestError(f"{path}: feature {idx} (GEOID {geoid}): {exc}") from exc
    return out
