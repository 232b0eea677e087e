"""Weighted point estimates and successive-difference-replication standard errors.

Both survey variables are ratio estimators computed from the same microdata:

* vacancy rate: sum of weights over vacant units / sum of weights over all units;
* persons per household (PPH): weighted mean of persons over occupied units.

Each estimate is recomputed once per replicate weight column, and the standard
error follows the replication form  se = sqrt(factor * sum_r (theta_r - theta_0)^2)
with factor defaulting to 4/R, the production choice for 80-replicate designs.
Areas whose se is exactly zero or undefined are flagged degenerate: no test can
be attached to them downstream, though they are still mapped.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._fmt import fmt_repr
from .ingest import NATIONAL_GEOID, MicrodataTable, RecordsLike, as_table


class Variable(Enum):
    VACANCY = "vacancy"
    PPH = "pph"


@dataclass(frozen=True)
class AreaEstimate:
    """Point estimate for one area and one variable, with its replication detail.

    ``estimate`` and ``se`` are None when undefined (empty estimation universe,
    or a replicate column with zero weight sum).  ``replicate_estimates`` keeps
    NaN for undefined replicates so diagnostics can still inspect the rest.
    """

    geoid: str
    variable: Variable
    estimate: float | None
    replicate_estimates: tuple[float, ...]
    se: float | None
    n_units: int
    weight_sum: float


def flag_degenerate(area_estimate: AreaEstimate) -> bool:
    """True when no sampling-based test can be formed for this area."""
    return area_estimate.se is None or area_estimate.se == 0.0


def _none_if_nan(value: float) -> float | None:
    return None if math.isnan(value) else float(value)


def _aggregate(keys, table: MicrodataTable, variable: Variable, factor: float | None):
    """Grouped full-sample and replicate ratio estimates, ordered by key.

    Returns (keys, estimate, replicate matrix, se, n_units, weight_sum) as
    arrays over the distinct keys; undefined values are NaN.
    """
    n = len(table)
    rep_count = table.rep_count
    keys = np.asarray(keys, dtype=object)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    if n:
        starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
    else:
        starts = np.array([], dtype=np.intp)
    unique_keys = sorted_keys[starts]

    if variable is Variable.VACANCY:
        universe = np.ones(n, dtype=np.float64)
        y = table.vacant.astype(np.float64)
    else:
        universe = (~table.vacant).astype(np.float64)
        y = table.persons.astype(np.float64)
    universe = universe[order]
    y = y[order] * universe
    w = table.weight[order]
    reps = table.rep_weights[order]

    def grouped(values):
        return np.add.reduceat(values, starts, axis=0)

    if n == 0:
        shape = (0, rep_count)
        return unique_keys, np.array([]), np.empty(shape), np.array([]), np.array([], dtype=np.int64), np.array([])

    num_full = grouped(w * y)
    den_full = grouped(w * universe)
    rep_num = grouped(reps * y[:, None])
    rep_den = grouped(reps * universe[:, None])

    with np.errstate(divide="ignore", invalid="ignore"):
        estimate = np.where(den_full == 0.0, np.nan, num_full / den_full)
        rep_est = np.where(rep_den == 0.0, np.nan, rep_num / rep_den)

    deviations = rep_est - estimate[:, None]
    sumsq = np.sum(deviations * deviations, axis=1)
    # integer-first arithmetic keeps the default factor exact for R | 4*ssq
    variance = (4.0 * sumsq) / rep_count if factor is None else factor * sumsq
    se = np.sqrt(variance)

    n_units = grouped(universe).astype(np.int64)
    return unique_keys, estimate, rep_est, se, n_units, den_full


def _build(geoid, variable, estimate, rep_row, se, n_units, weight_sum) -> AreaEstimate:
    return AreaEstimate(
        geoid=str(geoid),
        variable=variable,
        estimate=_none_if_nan(estimate),
        replicate_estimates=tuple(float(v) for v in rep_row),
        se=_none_if_nan(se),
        n_units=int(n_units),
        weight_sum=float(weight_sum),
    )


def estimate_all(
    records: RecordsLike,
    variable: Variable,
    *,
    factor: float | None = None,
    jobs: int = 1,
) -> list[AreaEstimate]:
    """One AreaEstimate per distinct geoid, ordered by geoid.

    Areas are independent, so ``jobs`` splits them across worker threads;
    the merged output is identical for any jobs value.
    """
    table = as_table(records)
    if jobs <= 1 or len(table) == 0:
        parts = [_aggregate(table.geoid, table, variable, factor)]
    else:
        order = np.argsort(table.geoid, kind="stable")
        sorted_table = table[order]
        keys = sorted_table.geoid
        starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        n_areas = len(starts)
        bounds = np.linspace(0, n_areas, min(jobs, n_areas) + 1).astype(int)
        row_bounds = list(starts[bounds[:-1]]) + [len(table)]
        chunks = [sorted_table[int(a):int(b)] for a, b in zip(row_bounds[:-1], row_bounds[1:])]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda t: _aggregate(t.geoid, t, variable, factor), chunks))
    out: list[AreaEstimate] = []
    for keys, est, rep, se, n_units, wsum in parts:
        for i in range(len(keys)):
            out.append(_build(keys[i], variable, est[i], rep[i], se[i], n_units[i], wsum[i]))
    return out


def estimate_area(records: RecordsLike, variable: Variable, *, factor: float | None = None) -> AreaEstimate:
    """Estimate for a single area; all records must share one geoid."""
    table = as_table(records)
    if len(table) == 0:
        raise ValueError("no records given")
    distinct = set(table.geoid)
    if len(distinct) > 1:
        raise ValueError(f"records span {len(distinct)} geoids; expected one")
    return estimate_all(table, variable, factor=factor)[0]


def national_estimate(records: RecordsLike, variable: Variable, *, factor: float | None = None) -> AreaEstimate:
    """Estimate over all records pooled, reported under the sentinel geoid ``US``."""
    table = as_table(records)
    if len(table) == 0:
        raise ValueError("no records given")
    keys = np.full(len(table), NATIONAL_GEOID, dtype=object)
    parts = _aggregate(keys, table, variable, factor)
    keys_u, est, rep, se, n_units, wsum = parts
    return _build(keys_u[0], variable, est[0], rep[0], se[0], n_units[0], wsum[0])


def _select_weights(table: MicrodataTable, weight_index: int | None) -> np.ndarray:
    if weight_index is None:
        return table.weight
    if not 1 <= weight_index <= table.rep_count:
        raise ValueError(f"weight_index must be in 1..{table.rep_count}, got {weight_index}")
    return table.rep_weights[:, weight_index - 1]


def weighted_vacancy_rate(records: RecordsLike, weight_index: int | None = None) -> float | None:
    """Weighted share of vacant units among all units.

    ``weight_index`` selects the full-sample weight (None) or replicate column
    r in 1..R.  A zero weight sum yields None rather than an error so that the
    absence of data stays distinguishable from a true zero rate.
    """
    table = as_table(records)
    if len(table) == 0:
        raise ValueError("no records given")
    w = _select_weights(table, weight_index)
    den = float(np.sum(w))
    if den == 0.0:
        return None
    return float(np.sum(w * table.vacant) / den)


def weighted_pph(records: RecordsLike, weight_index: int | None = None) -> float | None:
    """Weighted mean persons per occupied unit; None when no occupied units."""
    table = as_table(records)
    if len(table) == 0:
        raise ValueError("no records given")
    occupied = ~table.vacant
    if not occupied.any():
        return None
    w = _select_weights(table, weight_index)[occupied]
    den = float(np.sum(w))
    if den == 0.0:
        return None
    return float(np.sum(w * table.persons[occupied]) / den)


def sdr_standard_error(
    full_estimate: float,
    replicate_estimates: Sequence[float | None],
    factor: float | None = None,
) -> float | None:
    """Replication standard error sqrt(factor * sum (theta_r - theta_0)^2).

    factor defaults to 4/R.  Any undefined replicate (None or NaN) makes the
    result undefined.
    """
    reps = list(replicate_estimates)
    if len(reps) < 1:
        raise ValueError("at least one replicate estimate is required")
    if factor is not None and not factor > 0:
        raise ValueError("factor must be > 0")
    if any(v is None or math.isnan(v) for v in reps):
        return None
    arr = np.asarray(reps, dtype=np.float64)
    deviations = arr - float(full_estimate)
    sumsq = float(np.sum(deviations * deviations))
    variance = (4.0 * sumsq) / len(reps) if factor is None else factor * sumsq
    return math.sqrt(variance)


ESTIMATES_COLUMNS = ("geoid", "variable", "estimate", "se", "n_units", "weight_sum", "degenerate")


def write_estimates(estimates: Iterable[AreaEstimate], path) -> None:
    """Delimited export, one row per (geoid, variable), full float precision."""
    rows = sorted(estimates, key=lambda e: (e.variable.value, e.geoid))
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(ESTIMATES_COLUMNS) + "\n")
        for est in rows:
            cells = (
                est.geoid,
                est.variable.value,
                fmt_repr(est.estimate),
                fmt_repr(est.se),
                str(est.n_units),
                fmt_repr(est.weight_sum),
                "true" if flag_degenerate(est) else "false",
            )
            fh.write(",".join(cells) + "\n")
