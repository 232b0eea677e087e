"""One-sided p-values, significance classes, and global-null diagnostics.

The one-sided p-value of an area difference d with standard error se is
Phi(d / se): the probability, under a zero-true-difference null, that chance
produces a value at or below the observed difference.  Two-sided significance
at the conventional 1%/5%/10% levels is read off the same p by folding the
tails.  The global null ("every difference is chance") is probed three ways:
tabulating p-values against their expected uniform shares, QQ plots against
the uniform distribution, and a normal-approximation sign test of the share
of areas significant at 10% or less.

Bin edges are half-open and closed on the extreme tails ([0, 0.005) and
[0.995, 1]) so the seven ranges partition [0, 1]; the significance classes
are defined from the same edges, which makes the class counts exactly the
tail-pair sums of the tabulation for every input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import pandas as pd

from ._fmt import fmt_repr
from .errors import IngestError, MismatchError
from .estimation import (
    AreaEstimate,
    Variable,
    flag_degenerate,
    national_estimate,
)
from .ingest import BaselineRecord, RecordsLike

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    Accurate to well under 1e-10 absolute on [-8, 8] and symmetric to
    within one ulp: Phi(-x) = 1 - Phi(x).
    """
    return 0.5 * math.erfc(-x / _SQRT2)


class SigClass(Enum):
    AT_1PCT = "At1Pct"
    AT_5PCT = "At5Pct"
    AT_10PCT = "At10Pct"
    NOT_SIGNIFICANT = "NotSignificant"
    NO_TEST = "NoTest"


# (label, lower edge, upper edge, expected percent under the global null);
# intervals are [lo, hi) except the top bin, which includes 1.
PVALUE_BINS: tuple[tuple[str, float, float, float], ...] = (
    ("0.995+", 0.995, 1.0, 0.5),
    ("0.975-0.995", 0.975, 0.995, 2.0),
    ("0.95-0.975", 0.95, 0.975, 2.5),
    ("other", 0.05, 0.95, 90.0),
    ("0.025-0.05", 0.025, 0.05, 2.5),
    ("0.005-0.025", 0.005, 0.025, 2.0),
    ("<0.005", 0.0, 0.005, 0.5),
)

EXPECTED_PERCENTS: tuple[float, ...] = tuple(b[3] for b in PVALUE_BINS)


def bin_index(p: float) -> int:
    """Index into PVALUE_BINS of the unique bin containing p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p-value {p} outside [0, 1]")
    for i, (_, lo, hi, _) in enumerate(PVALUE_BINS):
        if lo <= p < hi or (hi == 1.0 and p == 1.0):
            return i
    raise AssertionError("bins do not cover [0, 1]")


def two_sided_class(p: float) -> SigClass:
    """Minimum conventional two-sided level at which p is significant.

    Folds both tails: 2*min(p, 1-p) against 1%/5%/10%, with boundaries
    resolved by the same half-open edges as the tabulation bins so that
    class counts and tail-pair sums always agree.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p-value {p} outside [0, 1]")
    if p < 0.005 or p >= 0.995:
        return SigClass.AT_1PCT
    if p < 0.025 or p >= 0.975:
        return SigClass.AT_5PCT
    if p < 0.05 or p >= 0.95:
        return SigClass.AT_10PCT
    return SigClass.NOT_SIGNIFICANT


def one_sided_p(difference: float, se: float | None) -> float | None:
    """Phi(difference / se); None when se is undefined or not positive."""
    if se is None or not se > 0:
        return None
    return std_normal_cdf(difference / se)


@dataclass(frozen=True)
class DifferenceResult:
    """Survey-minus-baseline difference with its uncertainty for one area."""

    geoid: str
    variable: Variable
    survey_estimate: float | None
    base_value: float
    difference: float | None
    se: float | None
    z_score: float | None
    p_one_sided: float | None
    sig_class: SigClass

    def __post_init__(self) -> None:
        if self.survey_estimate is None:
            if self.difference is not None:
                raise ValueError("difference must be undefined when the estimate is")
        elif self.difference != self.survey_estimate - self.base_value:
            raise ValueError("difference must equal survey_estimate - base_value exactly")
        if (self.p_one_sided is None) != (self.sig_class is SigClass.NO_TEST):
            raise ValueError("sig_class is NoTest exactly when p is undefined")
        if self.p_one_sided is not None and not 0.0 <= self.p_one_sided <= 1.0:
            raise ValueError("p must lie in [0, 1]")


def compare(estimate: AreaEstimate, base: BaselineRecord) -> DifferenceResult:
    """Difference result for one area estimate against its baseline row."""
    base_value = base.base_vacancy_rate if estimate.variable is Variable.VACANCY else base.base_pph
    survey = estimate.estimate
    difference = None if survey is None else survey - base_value
    if flag_degenerate(estimate) or difference is None:
        return DifferenceResult(
            geoid=estimate.geoid,
            variable=estimate.variable,
            survey_estimate=survey,
            base_value=base_value,
            difference=difference,
            se=estimate.se,
            z_score=None,
            p_one_sided=None,
            sig_class=SigClass.NO_TEST,
        )
    se = estimate.se
    z = difference / se
    p = std_normal_cdf(z)
    return DifferenceResult(
        geoid=estimate.geoid,
        variable=estimate.variable,
        survey_estimate=survey,
        base_value=base_value,
        difference=difference,
        se=se,
        z_score=z,
        p_one_sided=p,
        sig_class=two_sided_class(p),
    )


def compare_all(
    estimates: Iterable[AreaEstimate],
    baseline: Mapping[str, BaselineRecord],
) -> list[DifferenceResult]:
    """Compare every area estimate; a missing baseline row is an error."""
    out = []
    for est in estimates:
        if est.geoid not in baseline:
            raise MismatchError(f"no baseline row for surveyed geoid {est.geoid}")
        out.append(compare(est, baseline[est.geoid]))
    return out


@dataclass(frozen=True)
class BinCount:
    label: str
    lo: float
    hi: float
    count: int
    percent: float
    expected_percent: float


@dataclass(frozen=True)
class PValueTabulation:
    """Counts of p-values in the seven canonical ranges, top tail first."""

    bins: tuple[BinCount, ...]
    n: int

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(b.count for b in self.bins)


def _extract_pvalues(results: Iterable) -> list[float]:
    ps = []
    for item in results:
        if isinstance(item, DifferenceResult):
            if item.sig_class is SigClass.NO_TEST:
                continue
            ps.append(item.p_one_sided)
        elif item is not None:
            ps.append(float(item))
    return ps


def tabulate_pvalues(results: Iterable) -> PValueTabulation:
    """Tabulate p-values (from DifferenceResults or raw floats) into the bins.

    NoTest results carry no p-value and are excluded from n.
    """
    ps = _extract_pvalues(results)
    counts = [0] * len(PVALUE_BINS)
    for p in ps:
        counts[bin_index(p)] += 1
    n = len(ps)
    bins = tuple(
        BinCount(
            label=label,
            lo=lo,
            hi=hi,
            count=count,
            percent=(100.0 * count / n) if n else 0.0,
            expected_percent=expected,
        )
        for (label, lo, hi, expected), count in zip(PVALUE_BINS, counts)
    )
    return PValueTabulation(bins=bins, n=n)


def tabulation_from_counts(counts: Sequence[int]) -> PValueTabulation:
    """Build a tabulation from seven pre-tallied counts (top tail first)."""
    if len(counts) != len(PVALUE_BINS):
        raise ValueError(f"expected {len(PVALUE_BINS)} counts")
    n = int(sum(counts))
    bins = tuple(
        BinCount(label, lo, hi, int(c), (100.0 * c / n) if n else 0.0, expected)
        for (label, lo, hi, expected), c in zip(PVALUE_BINS, counts)
    )
    return PValueTabulation(bins=bins, n=n)


def significance_table(tab: PValueTabulation) -> dict[SigClass, int]:
    """Two-sided class counts as tail-pair sums of the tabulation bins."""
    c = tab.counts
    return {
        SigClass.AT_1PCT: c[6] + c[0],
        SigClass.AT_5PCT: c[5] + c[1],
        SigClass.AT_10PCT: c[4] + c[2],
        SigClass.NOT_SIGNIFICANT: c[3],
    }


@dataclass(frozen=True)
class SignTestResult:
    """Normal-approximation sign test of the share significant at <= 10%."""

    k: int
    n: int
    p0: float
    z: float


def sign_test(k: int, n: int, p0: float = 0.10) -> SignTestResult:
    """z = (k - n*p0) / sqrt(n*p0*(1-p0)), no continuity correction.

    The caller interprets z one-sided: large positive z means more areas are
    significant than the global null would produce.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k > n or k < 0:
        raise ValueError(f"k must lie in 0..{n}, got {k}")
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must lie strictly between 0 and 1")
    z = (k - n * p0) / math.sqrt(n * p0 * (1.0 - p0))
    return SignTestResult(k=k, n=n, p0=p0, z=z)


def count_significant(results: Iterable[DifferenceResult]) -> tuple[int, int]:
    """(k, n): areas significant at 10% or less, and areas tested at all."""
    k = n = 0
    for r in results:
        if r.sig_class is SigClass.NO_TEST:
            continue
        n += 1
        if r.sig_class is not SigClass.NOT_SIGNIFICANT:
            k += 1
    return k, n


def qq_series(pvalues: Iterable[float]) -> list[tuple[float, float]]:
    """(expected, observed) pairs: sorted p-values at plotting positions i/(n+1)."""
    observed = sorted(float(p) for p in pvalues)
    for p in observed:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    n = len(observed)
    return [((i + 1) / (n + 1), obs) for i, obs in enumerate(observed)]


@dataclass(frozen=True)
class NationalTestResult:
    """Pooled national difference with its two-sided t-test."""

    variable: Variable
    estimate: float
    se: float
    base_value: float
    difference: float
    t: float
    p_two_sided: float
    n_units: int
    weight_sum: float


def national_test(
    records: RecordsLike,
    base: BaselineRecord,
    variable: Variable,
    *,
    factor: float | None = None,
) -> NationalTestResult:
    """Two-sided test of the pooled national difference against the baseline.

    The baseline is complete-count data treated as a constant, so the t
    statistic is simply difference / se(survey).
    """
    est = national_estimate(records, variable, factor=factor)
    if est.estimate is None or flag_degenerate(est):
        raise ValueError(f"national {variable.value} estimate is degenerate; cannot test")
    base_value = base.base_vacancy_rate if variable is Variable.VACANCY else base.base_pph
    difference = est.estimate - base_value
    t = difference / est.se
    p2 = 2.0 * (1.0 - std_normal_cdf(abs(t)))
    return NationalTestResult(
        variable=variable,
        estimate=est.estimate,
        se=est.se,
        base_value=base_value,
        difference=difference,
        t=t,
        p_two_sided=p2,
        n_units=est.n_units,
        weight_sum=est.weight_sum,
    )


RESULTS_COLUMNS = ("geoid", "variable", "estimate", "base", "diff", "se", "z", "p_one_sided", "sig_class")


def write_results(results: Iterable[DifferenceResult], path) -> None:
    """Delimited per-area export, ordered by (variable, geoid), full precision."""
    rows = sorted(results, key=lambda r: (r.variable.value, r.geoid))
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RESULTS_COLUMNS) + "\n")
        for r in rows:
            cells = (
                r.geoid,
                r.variable.value,
                fmt_repr(r.survey_estimate),
                fmt_repr(r.base_value),
                fmt_repr(r.difference),
                fmt_repr(r.se),
                fmt_repr(r.z_score),
                fmt_repr(r.p_one_sided),
                r.sig_class.value,
            )
            fh.write(",".join(cells) + "\n")


def read_results(path) -> list[DifferenceResult]:
    """Read a results file back into DifferenceResults."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    frame = pd.read_csv(path, dtype={"geoid": str, "variable": str, "sig_class": str}, float_precision="round_trip")
    if tuple(frame.columns) != RESULTS_COLUMNS:
        raise IngestError(f"{path}: header must be {','.join(RESULTS_COLUMNS)}")
    variables = {v.value: v for v in Variable}
    classes = {c.value: c for c in SigClass}

    def opt(value) -> float | None:
        return None if pd.isna(value) else float(value)

    out = []
    for i, row in enumerate(frame.itertuples(index=False), start=1):
        try:
            out.append(
                DifferenceResult(
                    geoid=str(row.geoid),
                    variable=variables[row.variable],
                    survey_estimate=opt(row.estimate),
                    base_value=float(row.base),
                    difference=opt(row.diff),
                    se=opt(row.se),
                    z_score=opt(row.z),
                    p_one_sided=opt(row.p_one_sided),
                    sig_class=classes[row.sig_class],
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise IngestError(f"{path}: row {i} (line {i + 1}): {exc}") from exc
    return out
