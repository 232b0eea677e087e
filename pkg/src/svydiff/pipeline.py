"""End-to-end runs shared by the CLI subcommands, plus the report writers.

A run reads microdata and baseline, estimates per area and nationally,
derives difference results and the global-null diagnostics per variable, and
exposes writers for both the delimited machine outputs and the aligned
plain-text report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from ._fmt import fmt_sig
from .errors import SvydiffError
from .estimation import AreaEstimate, Variable, estimate_all
from .inference import (
    DifferenceResult,
    NationalTestResult,
    PValueTabulation,
    SigClass,
    SignTestResult,
    compare_all,
    count_significant,
    national_test,
    qq_series,
    sign_test,
    significance_table,
    tabulate_pvalues,
)
from .ingest import NATIONAL_GEOID, read_baseline, read_microdata

log = logging.getLogger("svydiff")

SIG_LEVEL_LABELS = {
    SigClass.AT_1PCT: "1%",
    SigClass.AT_5PCT: "5%",
    SigClass.AT_10PCT: "10%",
    SigClass.NOT_SIGNIFICANT: "not significant",
}


@dataclass
class VariableRun:
    """Everything computed for one variable."""

    variable: Variable
    estimates: list[AreaEstimate]
    results: list[DifferenceResult]
    tabulation: PValueTabulation
    significance: dict[SigClass, int]
    sign: SignTestResult | None
    qq: list[tuple[float, float]]
    national: NationalTestResult | None


def run_estimation(
    microdata_path,
    baseline_path,
    variables: Iterable[Variable],
    *,
    factor: float | None = None,
    jobs: int = 1,
) -> dict[Variable, VariableRun]:
    """Full estimation + inference pass over one microdata/baseline pair."""
    table = read_microdata(microdata_path)
    baseline = read_baseline(baseline_path)
    log.info("read %d unit records (%d replicate weights) from %s", len(table), table.rep_count, microdata_path)
    national_base = baseline.get(NATIONAL_GEOID)
    out: dict[Variable, VariableRun] = {}
    for variable in variables:
        estimates = estimate_all(table, variable, factor=factor, jobs=jobs)
        results = compare_all(estimates, baseline)
        tabulation = tabulate_pvalues(results)
        significance = significance_table(tabulation)
        k, n = count_significant(results)
        sign = sign_test(k, n) if n >= 1 else None
        qq = qq_series([r.p_one_sided for r in results if r.p_one_sided is not None])
        national = None
        if national_base is None:
            log.info("no US baseline row; skipping the national test for %s", variable.value)
        elif len(table) > 0:
            try:
                national = national_test(table, national_base, variable, factor=factor)
            except ValueError as exc:
                raise SvydiffError(f"national test for {variable.value}: {exc}") from exc
        n_notest = sum(1 for r in results if r.sig_class is SigClass.NO_TEST)
        log.info(
            "%s: %d areas (%d with no test), %d significant at 10%% or better",
            variable.value,
            len(results),
            n_notest,
            k,
        )
        out[variable] = VariableRun(
            variable=variable,
            estimates=estimates,
            results=results,
            tabulation=tabulation,
            significance=significance,
            sign=sign,
            qq=qq,
            national=national,
        )
    return out


def write_tabulation_csv(tab: PValueTabulation, path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("range,lo,hi,count,percent,expected_percent\n")
        for b in tab.bins:
            fh.write(f"{b.label},{b.lo:g},{b.hi:g},{b.count},{fmt_sig(b.percent)},{b.expected_percent:g}\n")


def write_significance_csv(significance: Mapping[SigClass, int], n: int, path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("level,count,percent\n")
        for cls in (SigClass.AT_1PCT, SigClass.AT_5PCT, SigClass.AT_10PCT, SigClass.NOT_SIGNIFICANT):
            count = significance[cls]
            pct = 100.0 * count / n if n else 0.0
            fh.write(f"{cls.value},{count},{fmt_sig(pct)}\n")


def write_sign_tests_csv(runs: Mapping[Variable, VariableRun], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("variable,k,n,p0,z\n")
        for variable, run in runs.items():
            if run.sign is None:
                continue
            s = run.sign
            fh.write(f"{variable.value},{s.k},{s.n},{s.p0:g},{fmt_sig(s.z)}\n")


def write_national_csv(runs: Mapping[Variable, VariableRun], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("variable,estimate,se,base,diff,t,p_two_sided,n_units,weight_sum\n")
        for variable, run in runs.items():
            nat = run.national
            if nat is None:
                continue
            fh.write(
                ",".join(
                    (
                        variable.value,
                        fmt_sig(nat.estimate),
                        fmt_sig(nat.se),
                        fmt_sig(nat.base_value),
                        fmt_sig(nat.difference),
                        fmt_sig(nat.t),
                        fmt_sig(nat.p_two_sided),
                        str(nat.n_units),
                        fmt_sig(nat.weight_sum, 10),
                    )
                )
                + "\n"
            )


def write_qq_csv(qq: list[tuple[float, float]], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("expected,observed\n")
        for expected, observed in qq:
            fh.write(f"{fmt_sig(expected, 9)},{fmt_sig(observed, 9)}\n")


def _report_lines(runs: Mapping[Variable, VariableRun], config_note: str) -> list[str]:
    lines = ["svydiff estimation report", ""]
    if config_note:
        lines.append(f"config: {config_note}")
        lines.append("")
    for variable, run in runs.items():
        lines.append(f"== {variable.value} ==")
        n_areas = len(run.results)
        n_tested = run.tabulation.n
        lines.append(f"areas: {n_areas} total, {n_tested} tested, {n_areas - n_tested} with no test")
        nat = run.national
        if nat is not None:
            lines.append(
                "national: estimate {est}  se {se}  base {base}  diff {diff}  t {t}  p(two-sided) {p}".format(
                    est=fmt_sig(nat.estimate, 4),
                    se=fmt_sig(nat.se, 4),
                    base=fmt_sig(nat.base_value, 4),
                    diff=fmt_sig(nat.difference, 4),
                    t=fmt_sig(nat.t, 4),
                    p=fmt_sig(nat.p_two_sided, 3),
                )
            )
            lines.append(f"          n_units {nat.n_units}  weight_sum {fmt_sig(nat.weight_sum, 10)}")
        lines.append("")
        lines.append(f"one-sided p-value tabulation (n = {n_tested})")
        lines.append(f"  {'range':<12} {'count':>7} {'percent':>9} {'expected under global null':>28}")
        for b in run.tabulation.bins:
            lines.append(f"  {b.label:<12} {b.count:>7} {b.percent:>9.2f} {b.expected_percent:>28.1f}")
        lines.append("")
        lines.append("two-sided significance levels")
        lines.append(f"  {'level':<16} {'count':>7} {'percent':>9}")
        for cls in (SigClass.AT_1PCT, SigClass.AT_5PCT, SigClass.AT_10PCT, SigClass.NOT_SIGNIFICANT):
            count = run.significance[cls]
            pct = 100.0 * count / n_tested if n_tested else 0.0
            lines.append(f"  {SIG_LEVEL_LABELS[cls]:<16} {count:>7} {pct:>9.2f}")
        lines.append("")
        if run.sign is not None:
            s = run.sign
            lines.append(
                f"sign test of the share significant at 10% or less: "
                f"k={s.k} n={s.n} p0={s.p0:g} z={s.z:.2f}"
            )
        else:
            lines.append("sign test: skipped (no tested areas)")
        lines.append("")
    return lines


def write_report(runs: Mapping[Variable, VariableRun], path, *, config_note: str = "") -> None:
    """Aligned plain-text report mirroring the delimited outputs."""
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(_report_lines(runs, config_note)) + "\n")
