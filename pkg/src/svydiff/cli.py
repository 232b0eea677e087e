"""Command-line pipeline: estimate, map, synth, and bundle subcommands.

Configuration precedence is flags > config file > defaults.  The config file
is flat ``key = value`` text; its merged settings are recorded in the run
manifest and in every SVG's metadata comment for provenance.  Logs go to
stderr so data outputs compose in shell pipelines.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import bundle as bundle_mod
from . import pipeline, synth
from .errors import ConfigError, SvydiffError
from .estimation import Variable, write_estimates
from .inference import SigClass, qq_series, read_results, write_results
from .ingest import read_geometry
from .viz import (
    BBox,
    AlbersParams,
    MapMode,
    MapSpec,
    PRESETS,
    SHADED_CLASSES,
    render_map,
    render_qq,
)

log = logging.getLogger("svydiff")


def _parse_variables(value: str) -> list[Variable]:
    if value == "both":
        return [Variable.VACANCY, Variable.PPH]
    try:
        return [Variable(value)]
    except ValueError as exc:
        raise ConfigError(f"unknown variable {value!r}; expected vacancy, pph, or both") from exc


def _parse_units(value: str) -> int | tuple[int, int]:
    if ":" in value:
        lo, hi = value.split(":", 1)
        return int(lo), int(hi)
    return int(value)


def _parse_bbox(value: str) -> BBox:
    parts = [float(v) for v in value.split(",")]
    if len(parts) != 4:
        raise ConfigError("--bbox expects lon_min,lat_min,lon_max,lat_max")
    return BBox(*parts)


def _parse_states(value: str) -> tuple[str, ...]:
    states = tuple(s.strip() for s in value.split(",") if s.strip())
    for s in states:
        if len(s) != 2 or not s.isdigit():
            raise ConfigError(f"--state expects 2-digit FIPS codes, got {s!r}")
    return states


def _parse_ladder(value: str) -> dict[SigClass, float]:
    parts = [float(v) for v in value.split(",")]
    if len(parts) != 3:
        raise ConfigError("--alpha-ladder expects three saturations: at1pct,at5pct,at10pct")
    ladder = dict(zip(SHADED_CLASSES, parts))
    ladder[SigClass.NOT_SIGNIFICANT] = 0.0
    return ladder


def _parse_projection(value: str) -> AlbersParams:
    if value in PRESETS:
        return PRESETS[value]
    parts = [float(v) for v in value.split(",")]
    if len(parts) != 4:
        raise ConfigError("--projection expects a preset name or lat1,lat2,lon0,lat0")
    return AlbersParams(*parts)


def _parse_breaks(value: str) -> dict[Variable, float]:
    out: dict[Variable, float] = {}
    if "=" in value:
        for part in value.split(","):
            key, _, num = part.partition("=")
            try:
                out[Variable(key.strip())] = float(num)
            except ValueError as exc:
                raise ConfigError(f"bad --magnitude-break entry {part!r}") from exc
    else:
        brk = float(value)
        out = {Variable.VACANCY: brk, Variable.PPH: brk}
    for var, brk in out.items():
        if not brk > 0:
            raise ConfigError(f"magnitude break for {var.value} must be > 0")
    return out


def _parse_canvas(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ConfigError("--canvas expects WIDTHxHEIGHT, e.g. 960x640") from exc


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` pairs; # starts a comment."""
    out: dict[str, str] = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {i}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge_config(args: argparse.Namespace, allowed: set[str]) -> dict[str, str]:
    """Apply config-file values under any flag the user left unset."""
    if not getattr(args, "config", None):
        return {}
    cfg = read_config_file(args.config)
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"{args.config}: unknown config keys: {', '.join(sorted(unknown))}")
    for key, value in cfg.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return cfg


def _config_note(cfg: dict[str, str]) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(cfg.items()))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, settings: dict, inputs: dict[str, Path], outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "settings": settings,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        "outputs": sorted(outputs),
    }
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _map_spec_from_args(args: argparse.Namespace, mode: MapMode) -> MapSpec:
    kwargs: dict = {"mode": mode}
    if getattr(args, "magnitude_break", None):
        kwargs["magnitude_break"] = _parse_breaks(args.magnitude_break)
    if getattr(args, "alpha_ladder", None):
        kwargs["saturation_ladder"] = _parse_ladder(args.alpha_ladder)
    if getattr(args, "canvas", None):
        kwargs["canvas"] = _parse_canvas(args.canvas)
    if getattr(args, "no_test_fill", None):
        kwargs["no_test_fill"] = args.no_test_fill
    if getattr(args, "bbox", None) and getattr(args, "state", None):
        raise ConfigError("give either --bbox or --state, not both")
    if getattr(args, "bbox", None):
        kwargs["region_filter"] = _parse_bbox(args.bbox)
    elif getattr(args, "state", None):
        kwargs["region_filter"] = _parse_states(args.state)
    if getattr(args, "projection", None):
        kwargs["projection"] = _parse_projection(args.projection)
    elif kwargs.get("region_filter") == ("02",):
        # an Alaska-only view gets the Alaska projection unless overridden
        kwargs["projection"] = PRESETS["alaska"]
    try:
        return MapSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, {"variable", "jobs", "sdr_factor", "out"})
    variables = _parse_variables(args.variable or "both")
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = int(args.jobs) if args.jobs else 1
    factor = float(args.sdr_factor) if args.sdr_factor else None
    runs = pipeline.run_estimation(
        args.microdata, args.baseline, variables, factor=factor, jobs=jobs
    )
    outputs: list[str] = []

    def emit(name: str, writer, *writer_args) -> None:
        writer(*writer_args, out_dir / name)
        outputs.append(name)
        log.info("wrote %s", out_dir / name)

    all_estimates = [e for run in runs.values() for e in run.estimates]
    all_results = [r for run in runs.values() for r in run.results]
    emit("estimates.csv", write_estimates, all_estimates)
    emit("results.csv", write_results, all_results)
    for variable, run in runs.items():
        emit(f"tabulation_{variable.value}.csv", pipeline.write_tabulation_csv, run.tabulation)
        emit(
            f"significance_{variable.value}.csv",
            lambda sig, path, run=run: pipeline.write_significance_csv(sig, run.tabulation.n, path),
            run.significance,
        )
        emit(f"qq_{variable.value}.csv", pipeline.write_qq_csv, run.qq)
        if run.qq:
            name = f"qq_{variable.value}.svg"
            doc = render_qq(run.qq, title=f"{variable.value} p-values, n={len(run.qq)}")
            (out_dir / name).write_text(doc, encoding="utf-8", newline="\n")
            outputs.append(name)
            log.info("wrote %s", out_dir / name)
    emit("sign_tests.csv", pipeline.write_sign_tests_csv, runs)
    if any(run.national is not None for run in runs.values()):
        emit("national.csv", pipeline.write_national_csv, runs)
    note = _config_note(cfg)
    pipeline.write_report(runs, out_dir / "report.txt", config_note=note)
    outputs.append("report.txt")
    _write_manifest(
        out_dir,
        "estimate",
        {"variables": [v.value for v in variables], "jobs": jobs, "sdr_factor": factor, "config": cfg},
        {"microdata": Path(args.microdata), "baseline": Path(args.baseline)},
        outputs,
    )
    return 0


def cmd_map(args: argparse.Namespace) -> int:
    cfg = _merge_config(
        args,
        {"variable", "mode", "magnitude_break", "alpha_ladder", "projection", "canvas", "no_test_fill", "out", "jobs"},
    )
    variables = _parse_variables(args.variable or "both")
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    mode_value = args.mode or "combined"
    note = _config_note(cfg)
    results = read_results(args.results)
    outputs: list[str] = []
    if mode_value == "qq":
        for variable in variables:
            ps = [r.p_one_sided for r in results if r.variable is variable and r.p_one_sided is not None]
            if not ps:
                raise SvydiffError(f"no tested p-values for {variable.value}; cannot draw a QQ plot")
            doc = render_qq(qq_series(ps), title=f"{variable.value} p-values, n={len(ps)}")
            name = f"qq_{variable.value}.svg"
            (out_dir / name).write_text(doc, encoding="utf-8", newline="\n")
            outputs.append(name)
            log.info("wrote %s", out_dir / name)
    else:
        try:
            mode = MapMode(mode_value)
        except ValueError as exc:
            raise ConfigError(f"unknown mode {mode_value!r}; expected difference, pvalue, combined, or qq") from exc
        if not args.geometry:
            raise ConfigError(f"--geometry is required for mode {mode.value}")
        spec = _map_spec_from_args(args, mode)
        geometries = read_geometry(args.geometry)
        for variable in variables:
            subset = [r for r in results if r.variable is variable]
            doc = render_map(geometries, subset, spec, config_note=note)
            name = f"map_{variable.value}_{mode.value}.svg"
            (out_dir / name).write_text(doc, encoding="utf-8", newline="\n")
            outputs.append(name)
            log.info("wrote %s", out_dir / name)
    inputs = {"results": Path(args.results)}
    if mode_value != "qq":
        inputs["geometry"] = Path(args.geometry)
    _write_manifest(out_dir, "map", {"mode": mode_value, "variables": [v.value for v in variables], "config": cfg}, inputs, outputs)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _merge_config(
        args,
        {"areas", "units", "replicates", "vacancy", "pph", "altered_fraction", "effect_vacancy", "effect_pph", "seed", "out"},
    )
    out_dir = Path(args.out or ".")
    config = synth.SynthConfig(
        n_areas=int(args.areas) if args.areas else 100,
        units_per_area=_parse_units(args.units) if args.units else (100, 200),
        true_vacancy=float(args.vacancy) if args.vacancy else 0.2,
        true_pph=float(args.pph) if args.pph else 2.5,
        altered_fraction=float(args.altered_fraction) if args.altered_fraction else 0.0,
        effect_vacancy=float(args.effect_vacancy) if args.effect_vacancy else 0.05,
        effect_pph=float(args.effect_pph) if args.effect_pph else 0.25,
        replicate_count=int(args.replicates) if args.replicates else 80,
        seed=int(args.seed) if args.seed is not None else 0,
    )
    paths = synth.generate(config, out_dir)
    for p in (paths.microdata, paths.baseline, paths.geometry, paths.truth):
        log.info("wrote %s", p)
    _write_manifest(
        out_dir,
        "synth",
        {"config": cfg, **{k: getattr(config, k) for k in ("n_areas", "units_per_area", "true_vacancy", "true_pph", "altered_fraction", "effect_vacancy", "effect_pph", "replicate_count", "seed")}},
        {},
        [paths.microdata.name, paths.baseline.name, paths.geometry.name, paths.truth.name],
    )
    return 0


def cmd_bundle(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, {"magnitude_break", "alpha_ladder", "projection", "max_missing", "out"})
    geometries = read_geometry(args.geometry)
    results = read_results(args.results)
    by_variable: dict[Variable, list] = {}
    for r in results:
        by_variable.setdefault(r.variable, []).append(r)
    spec = _map_spec_from_args(args, MapMode.COMBINED)
    max_missing = float(args.max_missing) if args.max_missing else 0.25
    doc = bundle_mod.build_bundle(geometries, by_variable, spec, max_missing=max_missing)
    out_path = Path(args.out or "bundle.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    bundle_mod.write_bundle(doc, out_path)
    log.info("wrote %s (%d areas)", out_path, len(doc["areas"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svydiff",
        description="County-level survey differences: estimates, significance diagnostics, and maps.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log more detail to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate, test, and tabulate differences")
    p_est.add_argument("--microdata", required=True)
    p_est.add_argument("--baseline", required=True)
    p_est.add_argument("--variable", help="vacancy, pph, or both (default both)")
    p_est.add_argument("--sdr-factor", dest="sdr_factor", help="replication variance factor (default 4/R)")
    p_est.add_argument("--jobs", help="worker threads for per-area estimation")
    p_est.add_argument("--out", help="output directory (default .)")
    p_est.add_argument("--config", help="flat key=value config file")
    p_est.set_defaults(func=cmd_estimate)

    p_map = sub.add_parser("map", help="render SVG maps or QQ plots from a results file")
    p_map.add_argument("--results", required=True)
    p_map.add_argument("--geometry", help="GeoJSON FeatureCollection (not needed for --mode qq)")
    p_map.add_argument("--variable", help="vacancy, pph, or both (default both)")
    p_map.add_argument("--mode", help="difference, pvalue, combined, or qq (default combined)")
    p_map.add_argument("--bbox", help="zoom filter lon_min,lat_min,lon_max,lat_max")
    p_map.add_argument("--state", help="zoom filter: comma-separated 2-digit state FIPS codes")
    p_map.add_argument("--magnitude-break", dest="magnitude_break", help="hue break, e.g. 0.02 or vacancy=0.02,pph=0.1")
    p_map.add_argument("--alpha-ladder", dest="alpha_ladder", help="saturations for 1%%/5%%/10%%, e.g. 1,0.65,0.35")
    p_map.add_argument("--projection", help="conus, alaska, or lat1,lat2,lon0,lat0")
    p_map.add_argument("--canvas", help="canvas size WIDTHxHEIGHT (default 960x640)")
    p_map.add_argument("--no-test-fill", dest="no_test_fill", help="fill for untestable areas")
    p_map.add_argument("--jobs", help="accepted for symmetry; rendering is per-variable")
    p_map.add_argument("--out", help="output directory (default .)")
    p_map.add_argument("--config", help="flat key=value config file")
    p_map.set_defaults(func=cmd_map)

    p_syn = sub.add_parser("synth", help="generate synthetic microdata with known truth")
    p_syn.add_argument("--out", help="output directory (default .)")
    p_syn.add_argument("--areas", help="number of areas (default 100)")
    p_syn.add_argument("--units", help="units per area: N or LO:HI (default 100:200)")
    p_syn.add_argument("--replicates", help="replicate weight count R (default 80)")
    p_syn.add_argument("--vacancy", help="true vacancy rate (default 0.2)")
    p_syn.add_argument("--pph", help="true persons per household (default 2.5)")
    p_syn.add_argument("--altered-fraction", dest="altered_fraction", help="share of areas with planted differences")
    p_syn.add_argument("--effect-vacancy", dest="effect_vacancy", help="planted vacancy difference magnitude")
    p_syn.add_argument("--effect-pph", dest="effect_pph", help="planted pph difference magnitude")
    p_syn.add_argument("--seed", help="RNG seed (default 0)")
    p_syn.add_argument("--config", help="flat key=value config file")
    p_syn.set_defaults(func=cmd_synth)

    p_bun = sub.add_parser("bundle", help="build the JSON bundle for the web viewer")
    p_bun.add_argument("--results", required=True)
    p_bun.add_argument("--geometry", required=True)
    p_bun.add_argument("--out", help="output file (default bundle.json)")
    p_bun.add_argument("--max-missing", dest="max_missing", help="allowed share of geometry without results (default 0.25)")
    p_bun.add_argument("--magnitude-break", dest="magnitude_break", help="default hue break recorded in the bundle")
    p_bun.add_argument("--alpha-ladder", dest="alpha_ladder", help="default saturation ladder recorded in the bundle")
    p_bun.add_argument("--projection", help="default projection recorded in the bundle")
    p_bun.add_argument("--config", help="flat key=value config file")
    p_bun.set_defaults(func=cmd_bundle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SvydiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
