"""Command-line entry point.

``imputebench run CONFIG`` executes the configured pipeline; the other
subcommands are thin adapters over single module operations. Exit status is
0 on success, 2 when a config value or flag is invalid and 1 when a stage
fails while running.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchmarkPlan, emit_plot_data, emit_report, render_svg, run_benchmark
from .config import SEED_ENV, ConfigError, PipelineConfig, env_seed, load_config
from .core import (
    NORMALIZATIONS,
    ORIENTATIONS,
    Dataset,
    format_matrix,
    generate_synthetic,
    MaskDelta,
    load_matrix,
    normalize,
)
from .downstream import FORECASTERS, _check_params, evaluate_downstream
from .errors import ImputeBenchError
from .explain import explain_algorithm
from .explain.surrogate import MIN_ROWS
from .gengap import ARRANGEMENTS, KINDS, PLACEMENTS, ContaminationSpec, contaminate
from .impute import get_algorithm, impute, list_algorithms
from .metrics import canonical_metric, score
from .optimize import STRATEGIES, ParamSpace, tune

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """A flag or config value is outside its domain (exit 2)."""


class StageError(Exception):
    """A pipeline stage failed at run time (exit 1)."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage, self.cause = stage, cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class _Stage:
    """Context manager timing one stage and wrapping its failures."""

    def __init__(self, name: str, runtimes: dict):
        self.name, self.runtimes = name, runtimes

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, kind, exc, tb):
        self.runtimes[self.name] = time.perf_counter() - self.start
        if isinstance(exc, (ImputeBenchError, OSError, ValueError, ArithmeticError)):
            raise StageError(self.name, exc) from exc
        return False


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    out_dir: Path
    artifacts: dict = field(default_factory=dict)  # file name -> sha256
    manifest: dict = field(default_factory=dict)


def _load_source(cfg: PipelineConfig, base: Path) -> Dataset:
    src = cfg.dataset.source
    if isinstance(src, str):
        path = Path(src)
        if not path.is_absolute():
            path = base / path
        return load_matrix(path, cfg.dataset.orientation, cfg.dataset.header)
    return generate_synthetic(src.kind, src.m, src.n, src.noise_std, src.seed)


def _restore_scale(raw: Dataset, working: Dataset, values: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """Original-unit matrix: raw cells where observed, ``filled`` cells mapped back from the working scale."""
    if working.normalization == "none":
        return np.array(values, dtype=np.float64)
    restored = values * working.norm_params[:, 1:] + working.norm_params[:, :1]
    return np.where(filled, restored, raw.values)


def _trial_record(trial) -> dict:
    d = trial.to_dict()
    d.pop("runtime_seconds")
    return d


def _phi_csv(attribution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    sampled = attribution.std_errors is not None
    w.writerow(["feature", "phi", "std_error"] if sampled else ["feature", "phi"])
    names = list(attribution.feature_names)
    for name, phi in attribution.ranked():
        row = [name, repr(phi)]
        if sampled:
            row.append(repr(float(attribution.std_errors[names.index(name)])))
        w.writerow(row)
    return buf.getvalue()


def _scores_csv(scores: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "metric", "value", "n_cells"])
    for algo, per_metric in scores.items():
        for metric, s in per_metric.items():
            w.writerow([algo, metric, repr(s["value"]), s["n_cells"]])
    return buf.getvalue()


def _series_plot(raw: Dataset, imputed: np.ndarray, delta_mask: np.ndarray, algo: str) -> str:
    row = int(np.flatnonzero(delta_mask.any(axis=1))[0])
    t = list(range(raw.n_timestamps))
    series = {"truth": raw.values[row].tolist(), algo: imputed[row].tolist()}
    return render_svg(t, series, f"{algo}: series {row}", "value", xlabel="time index")


def execute_pipeline(cfg: PipelineConfig, out_dir, base_dir=".", config_source: str = "") -> PipelineResult:
    """Run every configured stage, then write all artifacts into ``out_dir``.

    Nothing is written until every stage has succeeded.
    """
    out_dir = Path(out_dir)
    runtimes: dict = {}
    files: dict[str, bytes] = {}
    spec = cfg.contamination.to_spec()
    seeds = {"contamination": spec.seed}
    resolved_params = {}

    with _Stage("load", runtimes):
        raw = _load_source(cfg, Path(base_dir))
    with _Stage("normalize", runtimes):
        working = raw if cfg.dataset.normalization == "none" else normalize(raw, cfg.dataset.normalization)
    with _Stage("contaminate", runtimes):
        contaminated, delta = contaminate(working, spec)
        delta_mask = delta.to_mask(working.shape)
    files["contaminated.csv"] = format_matrix(np.where(delta_mask, np.nan, raw.values)).encode()
    files["mask_delta.json"] = _dumps({"shape": list(working.shape), **delta.to_dict()}).encode()

    runs = {}
    for item in cfg.imputation.algorithms:
        params = dict(item.params)
        if item.tune is not None:
            with _Stage(f"tune:{item.name}", runtimes):
                tune_spec = ContaminationSpec(**{**spec.to_dict(), "seed": (spec.seed + 1) % 2**64})
                result = tune(working, tune_spec, item.name, item.tune.to_space(), item.tune.metric)
            seeds[f"tuning:{item.name}"] = tune_spec.seed
            params.update(result.best_params)
            record = result.to_dict()
            record["trials"] = [_trial_record(t) for t in result.trials]
            files[f"tuning_{item.name}.json"] = _dumps(record).encode()
            runtimes[f"tune:{item.name}:trials"] = [t.runtime_seconds for t in result.trials]
        with _Stage(f"impute:{item.name}", runtimes):
            run = impute(contaminated, item.name, params)
        runs[item.name] = run
        resolved_params[item.name] = run.params
        restored = _restore_scale(raw, working, run.imputed, contaminated.mask)
        files[f"imputed_{item.name}.csv"] = format_matrix(restored).encode()
        if cfg.output.plots:
            files[f"plot_{item.name}.svg"] = _series_plot(raw, restored, delta_mask, item.name).encode()

    with _Stage("score", runtimes):
        scores = {name: {m: score(working, run, m, target=delta).to_dict() for m in cfg.metrics}
                  for name, run in runs.items()}
    scores_doc = {"metrics": list(cfg.metrics), "target_cells": len(delta), "scores": scores}
    if "json" in cfg.output.formats:
        files["scores.json"] = _dumps(scores_doc).encode()
    if "csv" in cfg.output.formats:
        files["scores.csv"] = _scores_csv(scores).encode()

    if cfg.explain is not None:
        ex = cfg.explain
        seeds["explain"] = ex.seed
        with _Stage("explain", runtimes):
            result = explain_algorithm(working, ex.algorithm, resolved_params.get(ex.algorithm),
                                       n_runs=ex.runs, rate_grid=tuple(ex.rates), mode=ex.mode,
                                       n_samples=ex.n_samples, seed=ex.seed)
        doc = result.to_dict()
        doc["algorithm"] = ex.algorithm
        doc["ranked"] = [[n, p] for n, p in result.attribution.ranked()]
        files[f"explain_{ex.algorithm}.json"] = _dumps(doc).encode()
        files[f"explain_{ex.algorithm}_phi.csv"] = _phi_csv(result.attribution).encode()

    if cfg.downstream is not None:
        ds_cfg = cfg.downstream
        algos = [(a, resolved_params.get(a)) for a in ds_cfg.algorithms]
        with _Stage("downstream", runtimes):
            report = evaluate_downstream(working, spec, algos, ds_cfg.forecaster, ds_cfg.params,
                                         ds_cfg.split, ds_cfg.horizon)
        files["downstream.csv"] = report.to_csv_text().encode()

    artifacts = {name: sha256_hex(data) for name, data in sorted(files.items())}
    manifest = {
        "version": __version__,
        "config_path": config_source,
        "config": cfg.model_dump(mode="json"),
        "resolved_params": resolved_params,
        "seeds": seeds,
        "artifacts": artifacts,
        "runtimes_seconds": runtimes,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    with _Stage("emit", runtimes):
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, data in files.items():
            (out_dir / name).write_bytes(data)
        (out_dir / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return PipelineResult(out_dir, artifacts, manifest)


def run_pipeline(config_path, out_dir=None) -> PipelineResult:
    """Validate the config file, then execute it.

    Raises :class:`~imputebench.config.ConfigError` before any work when the
    config is invalid, and :class:`StageError` when a stage fails.
    """
    config_path = Path(config_path)
    cfg = load_config(config_path)
    out = Path(out_dir) if out_dir is not None else Path(cfg.output.directory)
    return execute_pipeline(cfg, out, config_path.parent, str(config_path))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _validated(fn, *args, **kwargs):
    """Call ``fn``; domain errors become :class:`UsageError`."""
    try:
        return fn(*args, **kwargs)
    except (ImputeBenchError, ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    try:
        return env_seed()
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(pairs) -> dict:
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects NAME=VALUE, got {pair!r}")
        params[key] = _parse_value(value)
    return params


def _check_algo_params(algo: str, params: dict) -> None:
    info = _validated(get_algorithm, algo)
    unknown = sorted(set(params) - set(info.params))
    if unknown:
        raise UsageError(f"{info.name} has no parameter(s) {', '.join(unknown)}")
    for key, value in params.items():
        _validated(info.params[key].check, value)


def _read_json_arg(text: str, what: str):
    path = Path(text)
    try:
        source = path.read_text(encoding="utf-8") if path.is_file() else text
        return json.loads(source)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"{what}: not a JSON file or JSON text ({exc})") from None


def _load_input(args, stage_runtimes) -> tuple[Dataset, Dataset]:
    """``(raw, working)``: the file as read and its normalized copy."""
    with _Stage("load", stage_runtimes):
        raw = load_matrix(args.input, args.orientation, args.header)
    with _Stage("normalize", stage_runtimes):
        working = raw if args.normalization == "none" else normalize(raw, args.normalization)
    return raw, working


def _comma_list(cast):
    def parse(text):
        try:
            return [cast(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None
    return parse


def _flatten(groups) -> list:
    return [item for group in groups or [] for item in group]


class _ListAlgos(argparse.Action):
    """Print the registry and exit, like ``--help``."""

    def __init__(self, option_strings, dest, **kwargs):
        super().__init__(option_strings, dest, nargs=0, default=argparse.SUPPRESS,
                         help="list algorithms with parameter domains and defaults, then exit")

    def __call__(self, parser, namespace, values, option_string=None):
        cmd_list_algos(namespace)
        parser.exit(EXIT_OK)


def _add_input_args(p):
    p.add_argument("--in", "--dataset", dest="input", required=True,
                   help="input matrix (CSV or whitespace separated)")
    p.add_argument("--orientation", choices=ORIENTATIONS, default="series-rows",
                   help="whether series are rows or columns of the file (default: series-rows)")
    p.add_argument("--header", action="store_true", help="skip the first non-blank line")
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="none",
                   help="per-series normalization applied after loading (default: none)")


def _add_contamination_args(p):
    g = p.add_argument_group("contamination")
    g.add_argument("--pattern", "--kind", dest="kind", choices=KINDS + ("mono", "multi"), default="mono-block",
                   help="missing-block pattern (default: mono-block)")
    g.add_argument("--rate", type=float, default=0.2,
                   help="fraction of each contaminated series hidden, in [0.01, 0.80] (default: 0.2)")
    g.add_argument("--series-frac", "--series-fraction", dest="series_fraction", type=float, default=1.0,
                   help="fraction of series contaminated, in (0, 1] (default: 1.0)")
    g.add_argument("--arrangement", choices=ARRANGEMENTS, default="random",
                   help="cross-series layout of mono blocks (default: random)")
    g.add_argument("--block-size", type=int, default=10, help="multi-block block length (default: 10)")
    g.add_argument("--placement", choices=PLACEMENTS, default="uniform",
                   help="multi-block position distribution (default: uniform)")
    g.add_argument("--prefix", "--protected-prefix", dest="protected_prefix", type=float, default=0.10,
                   help="leading fraction never contaminated, in [0, 0.5] (default: 0.10)")


def _add_seed_arg(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (default: ${SEED_ENV}, else 0)")


def _spec_from_args(args) -> ContaminationSpec:
    return _validated(ContaminationSpec, args.kind, args.rate, args.series_fraction, args.arrangement,
                      args.block_size, args.placement, args.protected_prefix, _seed(args))


def _write_text(path, text: str, stage_runtimes) -> None:
    with _Stage("emit", stage_runtimes):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    try:
        result = run_pipeline(args.config, args.out)
    except ConfigError as exc:
        for loc, msg in exc.problems:
            print(f"config error: {loc}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {len(result.artifacts) + 1} files to {result.out_dir}")
    return EXIT_OK


def cmd_list_algos(args) -> int:
    for info in list_algorithms():
        params = ", ".join(p.describe() for p in info.params.values()) or "-"
        print(f"{info.name}\t{info.family}\t{params}")
    return EXIT_OK


def cmd_contaminate(args) -> int:
    spec = _spec_from_args(args)
    rt: dict = {}
    raw, working = _load_input(args, rt)
    with _Stage("contaminate", rt):
        _, delta = contaminate(working, spec)
        delta_mask = delta.to_mask(raw.shape)
    delta_path = args.delta or str(Path(args.out).with_name("mask_delta.json"))
    _write_text(args.out, format_matrix(np.where(delta_mask, np.nan, raw.values)), rt)
    _write_text(delta_path, _dumps({"shape": list(raw.shape), **delta.to_dict()}), rt)
    print(f"hid {len(delta)} cells; wrote {args.out} and {delta_path}")
    return EXIT_OK


def _read_delta(path) -> MaskDelta:
    doc = _read_json_arg(path, "--mask-delta")
    try:
        return MaskDelta.from_dict(doc)
    except (KeyError, TypeError, ValueError, ImputeBenchError) as exc:
        raise UsageError(f"--mask-delta: expected an object with 'positions' ({exc})") from None


def cmd_impute(args) -> int:
    params = _parse_params(args.param)
    _check_algo_params(args.algo, params)
    metrics = [_validated(canonical_metric, m) for m in args.metric or []]
    delta = _read_delta(args.mask_delta) if args.mask_delta else None
    if metrics and delta is None:
        raise UsageError("--metric needs --mask-delta naming cells whose true values are in --in")
    rt: dict = {}
    raw, working = _load_input(args, rt)
    truth, filled = working, raw.mask
    if delta is not None:
        # the listed cells are hidden before imputing and scored against the input values
        with _Stage("mask", rt):
            hidden = delta.to_mask(raw.shape)
            values = working.values.copy()
            values[hidden] = np.nan
            working = working.with_values(values)
            filled = raw.mask | hidden
    with _Stage("impute", rt):
        run = impute(working, args.algo, params)
    with _Stage("score", rt):
        scores = [score(truth, run, m, target=delta).to_dict() for m in metrics]
    _write_text(args.out, format_matrix(_restore_scale(raw, working, run.imputed, filled)), rt)
    print(f"{run.algorithm.name}: filled {int(filled.sum())} cells in {run.runtime_seconds:.3f}s")
    for s in scores:
        print(json.dumps(s))
    return EXIT_OK


def cmd_optimize(args) -> int:
    spec = _spec_from_args(args)
    _validated(get_algorithm, args.algo)
    metric = _validated(canonical_metric, args.metric)
    space_cfg = _read_json_arg(args.space, "--space")
    space = _validated(ParamSpace.from_config, space_cfg, budget=args.budget, strategy=args.strategy,
                       seed=spec.seed)
    rt: dict = {}
    _, ds = _load_input(args, rt)
    with _Stage("tune", rt):
        result = tune(ds, spec, args.algo, space, metric, n_jobs=args.jobs)
    _write_text(args.out, _dumps(result.to_dict()), rt)
    print(f"best {result.best_params} {metric}={result.best_score.value:.6g}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    plan_cfg = _read_json_arg(args.plan, "--plan")
    if not isinstance(plan_cfg, dict):
        raise UsageError("--plan must hold a JSON object")
    if args.metric:
        plan_cfg = {**plan_cfg, "metrics": list(args.metric)}
    plan = _validated(BenchmarkPlan.from_dict, plan_cfg)
    if args.seed is not None:
        plan.base_seed = args.seed
    if args.jobs is not None:
        plan.n_jobs = args.jobs
    _validated(plan.validate)
    rt: dict = {}
    with _Stage("benchmark", rt):
        report = run_benchmark(plan)
    out = Path(args.out)
    with _Stage("emit", rt):
        out.mkdir(parents=True, exist_ok=True)
        emit_report(report, args.format, out / f"report.{args.format}")
        if args.plots:
            emit_plot_data(report, "metric-vs-rate", out / "plots")
            emit_plot_data(report, "runtime-vs-rate", out / "plots")
    errors = sum(r.status == "error" for r in report.measurements)
    print(f"{len(report.measurements)} measurements ({errors} errors) in {out}")
    return EXIT_OK


def cmd_explain(args) -> int:
    params = _parse_params(args.param)
    _check_algo_params(args.algo, params)
    rates = tuple(_flatten(args.rates))
    if args.runs * len(rates) < MIN_ROWS:
        raise UsageError(f"--runs x --rates gives {args.runs * len(rates)} training rows, need {MIN_ROWS}")
    for r in rates:
        _validated(ContaminationSpec, rate=r)
    seed = _seed(args)
    rt: dict = {}
    _, ds = _load_input(args, rt)
    with _Stage("explain", rt):
        result = explain_algorithm(ds, args.algo, params, n_runs=args.runs, rate_grid=rates,
                                   mode=args.mode, n_samples=args.samples, seed=seed)
    doc = result.to_dict()
    doc["algorithm"] = args.algo
    doc["ranked"] = [[n, p] for n, p in result.attribution.ranked()]
    out = Path(args.out)
    phi_path = args.phi_csv or str(out.with_name(f"{out.stem}_phi.csv"))
    _write_text(args.out, _dumps(doc), rt)
    _write_text(phi_path, _phi_csv(result.attribution), rt)
    for name, phi in result.attribution.ranked()[:5]:
        print(f"{name}\t{phi:+.6g}")
    return EXIT_OK


def cmd_downstream(args) -> int:
    spec = _spec_from_args(args)
    algos = list(args.algo or []) + _flatten(args.algos)
    if not algos:
        raise UsageError("name at least one algorithm with --algos or --algo")
    for algo in algos:
        _validated(get_algorithm, algo)
    fparams = _validated(_check_params, args.forecaster, _parse_params(args.fparam))
    if not 0.5 < args.split <= 0.95:
        raise UsageError(f"--split {args.split} outside (0.5, 0.95]")
    if args.horizon is not None and args.horizon < 1:
        raise UsageError("--horizon must be at least 1")
    rt: dict = {}
    _, ds = _load_input(args, rt)
    with _Stage("downstream", rt):
        report = evaluate_downstream(ds, spec, algos, args.forecaster, fparams,
                                     args.split, args.horizon)
    _write_text(args.out, report.to_csv_text(), rt)
    for r in report.rows:
        print(f"{r.algorithm}\tmae={r.mae:.6g}\tsmape={r.smape:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="imputebench", description="Contaminate, impute, score and benchmark time series matrices.",
        epilog="Exit status: 0 on success, 1 when a stage fails, 2 on invalid flags or config.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list-algos", action=_ListAlgos)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="execute a pipeline config file")
    p.add_argument("config", help="JSON pipeline config")
    p.add_argument("--out", default=None, help="output directory (default: output.directory of the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list-algos", help="list registered algorithms with families and parameters")
    p.set_defaults(func=cmd_list_algos)

    p = sub.add_parser("contaminate", help="hide cells of a matrix according to a pattern")
    _add_input_args(p)
    p.add_argument("--out", required=True, help="contaminated matrix path")
    p.add_argument("--delta", default=None, help="mask-delta JSON path (default: mask_delta.json next to --out)")
    _add_contamination_args(p)
    _add_seed_arg(p)
    p.set_defaults(func=cmd_contaminate)

    p = sub.add_parser("impute", help="fill every missing cell of a matrix")
    _add_input_args(p)
    p.add_argument("--out", required=True, help="imputed matrix path")
    p.add_argument("--algo", required=True, help="algorithm name (see list-algos)")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="algorithm parameter; VALUE is parsed as JSON when possible (repeatable)")
    p.add_argument("--mask-delta", default=None, metavar="FILE",
                   help="mask-delta JSON; its cells are hidden before imputing and become the scoring target")
    p.add_argument("--metric", action="append", choices=("rmse", "mae", "pearson", "mi", "mutual-information"),
                   help="score the --mask-delta cells (repeatable)")
    p.add_argument("--list-algos", action=_ListAlgos)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("optimize", help="tune algorithm parameters on a ground-truth matrix")
    _add_input_args(p)
    p.add_argument("--out", required=True, help="tuning result JSON path")
    p.add_argument("--algo", required=True, help="algorithm name")
    p.add_argument("--space", required=True, help="search space as a JSON file or inline JSON object")
    p.add_argument("--strategy", choices=STRATEGIES + ("sh",), default="grid", help="search strategy (default: grid)")
    p.add_argument("--budget", type=int, default=20, help="maximum number of trials (default: 20)")
    p.add_argument("--metric", choices=("rmse", "mae"), default="rmse", help="metric to minimize (default: rmse)")
    p.add_argument("--jobs", type=int, default=1, help="parallel trial workers (default: 1)")
    _add_contamination_args(p)
    _add_seed_arg(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("benchmark", help="run a benchmark plan and write its report")
    p.add_argument("--plan", required=True, help="plan as a JSON file or inline JSON object")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default: csv)")
    p.add_argument("--plots", action="store_true", help="also write plot CSV and SVG files")
    p.add_argument("--jobs", type=int, default=None, help="parallel cell workers (default: plan n_jobs)")
    p.add_argument("--seed", type=int, default=None, help="override the plan's base_seed")
    p.add_argument("--metric", action="append", choices=("rmse", "mae", "pearson", "mi", "mutual-information"),
                   help="metrics to report, replacing the plan's list (repeatable)")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("explain", help="attribute an algorithm's error to dataset features")
    _add_input_args(p)
    p.add_argument("--out", required=True, help="attribution JSON path")
    p.add_argument("--phi-csv", default=None, metavar="FILE",
                   help="plot-data CSV of phi sorted by |phi| (default: <out stem>_phi.csv next to --out)")
    p.add_argument("--algo", required=True, help="algorithm name")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="algorithm parameter (repeatable)")
    p.add_argument("--runs", type=int, default=5, help="contamination runs per rate (default: 5)")
    p.add_argument("--rates", type=_comma_list(float), nargs="+", default=[[0.1, 0.2, 0.4]],
                   help="missing rates of the training set, comma or space separated (default: 0.1,0.2,0.4)")
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact", help="Shapley mode (default: exact)")
    p.add_argument("--samples", type=int, default=1000, help="permutations in sampled mode (default: 1000)")
    _add_seed_arg(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("downstream", help="forecast accuracy after imputation")
    _add_input_args(p)
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--algos", type=_comma_list(str), action="append", help="comma-separated algorithm names")
    p.add_argument("--algo", action="append", help="algorithm name (repeatable)")
    p.add_argument("--forecaster", choices=FORECASTERS, default="ar", help="forecaster (default: ar)")
    p.add_argument("--fparam", action="append", metavar="NAME=VALUE",
                   help="forecaster parameter: period, alpha or p (repeatable)")
    p.add_argument("--split", type=float, default=0.8, help="training fraction, in (0.5, 0.95] (default: 0.8)")
    p.add_argument("--horizon", type=int, default=None, help="forecast steps (default: min(20, N/10))")
    _add_contamination_args(p)
    _add_seed_arg(p)
    p.set_defaults(func=cmd_downstream)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"imputebench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"imputebench {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
