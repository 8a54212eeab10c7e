"""Benchmark harness: scenario cross-product, reports and plot data.

A cell is one (dataset, pattern, rate, repeat) combination. Its seed is a
stable hash of those coordinates, so a cell yields the same numbers whatever
else the plan contains. All algorithms in a cell see the same contaminated
matrix.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from html import escape
from pathlib import Path

import numpy as np

from .core import Dataset, generate_synthetic, load_matrix, normalize
from .errors import ImputeBenchError, IoError, SpecError
from .gengap import RATE_MAX, RATE_MIN, ContaminationSpec, contaminate
from .impute import get_algorithm, impute
from .metrics import canonical_metric, score
from .optimize import ParamSpace, tune

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("dataset", "pattern", "arrangement", "rate", "algorithm", "repeat", "metric",
                  "value", "runtime_seconds", "seed", "status")
AGGREGATE_REPEAT = -1
SVG_WIDTH, SVG_HEIGHT = 800, 500
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass
class DatasetSource:
    name: str
    path: str | None = None
    synthetic: dict | None = None
    orientation: str = "series-rows"
    header: bool = False
    normalization: str = "none"

    def load(self) -> Dataset:
        if (self.path is None) == (self.synthetic is None):
            raise SpecError(f"dataset {self.name!r} needs exactly one of 'path' or 'synthetic'")
        if self.path is not None:
            ds = load_matrix(self.path, self.orientation, self.header)
        else:
            ds = generate_synthetic(**self.synthetic)
        return ds if self.normalization == "none" else normalize(ds, self.normalization)


@dataclass
class AlgorithmEntry:
    name: str
    params: dict | None = None
    tune: dict | None = None  # {"space": {...}, "strategy", "budget", "metric", "seed"}
    alias: str | None = None

    @property
    def label(self) -> str:
        return self.alias or self.name


@dataclass
class BenchmarkPlan:
    datasets: list
    patterns: list
    rates: list
    algorithms: list
    metrics: list = field(default_factory=lambda: ["rmse"])
    repeats: int = 1
    base_seed: int = 0
    n_jobs: int = 1

    def validate(self) -> None:
        for name in ("datasets", "patterns", "rates", "algorithms", "metrics"):
            if not getattr(self, name):
                raise SpecError(f"plan.{name} must be non-empty")
        if self.repeats < 1:
            raise SpecError("plan.repeats must be at least 1")
        for r in self.rates:
            if not RATE_MIN <= r <= RATE_MAX:
                raise SpecError(f"plan.rates: {r} outside [{RATE_MIN}, {RATE_MAX}]")
        self.metrics = [canonical_metric(m) for m in self.metrics]
        for a in self.algorithms:
            info = get_algorithm(a.name)
            for key, value in (a.params or {}).items():
                if key not in info.params:
                    raise SpecError(f"{a.name} has no parameter {key!r}")
                info.params[key].check(value)
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise SpecError("algorithm labels must be unique; set 'alias' to run one algorithm twice")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise SpecError("dataset names must be unique")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkPlan":
        allowed = {f.name for f in fields(cls)}
        extra = set(d) - allowed
        if extra:
            raise SpecError(f"unknown plan key(s): {', '.join(sorted(extra))}")
        try:
            plan = cls._build(d)
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed plan: {exc}") from None
        plan.validate()
        return plan

    @classmethod
    def _build(cls, d: dict) -> "BenchmarkPlan":
        return cls(
            datasets=[DatasetSource(**x) for x in d["datasets"]],
            patterns=[ContaminationSpec(**x) for x in d["patterns"]],
            rates=[float(r) for r in d["rates"]],
            algorithms=[AlgorithmEntry(**x) if isinstance(x, dict) else AlgorithmEntry(x)
                        for x in d["algorithms"]],
            metrics=list(d.get("metrics", ["rmse"])),
            repeats=int(d.get("repeats", 1)),
            base_seed=int(d.get("base_seed", 0)),
            n_jobs=int(d.get("n_jobs", 1)),
        )


@dataclass
class ReportRow:
    dataset: str
    pattern: str
    arrangement: str
    rate: float
    algorithm: str
    repeat: int
    metric: str
    value: float
    runtime_seconds: float
    seed: int
    status: str = "ok"

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["value"], float) and math.isnan(d["value"]):
            d["value"] = None
        return d


@dataclass
class BenchmarkReport:
    rows: list

    @property
    def measurements(self) -> list:
        return [r for r in self.rows if r.repeat != AGGREGATE_REPEAT]

    @property
    def aggregates(self) -> list:
        return [r for r in self.rows if r.repeat == AGGREGATE_REPEAT]


def cell_seed(base_seed: int, dataset: str, pattern: ContaminationSpec, rate: float, repeat: int) -> int:
    """Stable 64-bit seed from the cell coordinates.

    The pattern enters by content rather than by position, so pruning other
    patterns from a plan leaves this cell's seed unchanged.
    """
    pattern_key = {k: v for k, v in pattern.to_dict().items() if k not in ("rate", "seed")}
    key = json.dumps([int(base_seed), dataset, pattern_key, repr(float(rate)), int(repeat)],
                     sort_keys=True)
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def _impute_entry(data, truth, entry: AlgorithmEntry, pattern, seed):
    params = entry.params
    if entry.tune:
        t = dict(entry.tune)
        space = ParamSpace.from_config(t["space"], budget=int(t.get("budget", 20)),
                                       strategy=t.get("strategy", "grid"), seed=int(t.get("seed", 0)))
        # tuning gets its own mask so it never sees the scored cells
        tuned = tune(truth, replace(pattern, seed=(seed + 1) % 2**64), entry.name, space,
                     t.get("metric", "rmse"))
        params = {**(params or {}), **tuned.best_params}
    return impute(data, entry.name, params)


def _run_cell(plan, truth, ds_name, pattern, rate, repeat):
    seed = cell_seed(plan.base_seed, ds_name, pattern, rate, repeat)
    spec = replace(pattern, rate=rate, seed=seed)
    common = dict(dataset=ds_name, pattern=spec.kind, arrangement=spec.label(), rate=rate,
                  repeat=repeat, seed=seed)
    rows = []
    try:
        data, delta = contaminate(truth, spec)
    except ImputeBenchError as exc:
        log.warning("cell %s/%s/%s/%s: contamination failed: %s", ds_name, spec.label(), rate, repeat, exc)
        for entry in plan.algorithms:
            for metric in plan.metrics:
                rows.append(ReportRow(algorithm=entry.label, metric=metric, value=math.nan,
                                      runtime_seconds=1e-9, status="error", **common))
        return rows
    for entry in plan.algorithms:
        try:
            run = _impute_entry(data, truth, entry, spec, seed)
            for metric in plan.metrics:
                rows.append(ReportRow(algorithm=entry.label, metric=metric,
                                      value=score(truth, run, metric, target=delta).value,
                                      runtime_seconds=run.runtime_seconds, **common))
        except ImputeBenchError as exc:
            log.warning("cell %s/%s/%s/%s: %s failed: %s", ds_name, spec.label(), rate, repeat,
                        entry.label, exc)
            for metric in plan.metrics:
                rows.append(ReportRow(algorithm=entry.label, metric=metric, value=math.nan,
                                      runtime_seconds=1e-9, status="error", **common))
    return rows


def _aggregate(rows, plan) -> list:
    out = []
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.dataset, r.pattern, r.arrangement, r.rate, r.algorithm, r.metric), []).append(r)
    for key, members in groups.items():
        ok = [r for r in members if r.status == "ok"]
        vals = np.array([r.value for r in ok])
        times = np.array([r.runtime_seconds for r in members])
        ds, pat, arr, rate, algo, metric = key
        for stat, fn in (("mean", np.mean), ("std", np.std)):
            value = float(fn(vals)) if len(vals) else math.nan
            out.append(ReportRow(ds, pat, arr, rate, algo, AGGREGATE_REPEAT, metric, value,
                                 float(fn(times)) if stat == "mean" else float(np.std(times)),
                                 AGGREGATE_REPEAT, stat))
    return out


def run_benchmark(plan: BenchmarkPlan) -> BenchmarkReport:
    """Run every cell of ``plan``; failures become ``status='error'`` rows.

    Rows are ordered by dataset, pattern, rate, algorithm and repeat in plan
    order, each cell's repeats being followed by the mean and std rows.
    """
    plan.validate()
    truths = {}
    for src in plan.datasets:
        truths[src.name] = src.load()  # fail fast before any cell runs

    cells = [(src.name, p, rate, k)
             for src in plan.datasets for p in plan.patterns for rate in plan.rates
             for k in range(plan.repeats)]

    def work(cell):
        name, pattern, rate, k = cell
        return _run_cell(plan, truths[name], name, pattern, rate, k)

    if plan.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=plan.n_jobs) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    by_cell = dict(zip(range(len(cells)), results))
    rows = []
    algo_order = {a.label: i for i, a in enumerate(plan.algorithms)}
    metric_order = {m: i for i, m in enumerate(plan.metrics)}
    n_per_group = plan.repeats
    for g in range(0, len(cells), n_per_group):
        group = [r for i in range(g, g + n_per_group) for r in by_cell[i]]
        group.sort(key=lambda r: (algo_order[r.algorithm], r.repeat, metric_order[r.metric]))
        for label in algo_order:
            members = [r for r in group if r.algorithm == label]
            rows.extend(members)
            rows.extend(_aggregate(members, plan))
    return BenchmarkReport(rows)


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return "NaN" if math.isnan(v) else repr(v)
    return str(v)


def emit_report(report: BenchmarkReport, fmt: str, path) -> None:
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(REPORT_COLUMNS)
                for r in report.rows:
                    w.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])
        elif fmt == "json":
            path.write_text(json.dumps([r.to_dict() for r in report.rows], indent=1) + "\n",
                            encoding="utf-8")
        else:
            raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _coerce(record: dict) -> ReportRow:
    value = record["value"]
    value = math.nan if value in (None, "", "NaN", "nan") else float(value)
    return ReportRow(
        dataset=str(record["dataset"]), pattern=str(record["pattern"]),
        arrangement=str(record["arrangement"]), rate=float(record["rate"]),
        algorithm=str(record["algorithm"]), repeat=int(record["repeat"]),
        metric=str(record["metric"]), value=value,
        runtime_seconds=float(record["runtime_seconds"]), seed=int(record["seed"]),
        status=str(record["status"]),
    )


def load_report(path) -> BenchmarkReport:
    """Read a report written by :func:`emit_report` (format from the suffix)."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            records = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, newline="", encoding="utf-8") as fh:
                records = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return BenchmarkReport([_coerce(r) for r in records])


# ---------------------------------------------------------------------------
# Plot data
# ---------------------------------------------------------------------------


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", s).strip("_") or "x"


def plot_tables(report: BenchmarkReport, kind: str = "metric-vs-rate") -> dict:
    """``{(dataset, pattern label, metric): (rates, {algorithm: values})}`` from mean rows."""
    if kind not in ("metric-vs-rate", "runtime-vs-rate"):
        raise ValueError(f"unknown plot kind {kind!r}")
    means = [r for r in report.aggregates if r.status == "mean"]
    if kind == "runtime-vs-rate":
        # runtime does not depend on the metric; keep the first metric only
        first = {}
        for r in means:
            first.setdefault((r.dataset, r.pattern, r.arrangement), r.metric)
        means = [r for r in means if r.metric == first[(r.dataset, r.pattern, r.arrangement)]]
    tables: dict = {}
    for r in means:
        metric = "runtime_seconds" if kind == "runtime-vs-rate" else r.metric
        key = (r.dataset, f"{r.pattern}-{r.arrangement}", metric)
        rates, series = tables.setdefault(key, (set(), {}))
        rates.add(r.rate)
        series.setdefault(r.algorithm, {})[r.rate] = (
            r.runtime_seconds if kind == "runtime-vs-rate" else r.value)
    out = {}
    for key, (rates, series) in tables.items():
        rates = sorted(rates)
        out[key] = (rates, {a: [v.get(x, math.nan) for x in rates] for a, v in series.items()})
    return out


def render_svg(rates, series: dict, title: str, ylabel: str, xlabel: str = "missing rate") -> str:
    """Line chart on a fixed 800x500 canvas, one polyline per algorithm."""
    left, right, top, bottom = 80, 180, 40, 60
    pw, ph = SVG_WIDTH - left - right, SVG_HEIGHT - top - bottom
    finite = [v for vals in series.values() for v in vals if math.isfinite(v)]
    ylo, yhi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    xlo, xhi = min(rates), max(rates)
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    if xhi == xlo:
        xlo, xhi = xlo - 0.01, xhi + 0.01

    def sx(x):
        return left + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return top + ph - (y - ylo) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left}" y="{top + ph + 18}" text-anchor="middle">{xlo:g}</text>',
        f'<text x="{left + pw}" y="{top + ph + 18}" text-anchor="middle">{xhi:g}</text>',
        f'<text x="{left - 6}" y="{top + ph + 4}" text-anchor="end">{ylo:.4g}</text>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end">{yhi:.4g}</text>',
        f'<text x="{left + pw / 2}" y="{SVG_HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {top + ph / 2})">{escape(ylabel)}</text>',
        f'<text x="{left + pw / 2}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for i, (algo, vals) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(rates, vals) if math.isfinite(y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = top + 10 + 20 * i
        parts.append(f'<line x1="{left + pw + 20}" y1="{ly}" x2="{left + pw + 45}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 50}" y="{ly + 4}">{escape(algo)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot_data(report: BenchmarkReport, kind: str, path) -> list[Path]:
    """Write one CSV and one SVG per (dataset, pattern, metric) into directory ``path``."""
    if not report.rows:
        raise SpecError("report is empty")
    outdir = Path(path)
    written = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        for (ds, pattern, metric), (rates, series) in sorted(plot_tables(report, kind).items()):
            stem = outdir / f"{kind}_{_slug(ds)}_{_slug(pattern)}_{_slug(metric)}"
            with open(stem.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["rate", *series])
                for j, rate in enumerate(rates):
                    w.writerow([repr(rate), *(_fmt(series[a][j]) for a in series)])
            stem.with_suffix(".svg").write_text(
                render_svg(rates, series, f"{ds} / {pattern}", metric), encoding="utf-8")
            written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
    except OSError as exc:
        raise IoError(f"cannot write plot data to {outdir}: {exc}") from exc
    return written
