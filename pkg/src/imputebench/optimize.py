"""Hyperparameter tuning with grid, random and successive-halving search.

Every candidate is scored on one fixed validation mask produced by
contaminating the ground truth once per :func:`tune` call.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import Dataset, MaskDelta, make_rng
from .errors import ImputeBenchError, SpecError
from .gengap import ContaminationSpec, contaminate
from .impute import get_algorithm, impute
from .metrics import LOWER_IS_BETTER, Score, canonical_metric, score

STRATEGIES = ("grid", "random", "successive-halving")
_STRATEGY_ALIASES = {"sh": "successive-halving"}

# data fraction of the first successive-halving rung; doubles every rung
SH_START_FRACTION = 0.25
SH_MIN_RUNGS = 3


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int
    step: int = 1

    def __post_init__(self):
        if self.lo > self.hi or self.step < 1:
            raise SpecError(f"invalid integer range [{self.lo}, {self.hi}, step {self.step}]")

    def grid(self):
        return list(range(self.lo, self.hi + 1, self.step))

    def sample(self, rng):
        values = self.grid()
        return values[int(rng.integers(len(values)))]


@dataclass(frozen=True)
class RealRange:
    lo: float
    hi: float
    points: tuple | None = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise SpecError(f"invalid real range [{self.lo}, {self.hi}]")
        if self.points is not None:
            pts = tuple(sorted(float(p) for p in self.points))
            if not pts or pts[0] < self.lo or pts[-1] > self.hi:
                raise SpecError(f"grid points {pts} must be non-empty and inside [{self.lo}, {self.hi}]")
            object.__setattr__(self, "points", pts)

    def grid(self):
        if self.points is None:
            raise SpecError("grid search over a real range needs an explicit list of points")
        return list(self.points)

    def sample(self, rng):
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class Categorical:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise SpecError("categorical domain must be non-empty")

    def grid(self):
        return list(self.values)

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]


def domain_from_config(name: str, cfg) -> Any:
    """Parse one parameter domain from its config form.

    A bare list is categorical; otherwise ``{"type": "int"|"real"|"categorical", ...}``.
    """
    if isinstance(cfg, list):
        return Categorical(tuple(cfg))
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise SpecError(f"{name}: domain must be a list or an object with a 'type'")
    kind = cfg["type"]
    allowed = {"int": {"type", "lo", "hi", "step"}, "real": {"type", "lo", "hi", "points"},
               "categorical": {"type", "values"}}
    if kind not in allowed:
        raise SpecError(f"{name}: unknown domain type {kind!r}")
    extra = set(cfg) - allowed[kind]
    if extra:
        raise SpecError(f"{name}: unknown key(s) {', '.join(sorted(extra))}")
    try:
        if kind == "int":
            return IntRange(int(cfg["lo"]), int(cfg["hi"]), int(cfg.get("step", 1)))
        if kind == "real":
            pts = cfg.get("points")
            return RealRange(float(cfg["lo"]), float(cfg["hi"]), None if pts is None else tuple(pts))
        return Categorical(tuple(cfg["values"]))
    except KeyError as exc:
        raise SpecError(f"{name}: missing key {exc}") from None


@dataclass
class ParamSpace:
    params: dict
    budget: int = 20
    strategy: str = "grid"
    seed: int = 0

    def __post_init__(self):
        self.strategy = _STRATEGY_ALIASES.get(self.strategy, self.strategy)
        if self.strategy not in STRATEGIES:
            raise SpecError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.budget < 1:
            raise SpecError("budget must be at least 1")
        if not self.params:
            raise SpecError("parameter space is empty")
        if self.strategy == "grid":
            for name in self.names:
                if isinstance(self.params[name], RealRange) and self.params[name].points is None:
                    raise SpecError(f"{name}: grid search over a real range needs an explicit list of points")

    @classmethod
    def from_config(cls, domains: dict, **kwargs) -> "ParamSpace":
        return cls({k: domain_from_config(k, v) for k, v in domains.items()}, **kwargs)

    @property
    def names(self) -> list:
        return sorted(self.params)

    def lattice(self) -> list[dict]:
        """Full grid in lexicographic order: parameters by name, values in domain order."""
        names = self.names
        grids = [self.params[n].grid() for n in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*grids)]

    def sample(self, rng) -> dict:
        return {n: self.params[n].sample(rng) for n in self.names}


@dataclass
class Trial:
    params: dict
    score: Score | None
    runtime_seconds: float
    rung: int = 0
    fraction: float = 1.0
    status: str = "ok"

    @property
    def value(self) -> float:
        return math.inf if self.score is None else self.score.value

    def to_dict(self) -> dict:
        return {"params": self.params, "value": None if self.score is None else self.score.value,
                "n_cells": None if self.score is None else self.score.n_cells,
                "runtime_seconds": self.runtime_seconds, "rung": self.rung,
                "fraction": self.fraction, "status": self.status}


@dataclass
class TuningResult:
    best_params: dict
    best_score: Score
    trials: list
    strategy: str
    validation_mask: MaskDelta = field(repr=False)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "best_params": self.best_params,
                "best_score": self.best_score.to_dict(),
                "trials": [t.to_dict() for t in self.trials]}


class _Evaluator:
    def __init__(self, truth, contaminated, delta, algo, metric):
        self.truth, self.contaminated, self.delta = truth, contaminated, delta
        self.algo, self.metric = algo, metric
        self.delta_mask = delta.to_mask(truth.shape)

    def __call__(self, params, rows=None, rung=0, fraction=1.0) -> Trial:
        truth, data, target = self.truth, self.contaminated, self.delta
        if rows is not None:
            truth, data = truth.subset(rows), data.subset(rows)
            target = MaskDelta.from_mask(self.delta_mask[rows])
        start = time.perf_counter()
        try:
            run = impute(data, self.algo, params)
            s = score(truth, run, self.metric, target=target)
            status = "ok"
        except ImputeBenchError as exc:
            s, status = None, f"error: {exc}"
        return Trial(dict(params), s, max(time.perf_counter() - start, 1e-9), rung, fraction, status)


def _run_all(evaluate, jobs, n_jobs):
    if n_jobs <= 1:
        return [evaluate(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(lambda job: evaluate(*job), jobs))


def _argmin(trials) -> int:
    # ties go to the earlier trial
    return min(range(len(trials)), key=lambda i: (trials[i].value, i))


def sh_rungs(budget: int) -> int:
    return max(SH_MIN_RUNGS, math.ceil(math.log2(budget))) if budget > 1 else SH_MIN_RUNGS


def tune(truth: Dataset, spec: ContaminationSpec, algo, space: ParamSpace,
         metric: str = "rmse", n_jobs: int = 1) -> TuningResult:
    """Search ``space`` for the parameters of ``algo`` minimizing ``metric``."""
    metric = canonical_metric(metric)
    if metric not in LOWER_IS_BETTER:
        raise SpecError(f"tuning needs a lower-is-better metric {LOWER_IS_BETTER}, got {metric!r}")
    info = get_algorithm(algo)
    unknown = sorted(set(space.params) - set(info.params))
    if unknown:
        raise SpecError(f"{info.name} has no parameter(s) {', '.join(unknown)}")
    if space.strategy == "grid":
        lattice = space.lattice()
    elif space.strategy == "successive-halving" and space.budget < sh_rungs(space.budget):
        raise SpecError(f"successive halving needs a budget of at least {sh_rungs(space.budget)}")

    contaminated, delta = contaminate(truth, spec)
    evaluate = _Evaluator(truth, contaminated, delta, info.name, metric)
    rng = make_rng(space.seed)

    if space.strategy == "grid":
        trials = _run_all(evaluate, [(p,) for p in lattice[: space.budget]], n_jobs)
        candidates = trials
    elif space.strategy == "random":
        trials = _run_all(evaluate, [(space.sample(rng),) for _ in range(space.budget)], n_jobs)
        candidates = trials
    else:
        trials, candidates = _successive_halving(evaluate, space, rng, truth.n_series,
                                                 delta_rows=np.unique(delta.positions[:, 0]),
                                                 n_jobs=n_jobs)

    best = candidates[_argmin(candidates)]
    if best.score is None:
        raise SpecError(f"every trial failed; last error: {best.status}")
    return TuningResult(best.params, best.score, trials, space.strategy, delta)


def _successive_halving(evaluate, space, rng, m, delta_rows, n_jobs):
    candidates = [space.sample(rng) for _ in range(space.budget)]
    order = rng.permutation(m)
    contaminated_rows = set(int(r) for r in delta_rows)
    trials = []
    final = []
    n_rungs = sh_rungs(space.budget)
    for rung in range(n_rungs):
        fraction = min(1.0, SH_START_FRACTION * 2**rung)
        k = max(1, math.ceil(fraction * m))
        # grow the subset until it holds at least one contaminated series
        while k < m and not contaminated_rows.intersection(order[:k].tolist()):
            k += 1
        rows = None if k >= m else np.sort(order[:k])
        results = _run_all(evaluate, [(p, rows, rung, fraction) for p in candidates], n_jobs)
        trials.extend(results)
        if rung == n_rungs - 1 or len(candidates) == 1 and fraction == 1.0:
            final = results
            break
        ranked = sorted(range(len(results)), key=lambda i: (results[i].value, i))
        keep = sorted(ranked[: math.ceil(len(results) / 2)])
        candidates = [candidates[i] for i in keep]
    return trials, final
