"""Imputation quality scores computed only over the imputed (target) cells."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import Dataset, MaskDelta
from .errors import DegenerateMetricError, EmptyMaskError, ShapeError, StateError

METRICS = ("rmse", "mae", "pearson", "mutual-information")
LOWER_IS_BETTER = ("rmse", "mae")
MI_BINS = 10

_ALIASES = {"mi": "mutual-information"}


def canonical_metric(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in METRICS:
        raise ValueError(f"unknown metric {name!r}; expected one of {METRICS} or 'mi'")
    return name


@dataclass(frozen=True)
class Score:
    metric: str
    value: float
    n_cells: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(truth, estimate):
    return np.asarray(truth, dtype=np.float64), np.asarray(estimate, dtype=np.float64)


def rmse(truth, estimate) -> float:
    truth, estimate = _pair(truth, estimate)
    return float(np.sqrt(np.mean((truth - estimate) ** 2)))


def mae(truth, estimate) -> float:
    truth, estimate = _pair(truth, estimate)
    return float(np.mean(np.abs(truth - estimate)))


def pearson(truth, estimate) -> float:
    truth, estimate = _pair(truth, estimate)
    a = truth - truth.mean()
    b = estimate - estimate.mean()
    denom = np.sqrt((a @ a) * (b @ b))
    if denom == 0:
        raise DegenerateMetricError("pearson correlation undefined for a zero-variance vector")
    return float(np.clip((a @ b) / denom, -1.0, 1.0))


def _bin(v, bins):
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(len(v), dtype=int)
    return np.minimum(((v - lo) / (hi - lo) * bins).astype(int), bins - 1)


def mutual_information(truth, estimate, bins: int = MI_BINS) -> float:
    """Discrete MI in nats after equal-width binning of each vector on its own range."""
    truth, estimate = _pair(truth, estimate)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (_bin(truth, bins), _bin(estimate, bins)), 1.0)
    joint /= joint.sum()
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    nz = joint > 0
    mi = (joint[nz] * np.log(joint[nz] / np.outer(px, py)[nz])).sum()
    return float(max(mi, 0.0))


_FUNCS = {"rmse": rmse, "mae": mae, "pearson": pearson, "mutual-information": mutual_information}


def score_vectors(truth, estimate, metric: str) -> Score:
    metric = canonical_metric(metric)
    truth = np.asarray(truth, dtype=np.float64).ravel()
    estimate = np.asarray(estimate, dtype=np.float64).ravel()
    if len(truth) == 0:
        raise EmptyMaskError("no cells to score")
    return Score(metric, _FUNCS[metric](truth, estimate), len(truth))


def score(truth, run, metric: str, target: MaskDelta | None = None) -> Score:
    """Compare ``run.imputed`` against ``truth`` on the target cells only.

    ``target`` defaults to ``run.target``; pass the contamination delta when the
    input already had missing cells with no ground truth.
    """
    truth_values = truth.values if isinstance(truth, Dataset) else np.asarray(truth, dtype=np.float64)
    imputed = run.imputed if hasattr(run, "imputed") else np.asarray(run, dtype=np.float64)
    if truth_values.shape != imputed.shape:
        raise ShapeError(f"truth {truth_values.shape} and imputation {imputed.shape} differ")
    target = run.target if target is None else target
    pos = target.positions
    if len(pos) == 0:
        raise EmptyMaskError("imputation target is empty")
    t = truth_values[pos[:, 0], pos[:, 1]]
    if np.isnan(t).any():
        raise StateError("ground truth is missing at some target cells")
    return score_vectors(t, imputed[pos[:, 0], pos[:, 1]], metric)
