"""Fixed catalog of twelve per-series features, averaged over series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset
from ..errors import ShapeError

FEATURE_NAMES = (
    "mean",
    "variance",
    "skewness",
    "excess-kurtosis",
    "lag1-autocorrelation",
    "trend-r2",
    "mean-crossing-rate",
    "longest-constant-run-fraction",
    "spectral-entropy",
    "max-seasonal-autocorrelation",
    "diff-std-ratio",
    "missing-rate-at-extraction",
)
MIN_OBSERVED = 8


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple = FEATURE_NAMES

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


def _lagged_corr(x, lag):
    a, b = x[:-lag], x[lag:]
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a @ a) * (b @ b))
    return 0.0 if denom == 0 else float(np.clip((a @ b) / denom, -1.0, 1.0))


def _longest_run(x):
    best = run = 1
    for prev, cur in zip(x[:-1], x[1:]):
        run = run + 1 if cur == prev else 1
        best = max(best, run)
    return best


def series_features(x, t, missing_rate) -> np.ndarray:
    """Features of one series from its observed values ``x`` at columns ``t``.

    Zero-variance series use fixed constants: autocorrelations, skewness,
    kurtosis, trend R2 and the diff-std ratio are 0, spectral entropy is 1.
    """
    n = len(x)
    mean = x.mean()
    c = x - mean
    var = c @ c / n
    out = dict.fromkeys(FEATURE_NAMES, 0.0)
    out["mean"] = mean
    out["variance"] = var
    out["missing-rate-at-extraction"] = missing_rate
    out["longest-constant-run-fraction"] = _longest_run(x) / n
    out["spectral-entropy"] = 1.0
    if var > 0:
        std = np.sqrt(var)
        out["skewness"] = np.mean(c**3) / std**3
        out["excess-kurtosis"] = np.mean(c**4) / var**2 - 3.0
        out["lag1-autocorrelation"] = (c[:-1] @ c[1:]) / (c @ c)
        tc = t - t.mean()
        stt = tc @ tc
        out["trend-r2"] = 0.0 if stt == 0 else (tc @ c) ** 2 / (stt * (c @ c))
        above = c > 0
        out["mean-crossing-rate"] = np.count_nonzero(above[1:] != above[:-1]) / (n - 1)
        power = np.abs(np.fft.rfft(c))[1:] ** 2
        total = power.sum()
        if total > 0 and len(power) > 1:
            p = power[power > 0] / total
            out["spectral-entropy"] = float(-(p * np.log(p)).sum() / np.log(len(power)))
        out["max-seasonal-autocorrelation"] = max(_lagged_corr(x, k) for k in range(2, n // 2 + 1))
        out["diff-std-ratio"] = np.diff(x).std() / std
    return np.array([out[k] for k in FEATURE_NAMES], dtype=np.float64)


def extract_features(ds: Dataset) -> FeatureVector:
    """Dataset-level feature vector: per-feature mean over series of observed cells."""
    rows = []
    t_all = np.arange(ds.n_timestamps, dtype=np.float64)
    for i in range(ds.n_series):
        obs = ~ds.mask[i]
        if obs.sum() < MIN_OBSERVED:
            raise ShapeError(f"series {i} has {obs.sum()} observed points, need {MIN_OBSERVED}")
        rows.append(series_features(ds.values[i, obs], t_all[obs], float(ds.mask[i].mean())))
    return FeatureVector(np.mean(rows, axis=0))
