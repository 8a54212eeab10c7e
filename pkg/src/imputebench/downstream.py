"""Downstream forecasting impact of imputation.

Forecasters are trained on the (imputed) training prefix of each series and
scored against the untouched truth columns that follow it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset
from .errors import ParamError, ShapeError, StateError
from .gengap import ContaminationSpec, contaminate
from .impute import impute

FORECASTERS = ("naive-last", "seasonal-naive", "ses", "ar")
ORACLE_ROW = "__oracle__"
BASELINE_ROW = "__baseline__"
MIN_TRAIN = 8


@dataclass
class Forecaster:
    kind: str
    params: dict
    state: dict = field(default_factory=dict)


def levinson_durbin(acov: np.ndarray, order: int) -> np.ndarray:
    """Solve the Yule-Walker equations for AR coefficients of the given order.

    ``acov[k]`` is the autocovariance at lag ``k``; returns ``phi`` with
    ``x_t = sum_k phi[k] x_{t-k-1} + e_t``.
    """
    phi = np.zeros(order)
    if order == 0:
        return phi
    if acov[0] <= 0:
        return phi
    err = acov[0]
    for k in range(order):
        reflection = (acov[k + 1] - phi[:k] @ acov[k:0:-1]) / err
        phi[:k] = phi[:k] - reflection * phi[:k][::-1]
        phi[k] = reflection
        err *= 1.0 - reflection**2
        if err <= 0:
            break
    return phi


def autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased (divide by n) autocovariance of the demeaned series."""
    c = x - x.mean()
    n = len(c)
    return np.array([c[: n - k] @ c[k:] / n for k in range(max_lag + 1)])


def _check_params(kind, params):
    allowed = {"naive-last": set(), "seasonal-naive": {"period"}, "ses": {"alpha"}, "ar": {"p"}}
    if kind not in allowed:
        raise ParamError(f"unknown forecaster {kind!r}; expected one of {FORECASTERS}")
    extra = set(params) - allowed[kind]
    if extra:
        raise ParamError(f"{kind} does not accept {', '.join(sorted(extra))}")
    defaults = {"seasonal-naive": {"period": 2}, "ses": {"alpha": 0.5}, "ar": {"p": 2}}.get(kind, {})
    params = {**defaults, **params}
    for key in ("period", "p"):
        if key in params:
            value = params[key]
            if isinstance(value, bool) or not float(value).is_integer():
                raise ParamError(f"{key} must be an integer, got {value!r}")
            params[key] = int(value)
    if kind == "seasonal-naive" and params["period"] < 2:
        raise ParamError(f"seasonal period must be >= 2, got {params['period']}")
    if kind == "ses" and not 0 < float(params["alpha"]) <= 1:
        raise ParamError(f"alpha must be in (0, 1], got {params['alpha']}")
    if kind == "ar" and params["p"] < 0:
        raise ParamError(f"AR order must be >= 0, got {params['p']}")
    return params


def fit_forecaster(series, kind: str, params: dict | None = None) -> Forecaster:
    series = np.asarray(series, dtype=np.float64)
    params = _check_params(kind, dict(params or {}))
    n = len(series)
    if n < MIN_TRAIN:
        raise ShapeError(f"training series has {n} points, need {MIN_TRAIN}")
    if np.isnan(series).any():
        raise StateError("training series contains missing values")

    if kind == "naive-last":
        return Forecaster(kind, params, {"last": float(series[-1])})
    if kind == "seasonal-naive":
        period = int(params["period"])
        if n < 2 * period:
            raise ShapeError(f"seasonal-naive({period}) needs {2 * period} training points, got {n}")
        return Forecaster(kind, params, {"season": series[-period:].copy()})
    if kind == "ses":
        alpha = float(params["alpha"])
        level = series[0]
        for value in series[1:]:
            level = alpha * value + (1 - alpha) * level
        return Forecaster(kind, params, {"level": float(level)})

    p = int(params["p"])
    if n < 2 * p + 2:
        raise ShapeError(f"ar({p}) needs {2 * p + 2} training points, got {n}")
    mean = float(series.mean())
    phi = levinson_durbin(autocovariance(series, p), p)
    return Forecaster(kind, params, {"mean": mean, "phi": phi, "history": series[len(series) - p :].copy()})


def forecast(f: Forecaster, horizon: int) -> np.ndarray:
    if horizon < 1:
        raise ShapeError("horizon must be at least 1")
    if f.kind == "naive-last":
        return np.full(horizon, f.state["last"])
    if f.kind == "seasonal-naive":
        season = f.state["season"]
        return season[np.arange(horizon) % len(season)]
    if f.kind == "ses":
        return np.full(horizon, f.state["level"])
    mean, phi = f.state["mean"], f.state["phi"]
    p = len(phi)
    buf = list(f.state["history"] - mean)
    out = np.empty(horizon)
    for h in range(horizon):
        # phi[0] multiplies the most recent value
        nxt = float(phi @ np.array(buf[::-1][:p])) if p else 0.0
        buf.append(nxt)
        out[h] = nxt + mean
    return out


def smape(y, yhat) -> float:
    """Symmetric MAPE in [0, 2]; a 0/0 term counts as 0."""
    num = np.abs(y - yhat)
    den = (np.abs(y) + np.abs(yhat)) / 2
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(terms.mean())


@dataclass
class DownstreamRow:
    algorithm: str
    forecaster: str
    mae: float
    smape: float
    status: str = "ok"


@dataclass
class DownstreamReport:
    rows: list
    horizon: int
    train_length: int

    def row(self, algorithm: str) -> DownstreamRow:
        for r in self.rows:
            if r.algorithm == algorithm:
                return r
        raise KeyError(algorithm)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "forecaster", "mae", "smape"])
        for r in self.rows:
            w.writerow([r.algorithm, r.forecaster, repr(r.mae), repr(r.smape)])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())


def forecast_errors(train: np.ndarray, future: np.ndarray, kind: str, params: dict) -> tuple[float, float]:
    """Mean over series of per-series MAE and sMAPE."""
    horizon = future.shape[1]
    maes, smapes = [], []
    for series, truth in zip(train, future):
        pred = forecast(fit_forecaster(series, kind, params), horizon)
        maes.append(float(np.mean(np.abs(truth - pred))))
        smapes.append(smape(truth, pred))
    return float(np.mean(maes)), float(np.mean(smapes))


def default_horizon(n: int) -> int:
    return max(1, min(20, n // 10))


def evaluate_downstream(truth: Dataset, spec: ContaminationSpec, algos, fkind: str = "ar",
                        fparams: dict | None = None, split: float = 0.8,
                        horizon: int | None = None) -> DownstreamReport:
    """Forecast accuracy after imputing a contaminated training prefix.

    Rows follow ``algos`` order, then the oracle (uncontaminated training data)
    and the baseline (mean-imputed training data).
    """
    fparams = _check_params(fkind, dict(fparams or {}))
    if not 0.5 < split <= 0.95:
        raise ShapeError(f"split must be in (0.5, 0.95], got {split}")
    if truth.n_missing:
        raise StateError("downstream evaluation needs a fully observed ground truth")
    n = truth.n_timestamps
    n_train = math.floor(split * n)
    horizon = default_horizon(n) if horizon is None else int(horizon)
    if horizon < 1 or n_train + horizon > n:
        raise ShapeError(f"horizon {horizon} overruns the {n - n_train} columns after the split")

    train_truth = truth.subset(cols=slice(0, n_train))
    future = truth.values[:, n_train : n_train + horizon]
    contaminated, _ = contaminate(train_truth, spec)

    rows = []
    for algo in algos:
        algo, params = algo if isinstance(algo, tuple) else (algo, None)
        name = str(algo)
        run = impute(contaminated, algo, params)
        mae_, smape_ = forecast_errors(run.imputed, future, fkind, fparams)
        rows.append(DownstreamRow(name, fkind, mae_, smape_))
    mae_, smape_ = forecast_errors(train_truth.values, future, fkind, fparams)
    rows.append(DownstreamRow(ORACLE_ROW, fkind, mae_, smape_))
    mae_, smape_ = forecast_errors(impute(contaminated, "mean").imputed, future, fkind, fparams)
    rows.append(DownstreamRow(BASELINE_ROW, fkind, mae_, smape_))
    return DownstreamReport(rows, horizon, n_train)
