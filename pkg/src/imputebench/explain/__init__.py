"""Explain imputation error through dataset features and Shapley attribution.

The workflow: contaminate the ground truth many times, record the features of
each contaminated dataset next to the resulting imputation RMSE, fit a tree
ensemble on that table, and attribute its predictions to the features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset
from ..gengap import ContaminationSpec, contaminate
from ..impute import impute
from ..metrics import score
from .features import FEATURE_NAMES, FeatureVector, extract_features, series_features
from .shapley import (
    MAX_BACKGROUND,
    Attribution,
    coalition_values,
    exact_shapley,
    shapley_attribution,
    shapley_weights,
)
from .surrogate import RegressionTree, SurrogateModel, fit_tree, train_surrogate

__all__ = [
    "FEATURE_NAMES", "FeatureVector", "extract_features", "series_features",
    "TrainingTable", "build_training_set", "SurrogateModel", "RegressionTree", "fit_tree",
    "train_surrogate", "Attribution", "shapley_attribution", "coalition_values",
    "exact_shapley", "shapley_weights", "ExplainResult", "explain_algorithm",
]

DEFAULT_RATES = (0.1, 0.2, 0.4)


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) % 2**32 for p in parts]).generate_state(1, np.uint64)[0])


@dataclass
class TrainingTable:
    features: np.ndarray
    rmse: np.ndarray
    rates: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __len__(self) -> int:
        return len(self.rmse)


def build_training_set(truth: Dataset, algo, params=None, n_runs: int = 5,
                       rate_grid=DEFAULT_RATES, seed: int = 0,
                       series_fraction: float = 0.5) -> TrainingTable:
    """One row per (run, rate): features of a contaminated copy and its imputation RMSE.

    Each row contaminates a different seeded subset of series with a mono-block gap.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    feats, errors, rates = [], [], []
    for r in range(n_runs):
        for q, rate in enumerate(rate_grid):
            spec = ContaminationSpec("mono-block", rate=rate, series_fraction=series_fraction,
                                     arrangement="random", seed=derive_seed(seed, r, q))
            contaminated, delta = contaminate(truth, spec)
            run = impute(contaminated, algo, params)
            errors.append(score(truth, run, "rmse", target=delta).value)
            feats.append(extract_features(contaminated).values)
            rates.append(rate)
    return TrainingTable(np.array(feats), np.array(errors), np.array(rates))


@dataclass
class ExplainResult:
    table: TrainingTable
    model: SurrogateModel
    instance: FeatureVector
    attribution: Attribution

    def to_dict(self) -> dict:
        d = self.attribution.to_dict()
        d["instance"] = self.instance.as_dict()
        d["surrogate_train_r2"] = self.model.train_r2
        d["training_rows"] = len(self.table)
        return d


def explain_algorithm(truth: Dataset, algo, params=None, n_runs: int = 5, rate_grid=DEFAULT_RATES,
                      mode: str = "exact", n_samples: int = 1000, seed: int = 0,
                      instance_spec: ContaminationSpec | None = None) -> ExplainResult:
    """Full explain workflow for one algorithm.

    The explained instance is ``truth`` contaminated by ``instance_spec``
    (default: mono-block at the median rate of ``rate_grid``).
    """
    table = build_training_set(truth, algo, params, n_runs, rate_grid, seed)
    model = train_surrogate(table.features, table.rmse, seed=seed, feature_names=table.feature_names)
    if instance_spec is None:
        instance_spec = ContaminationSpec("mono-block", rate=float(np.median(rate_grid)), seed=seed)
    instance = extract_features(contaminate(truth, instance_spec)[0])
    attribution = shapley_attribution(model, instance.values, table.features, mode=mode,
                                      n_samples=n_samples, seed=seed)
    return ExplainResult(table, model, instance, attribution)
