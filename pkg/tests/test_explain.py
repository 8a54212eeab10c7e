import math

import numpy as np
import pytest

from imputebench.core import Dataset, generate_synthetic
from imputebench.errors import ComplexityError, DataError, ShapeError
from imputebench.explain import (
    FEATURE_NAMES,
    build_training_set,
    coalition_values,
    exact_shapley,
    explain_algorithm,
    extract_features,
    fit_tree,
    series_features,
    shapley_attribution,
    shapley_weights,
    train_surrogate,
)
from imputebench.explain.shapley import _values_generic

from oracles import shapley_brute_force


def _features(x):
    x = np.asarray(x, dtype=float)
    return dict(zip(FEATURE_NAMES, series_features(x, np.arange(len(x), dtype=float), 0.0)))


def test_catalog_has_twelve_features():
    assert len(FEATURE_NAMES) == 12
    assert len(set(FEATURE_NAMES)) == 12


def test_feature_hand_values():
    f = _features([1.0, 3.0, 1.0, 3.0, 1.0, 3.0, 1.0, 3.0])
    assert f["mean"] == 2.0
    assert f["variance"] == 1.0
    assert f["skewness"] == 0.0
    assert f["excess-kurtosis"] == -2.0
    assert f["lag1-autocorrelation"] == pytest.approx(-7 / 8)
    assert f["mean-crossing-rate"] == 1.0
    assert f["longest-constant-run-fraction"] == 1 / 8
    assert f["max-seasonal-autocorrelation"] == pytest.approx(1.0)
    # differences alternate +2, -2 (four up, three down)
    assert f["diff-std-ratio"] == pytest.approx(math.sqrt(4 - (2 / 7) ** 2))


def test_diff_std_ratio():
    x = np.array([0.0, 1.0, 3.0, 6.0, 10.0, 15.0, 21.0, 28.0])
    f = _features(x)
    assert f["diff-std-ratio"] == pytest.approx(np.diff(x).std() / x.std())


def test_trend_r2_of_a_line():
    assert _features(np.arange(10.0) * 2 + 1)["trend-r2"] == pytest.approx(1.0)


def test_spectral_entropy_bounds():
    t = np.arange(64)
    pure = _features(np.sin(2 * np.pi * t * 4 / 64))["spectral-entropy"]
    noise = _features(np.random.default_rng(0).standard_normal(64))["spectral-entropy"]
    assert 0 <= pure < 0.05
    assert 0.8 < noise <= 1.0


def test_zero_variance_constants():
    f = _features(np.full(10, 4.0))
    assert f["mean"] == 4.0
    assert f["spectral-entropy"] == 1.0
    assert f["longest-constant-run-fraction"] == 1.0
    for name in ("variance", "skewness", "excess-kurtosis", "lag1-autocorrelation", "trend-r2",
                 "mean-crossing-rate", "max-seasonal-autocorrelation", "diff-std-ratio"):
        assert f[name] == 0.0


def test_extract_features_averages_series_and_uses_observed_cells():
    values = np.array([[1.0, 2.0] * 5, [0.0] * 10])
    values[0, 0] = np.nan
    fv = extract_features(Dataset.from_values(values))
    assert fv["missing-rate-at-extraction"] == pytest.approx(0.05)
    assert fv["mean"] == pytest.approx((14 / 9 + 0.0) / 2)
    assert set(fv.as_dict()) == set(FEATURE_NAMES)


def test_extract_features_needs_observations():
    values = np.full((1, 10), np.nan)
    values[0, :5] = 1.0
    with pytest.raises(ShapeError):
        extract_features(Dataset.from_values(values))


def test_tree_fits_a_step():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    tree = fit_tree(x, y, max_depth=2)
    assert tree.predict(x).tolist() == [1.0, 1.0, 5.0, 5.0]
    assert tree.used_features.tolist() == [0]
    assert tree.feature[0] == 0 and 1.0 <= tree.threshold[0] < 2.0


def test_tree_adjacent_float_split():
    a = 1.0
    b = np.nextafter(a, 2.0)
    tree = fit_tree(np.array([[a], [b]]), np.array([0.0, 1.0]))
    assert tree.predict(np.array([[a], [b]])).tolist() == [0.0, 1.0]


def test_surrogate_is_deterministic_and_validates():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 4))
    y = x[:, 0] * 2 + rng.standard_normal(30) * 0.1
    a = train_surrogate(x, y, seed=4)
    b = train_surrogate(x, y, seed=4)
    assert np.array_equal(a.predict(x), b.predict(x))
    assert len(a.trees) == 100
    assert a.train_r2 > 0.8
    assert all(max((t.left >= 0).sum(), 0) <= 15 for t in a.trees)  # depth 4 has at most 15 splits
    with pytest.raises(DataError):
        train_surrogate(x[:9], y[:9])


def test_shapley_weights_sum_to_one_per_feature():
    for d in (1, 3, 6):
        w = shapley_weights(d)
        assert sum(math.comb(d - 1, s) * w[s] for s in range(d)) == pytest.approx(1.0)


def test_exact_matches_permutation_definition():
    rng = np.random.default_rng(1)
    d = 4
    table = rng.standard_normal(2**d)

    def value(s):
        return table[sum(1 << i for i in s)]

    assert np.allclose(exact_shapley(table, d), shapley_brute_force(value, d), atol=1e-12)


class _Linear:
    def __init__(self, w):
        self.w = np.asarray(w, dtype=float)

    def predict(self, x):
        return np.atleast_2d(x) @ self.w


def test_linear_model_closed_form():
    # interventional Shapley of a linear model: w_i * (x_i - mean(background_i))
    rng = np.random.default_rng(2)
    w = rng.standard_normal(5)
    bg = rng.standard_normal((20, 5))
    x = rng.standard_normal(5)
    att = shapley_attribution(_Linear(w), x, bg)
    assert np.allclose(att.phi, w * (x - bg.mean(axis=0)), atol=1e-12)
    assert att.base_value == pytest.approx(float((bg @ w).mean()))


def test_tree_fast_path_matches_generic():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((40, 6))
    y = np.sin(x[:, 0]) + x[:, 1] * x[:, 2]
    model = train_surrogate(x, y, seed=1, n_trees=20)
    masks = np.arange(2**6)
    fast = coalition_values(model, x[0], x[1:17], masks)
    slow = _values_generic(model.predict, x[0], x[1:17], masks)
    assert np.allclose(fast, slow, atol=1e-13)


def test_axioms_on_surrogate():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((50, 6))
    x[:, 5] = 0.0  # a dummy the trees can never split on
    y = 3 * x[:, 0] + x[:, 1] ** 2
    model = train_surrogate(x, y, seed=2, n_trees=30)
    for i in range(5):
        att = shapley_attribution(model, x[i], x)
        assert att.base_value + att.phi.sum() == pytest.approx(att.prediction, abs=1e-9)
        assert att.phi[5] == 0.0


def test_symmetry():
    model = _Linear([2.0, 2.0, 0.0])
    att = shapley_attribution(model, np.array([1.0, 1.0, 5.0]), np.zeros((1, 3)))
    assert att.phi[0] == att.phi[1]
    assert att.phi[2] == 0.0


def test_sampled_close_to_exact():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((30, 5))
    y = x[:, 0] * x[:, 1] + x[:, 2]
    model = train_surrogate(x, y, seed=3, n_trees=20)
    exact = shapley_attribution(model, x[0], x)
    sampled = shapley_attribution(model, x[0], x, mode="sampled", n_samples=2000, seed=1)
    se = np.maximum(sampled.std_errors, 1e-12)
    assert np.all(np.abs(sampled.phi - exact.phi) <= 3 * se + 1e-12)
    assert sampled.base_value + sampled.phi.sum() == pytest.approx(sampled.prediction, abs=1e-9)


def test_shapley_errors():
    with pytest.raises(ComplexityError):
        shapley_attribution(_Linear(np.ones(21)), np.zeros(21), np.zeros((1, 21)))
    with pytest.raises(DataError):
        shapley_attribution(_Linear(np.ones(3)), np.zeros(3), np.zeros((0, 3)))
    with pytest.raises(DataError):
        shapley_attribution(_Linear(np.ones(3)), np.zeros(3), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        shapley_attribution(_Linear(np.ones(3)), np.zeros(3), np.zeros((2, 3)), mode="kernel")


def test_background_is_capped():
    w = np.array([1.0, -1.0])
    bg = np.random.default_rng(6).standard_normal((500, 2))
    att = shapley_attribution(_Linear(w), np.ones(2), bg, max_background=64, seed=2)
    assert att.base_value != pytest.approx(float((bg @ w).mean()), abs=1e-12)
    again = shapley_attribution(_Linear(w), np.ones(2), bg, max_background=64, seed=2)
    assert att.base_value == again.base_value


def test_ranked_orders_by_magnitude():
    att = shapley_attribution(_Linear([1.0, -3.0, 2.0]), np.ones(3), np.zeros((1, 3)),
                              feature_names=("a", "b", "c"))
    assert [n for n, _ in att.ranked()] == ["b", "c", "a"]


def test_training_set_and_explain_workflow():
    truth = generate_synthetic("sinusoid-mix", 6, 80, noise_std=0.1, seed=1)
    table = build_training_set(truth, "mean", n_runs=4, seed=2)
    assert len(table) == 12
    assert table.features.shape == (12, 12)
    assert sorted(set(table.rates.tolist())) == [0.1, 0.2, 0.4]
    result = explain_algorithm(truth, "mean", n_runs=4, seed=2)
    att = result.attribution
    assert att.feature_names == FEATURE_NAMES
    assert att.base_value + att.phi.sum() == pytest.approx(att.prediction, abs=1e-9)
    d = result.to_dict()
    assert d["training_rows"] == 12 and set(d["instance"]) == set(FEATURE_NAMES)
    again = explain_algorithm(truth, "mean", n_runs=4, seed=2)
    assert np.array_equal(again.attribution.phi, att.phi)
