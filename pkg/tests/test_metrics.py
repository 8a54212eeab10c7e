import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from imputebench.core import Dataset, MaskDelta
from imputebench.errors import DegenerateMetricError, EmptyMaskError, ShapeError, StateError
from imputebench.impute import impute
from imputebench.metrics import (
    canonical_metric,
    mae,
    mutual_information,
    pearson,
    rmse,
    score,
    score_vectors,
)


def test_hand_values():
    truth = np.array([1.0, 2.0])
    est = np.array([6.0, 2.0])
    assert rmse(truth, est) == pytest.approx(math.sqrt(12.5), abs=1e-12)
    assert mae(truth, est) == pytest.approx(2.5, abs=1e-12)


def test_pearson_hand_values():
    assert pearson(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 6.0])) == pytest.approx(1.0)
    assert pearson(np.array([1.0, 2.0, 3.0]), np.array([3.0, 2.0, 1.0])) == pytest.approx(-1.0)
    with pytest.raises(DegenerateMetricError):
        pearson(np.array([1.0, 2.0]), np.array([5.0, 5.0]))


def _mi_oracle(x, y, bins=10):
    joint, _, _ = np.histogram2d(x, y, bins=bins)
    p = joint / joint.sum()
    px, py = p.sum(axis=1), p.sum(axis=0)

    def h(q):
        q = q[q > 0]
        return -(q * np.log(q)).sum()

    return h(px) + h(py) - h(p.ravel())


def test_mutual_information_matches_entropy_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal(500)
        y = x + rng.standard_normal(500) * rng.uniform(0.1, 2)
        assert mutual_information(x, y) == pytest.approx(_mi_oracle(x, y), abs=1e-10)


def test_mutual_information_of_identical_vectors_is_entropy():
    x = np.repeat(np.arange(10.0), 3)
    assert mutual_information(x, x) == pytest.approx(math.log(10), abs=1e-12)
    assert mutual_information(x, np.zeros(30)) == pytest.approx(0.0, abs=1e-12)


def test_metric_names():
    assert canonical_metric("mi") == "mutual-information"
    with pytest.raises(ValueError):
        canonical_metric("mape")


vec = st.integers(1, 40).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(-1e3, 1e3)),
    arrays(np.float64, n, elements=st.floats(-1e3, 1e3))))


@given(vec)
def test_rmse_dominates_mae(pair):
    t, e = pair
    assert rmse(t, e) >= mae(t, e) - 1e-12 * max(1.0, mae(t, e))


@given(vec)
def test_scores_are_nonnegative_and_zero_on_identity(pair):
    t, e = pair
    assert rmse(t, e) >= 0 and mae(t, e) >= 0
    assert rmse(t, t) == 0 and mae(t, t) == 0


def _run_for(truth, mask):
    ds = Dataset.from_values(np.where(mask, np.nan, truth))
    return ds, impute(ds, "mean")


@given(st.integers(0, 2**32 - 1))
def test_score_ignores_non_target_cells(seed):
    rng = np.random.default_rng(seed)
    truth = rng.standard_normal((4, 12))
    mask = np.zeros_like(truth, dtype=bool)
    mask[rng.integers(4), 3:6] = True
    _, run = _run_for(truth, mask)
    perturbed = truth.copy()
    perturbed[~mask] += rng.standard_normal((~mask).sum())
    for metric in ("rmse", "mae"):
        assert score(truth, run, metric).value == score(perturbed, run, metric).value


def test_score_uses_target_positions():
    truth = np.arange(12.0).reshape(2, 6)
    mask = np.zeros((2, 6), dtype=bool)
    mask[0, 2] = mask[1, 4] = True
    _, run = _run_for(truth, mask)
    s = score(truth, run, "mae")
    means = [(0 + 1 + 3 + 4 + 5) / 5, (6 + 7 + 8 + 9 + 11) / 5]
    assert s.n_cells == 2
    assert s.value == pytest.approx((abs(2 - means[0]) + abs(10 - means[1])) / 2)


def test_score_with_explicit_target_and_missing_truth():
    truth = np.arange(12.0).reshape(2, 6)
    truth[1, 0] = np.nan
    mask = np.zeros((2, 6), dtype=bool)
    mask[0, 2] = mask[1, 0] = True
    _, run = _run_for(truth, mask)
    with pytest.raises(StateError):
        score(truth, run, "rmse")
    assert score(truth, run, "rmse", target=MaskDelta([[0, 2]])).n_cells == 1


def test_score_errors():
    truth = np.arange(12.0).reshape(2, 6)
    mask = np.zeros((2, 6), dtype=bool)
    mask[0, 1] = True
    _, run = _run_for(truth, mask)
    with pytest.raises(ShapeError):
        score(truth[:, :5], run, "rmse")
    with pytest.raises(EmptyMaskError):
        score(truth, run, "rmse", target=MaskDelta(np.empty((0, 2))))
    with pytest.raises(EmptyMaskError):
        score_vectors([], [], "rmse")
