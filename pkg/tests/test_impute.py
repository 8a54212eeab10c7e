import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imputebench.core import Dataset, generate_synthetic
from imputebench.errors import (
    ContractError,
    DegenerateSeriesError,
    NothingToImputeError,
    ParamError,
    RegistryError,
    UnknownAlgorithmError,
)
from imputebench.gengap import ContaminationSpec, contaminate
from imputebench.impute import (
    BUILTIN_ALGORITHMS,
    AlgorithmId,
    ParamSpec,
    centroid_decomposition,
    get_algorithm,
    impute,
    list_algorithms,
    register_algorithm,
    unregister_algorithm,
)
from imputebench.impute.knn import series_distances
from imputebench.impute.matcomp import sign_vector
from imputebench.impute.pattern import missing_blocks


def test_builtins_registered_with_families():
    families = {a.name: a.family for a in list_algorithms()}
    assert families == {"mean": "stats", "linear-interp": "stats", "knn": "ml",
                        "pattern-window": "pattern-search", "cdrec": "matrix-completion",
                        "soft-svd": "matrix-completion"}
    assert tuple(families) == BUILTIN_ALGORITHMS


def test_unknown_algorithm(small):
    with pytest.raises(UnknownAlgorithmError):
        impute(small, "brits")
    with pytest.raises(UnknownAlgorithmError):
        get_algorithm(AlgorithmId("ml", "cdrec"))
    assert get_algorithm(AlgorithmId("stats", "mean")).name == "mean"


def test_register_and_unregister(small):
    def zeros(ds, fill=0.0):
        return np.where(ds.mask, fill, ds.values)

    register_algorithm("zero-fill", "stats", zeros, {"fill": ParamSpec("fill", "real", 0.0)})
    try:
        with pytest.raises(RegistryError):
            register_algorithm("zero-fill", "stats", zeros)
        run = impute(small, "zero-fill", {"fill": 7})
        assert run.imputed[0, 2] == 7.0
        assert run.params == {"fill": 7.0}
    finally:
        unregister_algorithm("zero-fill")
    with pytest.raises(UnknownAlgorithmError):
        unregister_algorithm("zero-fill")
    with pytest.raises(RegistryError):
        unregister_algorithm("mean")


@pytest.mark.parametrize("bad,error", [
    (lambda ds: ds.values, "left missing"),
    (lambda ds: np.zeros(ds.shape), "modified observed"),
    (lambda ds: np.zeros((1, 1)), "shape"),
])
def test_contract_violations(small, bad, error):
    register_algorithm("broken", "stats", bad)
    try:
        with pytest.raises(ContractError, match=error):
            impute(small, "broken")
    finally:
        unregister_algorithm("broken")


def test_nothing_to_impute():
    ds = generate_synthetic("ar1", 2, 10, seed=0)
    with pytest.raises(NothingToImputeError):
        impute(ds, "mean")


def test_degenerate_series():
    ds = Dataset.from_values(np.array([[1.0, np.nan, np.nan, np.nan], [1.0, 2.0, 3.0, 4.0]]))
    with pytest.raises(DegenerateSeriesError):
        impute(ds, "linear-interp")


@pytest.mark.parametrize("algo,params", [
    ("knn", {"k": 0}), ("knn", {"k": 2.5}), ("knn", {"weighting": "gaussian"}),
    ("cdrec", {"rank": 0}), ("cdrec", {"eps": 0.0}), ("soft-svd", {"shrinkage": -1.0}),
    ("pattern-window", {"ref_len": 1}), ("mean", {"anything": 1}),
])
def test_parameter_domains(small, algo, params):
    with pytest.raises(ParamError):
        impute(small, algo, params)


def test_data_dependent_parameter_limits(small):
    with pytest.raises(ParamError):
        impute(small, "knn", {"k": 3})  # k must be below M = 3
    with pytest.raises(ParamError):
        impute(small, "cdrec", {"rank": 4})


def test_defaults_resolved(lowrank):
    ds, _ = contaminate(lowrank, ContaminationSpec(rate=0.1))
    assert impute(ds, "cdrec").params == {"rank": 3, "eps": 1e-6, "max_iter": 100}
    assert impute(ds, "pattern-window").params["ref_len"] == 12
    sigma1 = np.linalg.norm(impute(ds, "mean").imputed, 2)
    assert impute(ds, "soft-svd").params["shrinkage"] == pytest.approx(0.1 * sigma1, rel=1e-12)


def test_mean_hand_values(small):
    out = impute(small, "mean").imputed
    assert out[0, 2] == 3.0
    assert out[1, 1] == 6.5
    assert out[2, 3] == 1.375


def test_linear_interp_hand_values():
    ds = Dataset.from_values(np.array([[np.nan, 2.0, np.nan, np.nan, 8.0, np.nan]]))
    out = impute(ds, "linear-interp").imputed
    assert out[0].tolist() == [2.0, 2.0, 4.0, 6.0, 8.0, 8.0]


def test_knn_hand_example():
    values = np.array([[1.0, 2.0, 3.0, np.nan],
                       [1.0, 2.0, 4.0, 10.0],
                       [2.0, 3.0, 4.0, 20.0],
                       [9.0, 9.0, 9.0, 30.0]])
    ds = Dataset.from_values(values)
    d1 = np.sqrt(1 / 3)  # (0 + 0 + 1) / 3
    d2 = 1.0
    expected = (10 / d1 + 20 / d2) / (1 / d1 + 1 / d2)
    assert impute(ds, "knn", {"k": 2}).imputed[0, 3] == pytest.approx(expected, rel=1e-14)
    assert impute(ds, "knn", {"k": 2, "weighting": "uniform"}).imputed[0, 3] == 15.0


def test_knn_distance_ties_prefer_lower_index():
    values = np.array([[0.0, 0.0, 0.0, np.nan],
                       [1.0, 1.0, 1.0, 10.0],
                       [-1.0, -1.0, -1.0, 20.0]])
    out = impute(Dataset.from_values(values), "knn", {"k": 1}).imputed
    assert out[0, 3] == 10.0


def test_knn_zero_distance_neighbours_averaged():
    values = np.array([[1.0, 2.0, np.nan], [1.0, 2.0, 6.0], [1.0, 2.0, 8.0], [5.0, 5.0, 100.0]])
    out = impute(Dataset.from_values(values), "knn", {"k": 3}).imputed
    assert out[0, 2] == 7.0


def test_series_distances_symmetric(lowrank):
    ds, _ = contaminate(lowrank, ContaminationSpec("multi", rate=0.2, block_size=3, seed=2))
    d = series_distances(ds.values, ds.mask)
    assert np.allclose(d, d.T)
    assert np.all(np.diag(d) == 0)


def test_missing_blocks():
    row = np.array([True, True, False, True, False, False, True])
    assert missing_blocks(row) == [(0, 2), (3, 1), (6, 1)]


def test_pattern_window_periodic_oracle():
    t = np.arange(200)
    values = np.sin(2 * np.pi * t / 25) + 0.5 * np.cos(2 * np.pi * t / 12.5)
    values = values[None, :].copy()
    truth = values.copy()
    values[0, 150:165] = np.nan
    out = impute(Dataset.from_values(values), "pattern-window", {"ref_len": 20}).imputed
    assert np.max(np.abs(out - truth)) <= 1e-9


def test_pattern_window_falls_back_to_interpolation():
    values = np.array([[np.nan, np.nan, 1.0, 2.0, 3.0, 4.0]])
    out = impute(Dataset.from_values(values), "pattern-window", {"ref_len": 2}).imputed
    assert out[0, :2].tolist() == [1.0, 1.0]


def test_sign_vector_is_a_local_optimum():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal((9, 3))
        z = sign_vector(x)
        base = np.linalg.norm(x.T @ z)
        for j in range(9):
            flipped = z.copy()
            flipped[j] = -flipped[j]
            assert np.linalg.norm(x.T @ flipped) <= base + 1e-12


def test_sign_vector_rank_one_is_global_optimum():
    rng = np.random.default_rng(3)
    x = np.outer(rng.standard_normal(8), rng.standard_normal(4))
    best = max(np.linalg.norm(x.T @ np.array(z)) for z in itertools.product([-1, 1], repeat=8))
    assert np.linalg.norm(x.T @ sign_vector(x)) == pytest.approx(best, rel=1e-12)


def test_centroid_decomposition_full_rank_reconstructs():
    x = np.random.default_rng(1).standard_normal((30, 4))
    loadings, relevance = centroid_decomposition(x, 4)
    assert np.allclose(loadings @ relevance.T, x, atol=1e-10)
    assert np.allclose(relevance.T @ relevance, np.eye(4), atol=1e-10)


def test_cdrec_recovers_rank_one():
    rng = np.random.default_rng(2)
    truth = np.outer(rng.uniform(0.5, 2.0, 6), np.sin(np.arange(80) / 5) + 2.0)
    ds, delta = contaminate(Dataset.from_values(truth), ContaminationSpec(rate=0.15, seed=1))
    run = impute(ds, "cdrec", {"rank": 1})
    assert np.max(np.abs(run.imputed - truth)) < 1e-6
    assert run.iterations >= 1


def test_soft_svd_improves_on_mean_for_low_rank():
    truth = generate_synthetic("correlated-lowrank", 10, 200, seed=4).values
    ds, _ = contaminate(Dataset.from_values(truth), ContaminationSpec(rate=0.1, seed=3))
    err_mean = np.abs(impute(ds, "mean").imputed - truth).max()
    err_default = np.abs(impute(ds, "soft-svd").imputed - truth).max()
    err_light = np.abs(impute(ds, "soft-svd", {"shrinkage": 1.0}).imputed - truth).max()
    assert err_light < err_default < 0.5 * err_mean


def test_soft_svd_without_shrinkage_keeps_initialization(small):
    # a full-rank reconstruction reproduces its input, so the mean fill is a fixed point
    run = impute(small, "soft-svd", {"shrinkage": 0.0})
    assert np.allclose(run.imputed, impute(small, "mean").imputed, atol=1e-12)
    assert run.iterations == 1


@given(st.sampled_from(BUILTIN_ALGORITHMS), st.integers(0, 10**6),
       st.sampled_from(["mono-block", "multi-block"]), st.floats(0.05, 0.5))
def test_completion_and_passthrough(algo, seed, kind, rate):
    truth = generate_synthetic("sinusoid-mix", 5, 60, noise_std=0.1, seed=seed % 7)
    ds, _ = contaminate(truth, ContaminationSpec(kind, rate=rate, block_size=3, seed=seed))
    run = impute(ds, algo, {"k": 2} if algo == "knn" else None)
    assert run.imputed.shape == ds.shape
    assert not np.isnan(run.imputed).any()
    assert np.array_equal(run.imputed[~ds.mask], ds.values[~ds.mask])
    assert len(run.target) == ds.n_missing
    assert run.runtime_seconds > 0
