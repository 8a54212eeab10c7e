"""Imputation algorithms behind one interface.

Built-ins cover four families: ``mean`` and ``linear-interp`` (stats),
``knn`` (ml), ``pattern-window`` (pattern-search), ``cdrec`` and
``soft-svd`` (matrix-completion). Further algorithms can be added with
:func:`register_algorithm`.
"""

import math

from .knn import knn_impute
from .matcomp import cd_reconstruct, cdrec_impute, centroid_decomposition, mean_init_sigma1, soft_svd_impute
from .pattern import pattern_window_impute
from .registry import (
    FAMILIES,
    AlgorithmId,
    AlgorithmInfo,
    ImputationRun,
    ParamSpec,
    get_algorithm,
    impute,
    list_algorithms,
    register_algorithm,
    resolve_params,
    unregister_algorithm,
)
from .stats import linear_interp, mean_impute

BUILTIN_ALGORITHMS = ("mean", "linear-interp", "knn", "pattern-window", "cdrec", "soft-svd")

register_algorithm("mean", "stats", mean_impute, _builtin=True,
                   description="series mean of observed cells")
register_algorithm("linear-interp", "stats", linear_interp, _builtin=True,
                   description="linear interpolation, constant extrapolation at the ends")
register_algorithm(
    "knn", "ml", knn_impute, _builtin=True,
    description="weighted average of the k closest series at the missing column",
    params={
        "k": ParamSpec("k", "int", 5, lo=1),
        "weighting": ParamSpec("weighting", "choice", "inverse-distance",
                               choices=("uniform", "inverse-distance")),
    },
)
register_algorithm(
    "pattern-window", "pattern-search", pattern_window_impute, _builtin=True,
    description="continuation of the best z-normalized matching window",
    params={
        "ref_len": ParamSpec("ref_len", "int", lambda ds: max(2, math.ceil(ds.n_timestamps / 10)),
                             lo=2, default_doc="ceil(N/10)"),
        "search": ParamSpec("search", "choice", "all-series", choices=("same-series", "all-series")),
    },
)
register_algorithm(
    "cdrec", "matrix-completion", cdrec_impute, _builtin=True,
    description="iterative centroid-decomposition recovery",
    params={
        "rank": ParamSpec("rank", "int", lambda ds: min(3, *ds.shape), lo=1, default_doc="min(3, M, N)"),
        "eps": ParamSpec("eps", "real", 1e-6, lo=0.0, lo_open=True),
        "max_iter": ParamSpec("max_iter", "int", 100, lo=1),
    },
)
register_algorithm(
    "soft-svd", "matrix-completion", soft_svd_impute, _builtin=True,
    description="iterative SVD with soft-thresholded singular values",
    params={
        "shrinkage": ParamSpec("shrinkage", "real", lambda ds: 0.1 * mean_init_sigma1(ds), lo=0.0,
                               default_doc="0.1 * sigma_1 of the mean-initialized matrix"),
        "eps": ParamSpec("eps", "real", 1e-6, lo=0.0, lo_open=True),
        "max_iter": ParamSpec("max_iter", "int", 200, lo=1),
    },
)

__all__ = [
    "FAMILIES", "BUILTIN_ALGORITHMS", "AlgorithmId", "AlgorithmInfo", "ImputationRun", "ParamSpec",
    "impute", "register_algorithm", "unregister_algorithm", "get_algorithm", "list_algorithms",
    "resolve_params", "mean_impute", "linear_interp", "knn_impute", "pattern_window_impute",
    "cdrec_impute", "soft_svd_impute", "centroid_decomposition",
]
