"""Benchmarking toolkit for missing-value imputation in multivariate time series.

The modules follow the workflow: :mod:`~imputebench.core` loads data,
:mod:`~imputebench.gengap` hides cells, :mod:`~imputebench.impute` fills them,
:mod:`~imputebench.metrics` scores the result, and the remaining modules tune,
explain, evaluate downstream forecasting and run benchmark sweeps.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    MaskDelta,
    denormalize,
    generate_synthetic,
    load_matrix,
    make_rng,
    normalize,
    save_matrix,
)
from .errors import ImputeBenchError
from .gengap import ContaminationSpec, contaminate, mask_stats
from .impute import get_algorithm, impute, list_algorithms, register_algorithm
from .metrics import score

__all__ = [
    "__version__", "Dataset", "MaskDelta", "load_matrix", "save_matrix", "normalize", "denormalize",
    "generate_synthetic", "make_rng", "ImputeBenchError", "ContaminationSpec", "contaminate",
    "mask_stats", "impute", "get_algorithm", "list_algorithms", "register_algorithm", "score",
]
