"""Algorithm registry, parameter domains and the uniform ``impute`` entry point."""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..core import Dataset, MaskDelta
from ..errors import (
    ContractError,
    DegenerateSeriesError,
    NothingToImputeError,
    ParamError,
    RegistryError,
    UnknownAlgorithmError,
)

FAMILIES = ("stats", "ml", "pattern-search", "matrix-completion")


@dataclass(frozen=True)
class AlgorithmId:
    family: str
    name: str

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParamError(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ParamSpec:
    """Domain of one algorithm parameter.

    ``default`` may be a callable of the dataset for data-dependent defaults,
    in which case ``default_doc`` describes it.
    """

    name: str
    kind: str  # "int" | "real" | "choice"
    default: Any
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()
    default_doc: str = ""
    lo_open: bool = False

    def check(self, value):
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
                else:
                    raise ParamError(f"{self.name} must be an integer, got {value!r}")
            value = int(value)
        elif self.kind == "real":
            if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
                raise ParamError(f"{self.name} must be a real number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ParamError(f"{self.name} must be finite")
        else:
            if value not in self.choices:
                raise ParamError(f"{self.name} must be one of {self.choices}, got {value!r}")
            return value
        if self.lo is not None and (value < self.lo or (self.lo_open and value == self.lo)):
            raise ParamError(f"{self.name}={value} below its lower bound {self.lo}")
        if self.hi is not None and value > self.hi:
            raise ParamError(f"{self.name}={value} above its upper bound {self.hi}")
        return value

    def describe(self) -> str:
        if self.kind == "choice":
            domain = "{" + ", ".join(map(str, self.choices)) + "}"
        else:
            lo = "-inf" if self.lo is None else self.lo
            hi = "inf" if self.hi is None else self.hi
            domain = f"{self.kind} in {'(' if self.lo_open else '['}{lo}, {hi}]"
        default = self.default_doc or repr(self.default)
        return f"{self.name}: {domain}, default {default}"


@dataclass
class AlgorithmInfo:
    algorithm: AlgorithmId
    fn: Callable
    params: dict = field(default_factory=dict)
    builtin: bool = False
    description: str = ""

    @property
    def name(self) -> str:
        return self.algorithm.name

    @property
    def family(self) -> str:
        return self.algorithm.family


@dataclass
class ImputationRun:
    """One imputation: the completed matrix plus the bookkeeping around it."""

    algorithm: AlgorithmId
    params: dict
    imputed: np.ndarray
    target: MaskDelta
    runtime_seconds: float
    iterations: int | None = None


_REGISTRY: dict[str, AlgorithmInfo] = {}
_LOCK = threading.Lock()


def register_algorithm(name: str, family: str, fn: Callable, params: dict | None = None,
                       description: str = "", _builtin: bool = False) -> None:
    """Make ``fn(ds, **params)`` available to :func:`impute` under ``name``.

    ``fn`` returns the completed ``(M, N)`` matrix, or ``(matrix, iterations)``.
    ``params`` maps parameter names to :class:`ParamSpec`; names outside it are
    rejected at call time.
    """
    algo = AlgorithmId(family, name)
    with _LOCK:
        if name in _REGISTRY:
            raise RegistryError(f"algorithm {name!r} is already registered")
        _REGISTRY[name] = AlgorithmInfo(algo, fn, dict(params or {}), _builtin, description)


def unregister_algorithm(name: str) -> None:
    with _LOCK:
        info = _REGISTRY.get(name)
        if info is None:
            raise UnknownAlgorithmError(f"unknown algorithm {name!r}")
        if info.builtin:
            raise RegistryError(f"cannot remove built-in algorithm {name!r}")
        del _REGISTRY[name]


def get_algorithm(algo) -> AlgorithmInfo:
    name = algo.name if isinstance(algo, AlgorithmId) else str(algo)
    info = _REGISTRY.get(name)
    if info is None:
        raise UnknownAlgorithmError(f"unknown algorithm {name!r}; known: {', '.join(_REGISTRY)}")
    if isinstance(algo, AlgorithmId) and algo.family != info.family:
        raise UnknownAlgorithmError(f"{name!r} belongs to family {info.family!r}, not {algo.family!r}")
    return info


def list_algorithms() -> list[AlgorithmInfo]:
    return list(_REGISTRY.values())


def resolve_params(info: AlgorithmInfo, ds: Dataset, params: dict | None) -> dict:
    """Validate user parameters and fill in defaults, in declaration order."""
    params = dict(params or {})
    unknown = sorted(set(params) - set(info.params))
    if unknown:
        raise ParamError(f"{info.name} does not accept parameter(s) {', '.join(unknown)}")
    resolved = {}
    for name, spec in info.params.items():
        if name in params:
            resolved[name] = spec.check(params[name])
        else:
            default = spec.default(ds) if callable(spec.default) else spec.default
            resolved[name] = spec.check(default)
    return resolved


def impute(ds: Dataset, algo, params: dict | None = None) -> ImputationRun:
    """Fill every missing cell of ``ds`` with the named algorithm.

    Observed cells are passed through bitwise; a registered function that
    alters them, or leaves NaN behind, raises :class:`ContractError`.
    """
    info = get_algorithm(algo)
    if ds.n_missing == 0:
        raise NothingToImputeError("dataset has no missing cells")
    observed_counts = (~ds.mask).sum(axis=1)
    if observed_counts.min() < 2:
        i = int(np.argmin(observed_counts))
        raise DegenerateSeriesError(f"series {i} has {observed_counts[i]} observed cells, need 2")
    resolved = resolve_params(info, ds, params)

    start = time.perf_counter()
    out = info.fn(ds, **resolved)
    runtime = max(time.perf_counter() - start, 1e-9)

    iterations = None
    if isinstance(out, tuple):
        out, iterations = out
    imputed = np.asarray(out, dtype=np.float64)
    if imputed.shape != ds.shape:
        raise ContractError(f"{info.name} returned shape {imputed.shape}, expected {ds.shape}")
    if np.isnan(imputed).any():
        raise ContractError(f"{info.name} left missing cells in its output")
    observed = ~ds.mask
    if not np.array_equal(imputed[observed], ds.values[observed]):
        raise ContractError(f"{info.name} modified observed cells")
    imputed = imputed.copy()
    imputed.setflags(write=False)
    return ImputationRun(info.algorithm, resolved, imputed, MaskDelta.from_mask(ds.mask, "loaded"),
                         runtime, iterations)
