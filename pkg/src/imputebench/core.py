"""Dataset container, text I/O, normalization and synthetic generators.

A dataset is an M-by-N matrix: one series per row, one timestamp per column.
Missing cells hold NaN and the boolean mask is the authoritative record of
which cells are missing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSeriesError, IoError, ParseError, ShapeError, StateError

NORMALIZATIONS = ("none", "zscore", "minmax")
ORIENTATIONS = ("series-rows", "series-columns")
SYNTHETIC_KINDS = ("sinusoid-mix", "correlated-lowrank", "ar1")

AR1_COEFFICIENT = 0.8


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable M-by-N time series matrix with its missingness mask.

    Parameters
    ----------
    values : ndarray of float64, shape (M, N)
        Cell values; NaN wherever ``mask`` is true.
    mask : ndarray of bool, shape (M, N)
        True marks a missing cell.
    series_names : tuple of str
        One name per row.
    normalization : {'none', 'zscore', 'minmax'}
        Current scale of ``values``.
    norm_params : ndarray, shape (M, 2) or None
        Per-series ``(shift, scale)`` so that ``original = value * scale + shift``.
    """

    values: np.ndarray
    mask: np.ndarray
    series_names: tuple = ()
    normalization: str = "none"
    norm_params: np.ndarray | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got {values.ndim}-D")
        if values.shape != mask.shape:
            raise ShapeError(f"values {values.shape} and mask {mask.shape} differ")
        m, n = values.shape
        if m < 1 or n < 3:
            raise ShapeError(f"need at least 1 series and 3 time points, got {m}x{n}")
        if not np.array_equal(np.isnan(values), mask):
            raise StateError("mask must be true exactly where values are NaN")
        names = tuple(self.series_names) if self.series_names else tuple(f"s{i}" for i in range(m))
        if len(names) != m:
            raise ShapeError(f"{len(names)} series names for {m} series")
        if self.normalization not in NORMALIZATIONS:
            raise StateError(f"unknown normalization {self.normalization!r}")
        params = self.norm_params
        if self.normalization == "none":
            params = None
        elif params is None or np.shape(params) != (m, 2):
            raise StateError("normalized dataset needs (M, 2) normalization parameters")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "series_names", names)
        object.__setattr__(self, "norm_params", None if params is None else _frozen(params))

    @classmethod
    def from_values(cls, values, series_names: Sequence[str] = (), **kwargs) -> "Dataset":
        """Build a dataset whose mask is derived from the NaN cells of ``values``."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[None, :]
        return cls(values, np.isnan(values), tuple(series_names), **kwargs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_timestamps(self) -> int:
        return self.values.shape[1]

    @property
    def n_missing(self) -> int:
        return int(self.mask.sum())

    def with_values(self, values) -> "Dataset":
        """Copy with new values (mask recomputed), keeping names and scale."""
        values = np.asarray(values, dtype=np.float64)
        return replace(self, values=values, mask=np.isnan(values))

    def subset(self, rows: Iterable[int] | None = None, cols: slice | None = None) -> "Dataset":
        rows = np.arange(self.n_series) if rows is None else np.asarray(list(rows), dtype=int)
        cols = slice(None) if cols is None else cols
        params = None if self.norm_params is None else self.norm_params[rows]
        return Dataset(
            self.values[rows][:, cols],
            self.mask[rows][:, cols],
            tuple(self.series_names[i] for i in rows),
            self.normalization,
            params,
        )


@dataclass(frozen=True, eq=False)
class MaskDelta:
    """Cells hidden by one step, as sorted unique ``(series, time)`` pairs."""

    positions: np.ndarray
    source: str = "contaminated"

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)
        if len(pos):
            pos = np.unique(pos, axis=0)
        if self.source not in ("loaded", "contaminated"):
            raise StateError(f"unknown mask source {self.source!r}")
        object.__setattr__(self, "positions", _frozen(pos))

    @classmethod
    def from_mask(cls, mask: np.ndarray, source: str = "contaminated") -> "MaskDelta":
        return cls(np.argwhere(np.asarray(mask, dtype=bool)), source)

    def __len__(self) -> int:
        return len(self.positions)

    def __eq__(self, other):
        if not isinstance(other, MaskDelta):
            return NotImplemented
        return self.source == other.source and np.array_equal(self.positions, other.positions)

    def to_mask(self, shape: tuple[int, int]) -> np.ndarray:
        m, n = shape
        pos = self.positions
        if len(pos) and (pos.min() < 0 or pos[:, 0].max() >= m or pos[:, 1].max() >= n):
            raise StateError(f"mask delta has positions outside a {m}x{n} matrix")
        mask = np.zeros(shape, dtype=bool)
        mask[pos[:, 0], pos[:, 1]] = True
        return mask

    def to_dict(self) -> dict:
        return {"source": self.source, "positions": self.positions.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MaskDelta":
        return cls(np.asarray(d["positions"], dtype=np.int64).reshape(-1, 2), d.get("source", "contaminated"))


# ---------------------------------------------------------------------------
# Text I/O
# ---------------------------------------------------------------------------


def _parse_cell(token: str, line: int) -> float:
    if token.lower() == "nan":
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r} (only NaN marks missing cells)", line)
    return value


def load_matrix(path, orientation: str = "series-rows", header: bool = False) -> Dataset:
    """Read a comma- or whitespace-separated matrix; ``NaN`` tokens are missing."""
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    lines = text.splitlines()
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if header and numbered:
        numbered = [(i, ln) for i, ln in numbered if i != 1]
    use_comma = any("," in ln for _, ln in numbered)

    rows: list[list[float]] = []
    for lineno, ln in numbered:
        tokens = [t.strip() for t in ln.split(",")] if use_comma else ln.split()
        if rows and len(tokens) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} fields, found {len(tokens)}", lineno)
        rows.append([_parse_cell(t, lineno) for t in tokens])
    if not rows:
        raise ShapeError(f"{path} contains no data")

    values = np.array(rows, dtype=np.float64)
    if orientation == "series-columns":
        values = values.T
    if values.shape[1] < 3:
        raise ShapeError(f"need at least 3 time points, got {values.shape[1]}")
    return Dataset.from_values(values)


def format_matrix(values: np.ndarray) -> str:
    out = []
    for row in np.asarray(values, dtype=np.float64):
        out.append(",".join("NaN" if math.isnan(v) else repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def save_matrix(ds: Dataset | np.ndarray, path) -> None:
    """Write comma-separated rows; ``repr`` floats make the round trip exact."""
    values = ds.values if isinstance(ds, Dataset) else ds
    try:
        Path(path).write_text(format_matrix(values), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def normalize(ds: Dataset, method: str = "zscore") -> Dataset:
    """Rescale each series using statistics of its observed cells only.

    Constant series get a unit scale, so they map to all zeros.
    """
    if method not in ("zscore", "minmax"):
        raise ValueError(f"method must be 'zscore' or 'minmax', got {method!r}")
    if ds.normalization != "none":
        raise StateError(f"dataset is already normalized ({ds.normalization})")
    params = np.empty((ds.n_series, 2))
    for i, row in enumerate(ds.values):
        obs = row[~ds.mask[i]]
        if obs.size < 2:
            raise DegenerateSeriesError(f"series {i} has {obs.size} observed points, need 2")
        if method == "zscore":
            shift, scale = obs.mean(), obs.std()
        else:
            shift, scale = obs.min(), obs.max() - obs.min()
        params[i] = shift, (scale if scale > 0 else 1.0)
    values = (ds.values - params[:, :1]) / params[:, 1:]
    return Dataset(values, ds.mask, ds.series_names, method, params)


def denormalize(ds: Dataset) -> Dataset:
    if ds.normalization == "none":
        raise StateError("dataset is not normalized")
    values = ds.values * ds.norm_params[:, 1:] + ds.norm_params[:, :1]
    return Dataset(values, ds.mask, ds.series_names)


def denormalize_values(values: np.ndarray, like: Dataset) -> np.ndarray:
    """Map a matrix on ``like``'s normalized scale back to the original scale."""
    if like.normalization == "none":
        return np.asarray(values, dtype=np.float64)
    return values * like.norm_params[:, 1:] + like.norm_params[:, :1]


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def _sinusoids(rng, count, n, period_lo, period_hi):
    t = np.arange(n)
    amp = rng.uniform(0.5, 1.5, count)
    period = rng.uniform(period_lo, period_hi, count)
    phase = rng.uniform(0.0, 2 * np.pi, count)
    return amp[:, None] * np.sin(2 * np.pi * t[None, :] / period[:, None] + phase[:, None])


def generate_synthetic(kind: str, m: int, n: int, noise_std: float = 0.0, seed: int = 0) -> Dataset:
    """Deterministic synthetic matrix standing in for benchmark datasets.

    ``correlated-lowrank`` mixes ``min(3, m)`` latent signals (a slow sinusoid
    plus a faster, smaller one) through random loadings, so before noise the matrix has exactly that rank.
    ``ar1`` draws stationary AR(1) series with coefficient 0.8 and unit
    innovations. ``noise_std`` always adds white observation noise.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"kind must be one of {SYNTHETIC_KINDS}, got {kind!r}")
    if m < 1 or n < 8:
        raise ShapeError(f"need m >= 1 and n >= 8, got m={m}, n={n}")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    rng = make_rng(seed)

    if kind == "sinusoid-mix":
        base = np.stack([_sinusoids(rng, 3, n, n / 20, n / 2).sum(axis=0) for _ in range(m)])
        values = base + noise_std * rng.standard_normal((m, n))
    elif kind == "correlated-lowrank":
        r = min(3, m)
        # slow drift plus a faster oscillation per latent signal
        latent = _sinusoids(rng, r, n, n / 2, 2 * n) + 0.3 * _sinusoids(rng, r, n, n / 12, n / 5)
        loadings = rng.standard_normal((m, r))
        values = loadings @ latent + noise_std * rng.standard_normal((m, n))
    else:
        phi = AR1_COEFFICIENT
        values = np.empty((m, n))
        shocks = rng.standard_normal((m, n))
        values[:, 0] = shocks[:, 0] / math.sqrt(1 - phi**2)
        for t in range(1, n):
            values[:, t] = phi * values[:, t - 1] + shocks[:, t]
        values += noise_std * rng.standard_normal((m, n))
    return Dataset.from_values(values)
