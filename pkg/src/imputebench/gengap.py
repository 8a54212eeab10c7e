"""Missingness simulation: mono-block and multi-block gap patterns."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, replace
from decimal import ROUND_CEILING, ROUND_HALF_UP, Decimal

import numpy as np

from .core import Dataset, MaskDelta, make_rng
from .errors import CapacityError, SpecError, StateError

KINDS = ("mono-block", "multi-block")
ARRANGEMENTS = ("random", "overlapping", "disjoint", "blackout")
PLACEMENTS = ("uniform", "gaussian")
RATE_MIN, RATE_MAX = 0.01, 0.80

_ALIASES = {"mono": "mono-block", "multi": "multi-block"}

# sequential multi-block placement can fragment a series; retry before packing
_MAX_PLACEMENT_ATTEMPTS = 50


def round_half_up(x) -> int:
    """Round half away from zero on the decimal value of ``x`` (x >= 0)."""
    return int(Decimal(str(x)).to_integral_value(rounding=ROUND_HALF_UP))


def missing_count(rate: float, n: int) -> int:
    """Cells hidden per contaminated series: round(rate * n), half away from zero."""
    return int((Decimal(str(rate)) * n).to_integral_value(rounding=ROUND_HALF_UP))


def prefix_length(protected_prefix: float, n: int) -> int:
    return int((Decimal(str(protected_prefix)) * n).to_integral_value(rounding=ROUND_CEILING))


@dataclass(frozen=True)
class ContaminationSpec:
    """Declarative missingness pattern.

    ``rate`` is the fraction of each contaminated series' length that is hidden;
    ``arrangement`` applies to mono-block, ``block_size`` and ``placement`` to
    multi-block.
    """

    kind: str = "mono-block"
    rate: float = 0.2
    series_fraction: float = 1.0
    arrangement: str = "random"
    block_size: int = 10
    placement: str = "uniform"
    protected_prefix: float = 0.10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", _ALIASES.get(self.kind, self.kind))
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise SpecError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not RATE_MIN <= self.rate <= RATE_MAX:
            raise SpecError(f"rate {self.rate} outside [{RATE_MIN:.2f}, {RATE_MAX:.2f}] of the series length")
        if not 0 < self.series_fraction <= 1:
            raise SpecError(f"series_fraction {self.series_fraction} outside (0, 1]")
        if not 0 <= self.protected_prefix <= 0.5:
            raise SpecError(f"protected_prefix {self.protected_prefix} outside [0, 0.5]")
        if Decimal(str(self.protected_prefix)) + Decimal(str(self.rate)) > 1:
            raise SpecError("protected_prefix + rate exceeds 1")
        if self.arrangement not in ARRANGEMENTS:
            raise SpecError(f"arrangement must be one of {ARRANGEMENTS}, got {self.arrangement!r}")
        if self.placement not in PLACEMENTS:
            raise SpecError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if isinstance(self.block_size, bool) or int(self.block_size) != self.block_size or self.block_size < 1:
            raise SpecError(f"block_size must be an integer >= 1, got {self.block_size!r}")

    def with_rate(self, rate: float) -> "ContaminationSpec":
        return replace(self, rate=rate)

    def label(self) -> str:
        """Short description used in report rows and file names."""
        return self.arrangement if self.kind == "mono-block" else self.placement

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MaskSummary:
    missing_per_series: np.ndarray
    blocks_per_series: np.ndarray
    block_length_histogram: dict
    column_coverage: frozenset

    @property
    def total_missing(self) -> int:
        return int(self.missing_per_series.sum())

    @property
    def total_blocks(self) -> int:
        return int(self.blocks_per_series.sum())


def _runs(cols: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive integers as ``(start, length)``."""
    if len(cols) == 0:
        return []
    cols = np.sort(cols)
    breaks = np.flatnonzero(np.diff(cols) != 1) + 1
    return [(int(seg[0]), len(seg)) for seg in np.split(cols, breaks)]


def mask_stats(delta: MaskDelta, ds: Dataset) -> MaskSummary:
    """Exact counts describing the cells recorded in ``delta``."""
    m, n = ds.shape
    pos = delta.positions
    if len(pos) and (pos.min() < 0 or pos[:, 0].max() >= m or pos[:, 1].max() >= n):
        raise StateError(f"mask delta does not fit a {m}x{n} dataset")
    missing = np.bincount(pos[:, 0], minlength=m) if len(pos) else np.zeros(m, dtype=int)
    blocks = np.zeros(m, dtype=int)
    hist: Counter = Counter()
    for i in range(m):
        runs = _runs(pos[pos[:, 0] == i, 1])
        blocks[i] = len(runs)
        hist.update(length for _, length in runs)
    coverage = frozenset(int(c) for c in pos[:, 1]) if len(pos) else frozenset()
    return MaskSummary(missing, blocks, dict(sorted(hist.items())), coverage)


def _legal_starts(free: np.ndarray, length: int, lo: int) -> np.ndarray:
    """Start columns >= lo where ``length`` consecutive cells are all free."""
    n = len(free)
    if length > n - lo:
        return np.empty(0, dtype=int)
    window = np.lib.stride_tricks.sliding_window_view(free[lo:], length).all(axis=1)
    return np.flatnonzero(window) + lo


def _mono_starts(spec, observed, rows, length, lo, rng):
    per_series = [_legal_starts(observed[i], length, lo) for i in rows]
    for i, starts in zip(rows, per_series):
        if len(starts) == 0:
            raise SpecError(f"series {i} has no run of {length} observed cells after the protected prefix")

    if spec.arrangement == "random":
        return [int(rng.choice(s)) for s in per_series]

    if spec.arrangement == "disjoint":
        n = observed.shape[1]
        if len(rows) * length > n - lo:
            raise CapacityError(
                f"{len(rows)} disjoint blocks of {length} cells do not fit in {n - lo} columns"
            )
        starts, cursor = [], lo
        for s in per_series:
            nxt = s[s >= cursor]
            if len(nxt) == 0:
                raise CapacityError("disjoint blocks exhausted the available columns")
            starts.append(int(nxt[0]))
            cursor = int(nxt[0]) + length
        return starts

    common = per_series[0]
    for s in per_series[1:]:
        common = np.intersect1d(common, s)
    if len(common) == 0:
        raise SpecError(f"no common block position for the {spec.arrangement} arrangement")
    first = int(rng.choice(common))
    if spec.arrangement == "blackout":
        return [first] * len(rows)

    # overlapping: stagger each block by half its length, wrapping in the legal range
    lo_c, span = int(common[0]), int(common[-1] - common[0] + 1)
    shift = length // 2
    starts = [first]
    for _ in rows[1:]:
        target = lo_c + (starts[-1] - lo_c + shift) % span
        idx = np.searchsorted(common, target)
        starts.append(int(common[idx % len(common)]))
    return starts


def _place_blocks(observed_row, lengths, lo, placement, rng):
    """Sequentially place non-overlapping blocks; returns hidden columns or None."""
    n = len(observed_row)
    free = observed_row.copy()
    free[:lo] = False
    hidden = np.zeros(n, dtype=bool)
    if placement == "gaussian":
        cols = np.arange(n)
        density = np.exp(-0.5 * ((cols - n // 2) / (n / 6)) ** 2)
    for length in lengths:
        # keep one observed cell between blocks so they never merge
        buffered = free.copy()
        buffered[1:] &= ~hidden[:-1]
        buffered[:-1] &= ~hidden[1:]
        starts = _legal_starts(buffered, length, lo)
        if len(starts) == 0:
            starts = _legal_starts(free, length, lo)
        if len(starts) == 0:
            return None
        if placement == "gaussian":
            w = density[starts]
            start = int(rng.choice(starts, p=w / w.sum()))
        else:
            start = int(rng.choice(starts))
        hidden[start : start + length] = True
        free[start : start + length] = False
    return np.flatnonzero(hidden)


def _pack_blocks(observed_row, lengths, lo):
    """Deterministic left-to-right packing, used when random placement fragments."""
    free = observed_row.copy()
    free[:lo] = False
    hidden = []
    for length in lengths:
        starts = _legal_starts(free, length, lo)
        if len(starts) == 0:
            return None
        start = int(starts[0])
        hidden.extend(range(start, start + length))
        free[start : start + length + 1] = False
    return np.array(hidden, dtype=int)


def contaminate(ds: Dataset, spec: ContaminationSpec) -> tuple[Dataset, MaskDelta]:
    """Hide cells of ``ds`` according to ``spec``.

    Returns the contaminated copy and the delta of newly hidden cells. Every
    contaminated series loses exactly ``round(rate * N)`` observed cells, none
    of them inside the protected prefix.
    """
    spec.validate()
    m, n = ds.shape
    n_miss = missing_count(spec.rate, n)
    lo = prefix_length(spec.protected_prefix, n)
    if n_miss < 1:
        raise SpecError(f"rate {spec.rate} hides no cell of a length-{n} series")
    if n_miss > n - lo:
        raise SpecError(f"series of length {n} too short for {n_miss} missing cells after the prefix")
    if spec.kind == "multi-block" and spec.block_size > n_miss:
        raise SpecError(f"block_size {spec.block_size} exceeds the {n_miss} cells to hide")

    rng = make_rng(spec.seed)
    n_rows = max(1, round_half_up(Decimal(str(spec.series_fraction)) * m))
    rows = np.sort(rng.choice(m, size=n_rows, replace=False))
    observed = ~ds.mask
    for i in rows:
        if observed[i, lo:].sum() < n_miss:
            raise SpecError(f"series {i} has fewer than {n_miss} observed cells after the prefix")

    hidden = np.zeros((m, n), dtype=bool)
    if spec.kind == "mono-block":
        for i, start in zip(rows, _mono_starts(spec, observed, list(rows), n_miss, lo, rng)):
            hidden[i, start : start + n_miss] = True
    else:
        b = int(spec.block_size)
        lengths = [b] * (n_miss // b) + ([n_miss % b] if n_miss % b else [])
        for i in rows:
            cols = None
            for _ in range(_MAX_PLACEMENT_ATTEMPTS):
                cols = _place_blocks(observed[i], lengths, lo, spec.placement, rng)
                if cols is not None:
                    break
            if cols is None:
                cols = _pack_blocks(observed[i], lengths, lo)
            if cols is None:
                raise SpecError(f"series {i} cannot hold {len(lengths)} blocks of size {b}")
            hidden[i, cols] = True

    values = ds.values.copy()
    values[hidden] = np.nan
    out = Dataset(values, ds.mask | hidden, ds.series_names, ds.normalization, ds.norm_params)
    return out, MaskDelta.from_mask(hidden, "contaminated")
