"""Interventional Shapley values over feature coalitions.

The value of a coalition ``S`` is the model output averaged over background
rows, with features in ``S`` taken from the explained input and the rest from
the background row. Exact mode scores all ``2**d`` coalitions; sampled mode
averages marginal contributions over random feature orderings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import make_rng
from ..errors import ComplexityError, DataError
from .surrogate import SurrogateModel

MAX_EXACT_FEATURES = 20
MAX_BACKGROUND = 64
_CHUNK_ROWS = 1 << 18


@dataclass
class Attribution:
    phi: np.ndarray
    base_value: float
    prediction: float
    method: str
    feature_names: tuple
    n_samples: int | None = None
    std_errors: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {"feature_names": list(self.feature_names), "phi": self.phi.tolist(),
             "base_value": self.base_value, "prediction": self.prediction, "method": self.method}
        if self.method == "sampled":
            d["n_samples"] = self.n_samples
            d["std_errors"] = self.std_errors.tolist()
        return d

    def ranked(self) -> list[tuple[str, float]]:
        """``(feature, phi)`` pairs by decreasing ``|phi|``, stable on ties."""
        order = sorted(range(len(self.phi)), key=lambda i: -abs(self.phi[i]))
        return [(self.feature_names[i], float(self.phi[i])) for i in order]


def _bits(masks, d):
    return ((np.asarray(masks)[:, None] >> np.arange(d)) & 1).astype(bool)


def _mixed_rows(x, background, bits):
    """Rows for every (coalition, background) pair, coalition-major."""
    rows = np.where(bits[:, None, :], x[None, None, :], background[None, :, :])
    return rows.reshape(-1, len(x))


def _values_generic(predict, x, background, masks):
    d, b = len(x), len(background)
    out = np.empty(len(masks))
    step = max(1, _CHUNK_ROWS // b)
    for start in range(0, len(masks), step):
        chunk = masks[start : start + step]
        pred = predict(_mixed_rows(x, background, _bits(chunk, d)))
        out[start : start + len(chunk)] = pred.reshape(len(chunk), b).mean(axis=1)
    return out


def _values_trees(model: SurrogateModel, x, background, masks):
    """Same value function, evaluated tree by tree.

    A tree only reads the features it splits on, so its coalition values
    depend on ``S`` only through ``S`` intersected with those features.
    """
    d = len(x)
    total = np.zeros(len(masks))
    for tree in model.trees:
        used = tree.used_features
        k = len(used)
        if 2**k >= len(masks):
            total += _values_generic(tree.predict, x, background, masks)
            continue
        local = np.zeros(len(masks), dtype=np.int64)
        for j, f in enumerate(used):
            local |= ((masks >> f) & 1) << j
        local_bits = _bits(np.arange(2**k), k)
        full_bits = np.zeros((2**k, d), dtype=bool)
        full_bits[:, used] = local_bits
        pred = tree.predict(_mixed_rows(x, background, full_bits))
        table = pred.reshape(2**k, len(background)).mean(axis=1)
        total += table[local]
    return total / len(model.trees)


def coalition_values(model, x, background, masks) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    if isinstance(model, SurrogateModel):
        return _values_trees(model, x, background, masks)
    return _values_generic(model.predict, x, background, masks)


def _predict_one(model, x) -> float:
    return float(np.asarray(model.predict(x[None, :])).ravel()[0])


def shapley_weights(d: int) -> np.ndarray:
    """``|S|! (d - |S| - 1)! / d!`` indexed by coalition size."""
    return np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) for s in range(d)])


def exact_shapley(values: np.ndarray, d: int) -> np.ndarray:
    """Shapley values from a full table ``values[mask]`` of coalition values."""
    masks = np.arange(2**d)
    sizes = np.array([bin(m).count("1") for m in masks])
    w = shapley_weights(d)
    phi = np.empty(d)
    for i in range(d):
        without = masks[(masks >> i) & 1 == 0]
        phi[i] = (w[sizes[without]] * (values[without | (1 << i)] - values[without])).sum()
    return phi


def shapley_attribution(model, x, background, mode: str = "exact", n_samples: int = 1000,
                        seed: int = 0, max_background: int = MAX_BACKGROUND,
                        feature_names=None) -> Attribution:
    """Attribute ``model(x)`` to the features of ``x``.

    ``background`` is capped at ``max_background`` rows by seeded subsampling.
    """
    x = np.asarray(getattr(x, "values", x), dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    d = len(x)
    if len(background) == 0:
        raise DataError("background set is empty")
    if background.shape[1] != d:
        raise DataError(f"background has {background.shape[1]} features, input has {d}")
    rng = make_rng(seed)
    if len(background) > max_background:
        background = background[np.sort(rng.choice(len(background), max_background, replace=False))]
    if feature_names is None:
        feature_names = getattr(model, "feature_names", None) or tuple(f"x{i}" for i in range(d))
    prediction = _predict_one(model, x)

    if mode == "exact":
        if d > MAX_EXACT_FEATURES:
            raise ComplexityError(f"exact enumeration of 2^{d} coalitions refused (limit d <= {MAX_EXACT_FEATURES})")
        values = coalition_values(model, x, background, np.arange(2**d))
        return Attribution(exact_shapley(values, d), float(values[0]), prediction, "exact",
                           tuple(feature_names))
    if mode != "sampled":
        raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if n_samples < 2:
        raise ValueError("sampled mode needs at least 2 permutations")

    perms = np.stack([rng.permutation(d) for _ in range(n_samples)])
    prefix = np.zeros((n_samples, d + 1), dtype=np.int64)
    prefix[:, 1:] = np.cumsum(1 << perms, axis=1)
    unique, inverse = np.unique(prefix, return_inverse=True)
    values = coalition_values(model, x, background, unique)[inverse.reshape(prefix.shape)]
    contrib = np.empty((n_samples, d))
    np.put_along_axis(contrib, perms, np.diff(values, axis=1), axis=1)
    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(n_samples)
    base = float(coalition_values(model, x, background, np.array([0]))[0])
    return Attribution(phi, base, prediction, "sampled", tuple(feature_names), n_samples, se)
