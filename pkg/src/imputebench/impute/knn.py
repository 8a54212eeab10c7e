"""K-nearest-neighbour imputation across series."""

import numpy as np

from ..errors import ParamError
from .stats import interpolate_row


def series_distances(values, mask):
    """Root mean squared difference over columns observed in both series.

    Pairs with no common observed column get an infinite distance.
    """
    m = len(values)
    obs = ~mask
    dist = np.full((m, m), np.inf)
    for i in range(m):
        common = obs[i] & obs
        count = common.sum(axis=1)
        sq = np.where(common, (values[i] - np.where(obs, values, 0.0)) ** 2, 0.0).sum(axis=1)
        ok = count > 0
        dist[i, ok] = np.sqrt(sq[ok] / count[ok])
    return dist


def knn_impute(ds, k=5, weighting="inverse-distance"):
    m = ds.n_series
    if k < 1 or k >= m:
        raise ParamError(f"k must satisfy 1 <= k < M={m}, got {k}")
    values, mask = ds.values, ds.mask
    obs = ~mask
    dist = series_distances(values, mask)
    out = values.copy()
    idx = np.arange(m)
    for i in np.flatnonzero(mask.any(axis=1)):
        order = np.lexsort((idx, dist[i]))
        order = order[(order != i) & np.isfinite(dist[i, order])]
        fallback = None
        for j in np.flatnonzero(mask[i]):
            nbrs = order[obs[order, j]][:k]
            if len(nbrs) == 0:
                if fallback is None:
                    fallback = interpolate_row(values[i], mask[i])
                out[i, j] = fallback[j]
                continue
            d = dist[i, nbrs]
            vals = values[nbrs, j]
            if weighting == "uniform":
                out[i, j] = vals.mean()
            elif (d == 0).any():
                out[i, j] = vals[d == 0].mean()
            else:
                w = 1.0 / d
                out[i, j] = (w * vals).sum() / w.sum()
    return out
