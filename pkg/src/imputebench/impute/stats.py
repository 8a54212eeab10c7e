"""Statistical imputers: series mean and linear interpolation."""

import numpy as np

from ..errors import DegenerateSeriesError


def series_means(values, mask):
    obs_count = (~mask).sum(axis=1)
    if obs_count.min() == 0:
        raise DegenerateSeriesError(f"series {int(np.argmin(obs_count))} is entirely missing")
    return np.where(mask, 0.0, values).sum(axis=1) / obs_count


def mean_impute(ds):
    """Each missing cell takes the mean of its series' observed cells."""
    out = ds.values.copy()
    means = series_means(ds.values, ds.mask)
    rows, cols = np.nonzero(ds.mask)
    out[rows, cols] = means[rows]
    return out


def interpolate_row(row, missing):
    """Linear interpolation between observed neighbours, constant at the ends."""
    out = row.copy()
    if missing.any():
        t = np.arange(len(row))
        out[missing] = np.interp(t[missing], t[~missing], row[~missing])
    return out


def linear_interp(ds):
    for i in range(ds.n_series):
        if (~ds.mask[i]).sum() == 0:
            raise DegenerateSeriesError(f"series {i} is entirely missing")
    return np.stack([interpolate_row(r, m) for r, m in zip(ds.values, ds.mask)])
