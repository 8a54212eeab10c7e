"""Pattern-search imputation: copy the continuation of the best-matching window."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ParamError
from .stats import interpolate_row


def missing_blocks(missing_row):
    """Maximal runs of missing cells as ``(start, length)`` pairs."""
    padded = np.concatenate(([False], missing_row, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]


def _znorm(w):
    w = np.atleast_2d(w)
    centered = w - w.mean(axis=1, keepdims=True)
    std = w.std(axis=1, keepdims=True)
    return np.divide(centered, std, out=centered.copy(), where=std > 0)


def _best_match(values, obs, rows, ref, gap_len):
    """Return ``(series, position)`` of the closest window with an observed continuation."""
    ref_len = len(ref)
    span = ref_len + gap_len
    zref = _znorm(ref)[0]
    best = None
    for l in rows:
        if span > values.shape[1]:
            break
        ok = sliding_window_view(obs[l], span).all(axis=1)
        positions = np.flatnonzero(ok)
        if len(positions) == 0:
            continue
        windows = sliding_window_view(values[l], ref_len)[positions]
        dist = np.sqrt(((_znorm(windows) - zref) ** 2).sum(axis=1))
        # lowest distance, then earliest position; series scanned in index order
        j = int(np.lexsort((positions, dist))[0])
        key = (dist[j], int(positions[j]), int(l))
        if best is None or key < best:
            best = key
    return None if best is None else (best[2], best[1])


def pattern_window_impute(ds, ref_len=None, search="all-series"):
    if ref_len < 2:
        raise ParamError(f"ref_len must be at least 2, got {ref_len}")
    values, mask = ds.values, ds.mask
    obs = ~mask
    out = values.copy()
    for i in np.flatnonzero(mask.any(axis=1)):
        fallback = None
        rows = [i] if search == "same-series" else range(ds.n_series)
        for start, length in missing_blocks(mask[i]):
            match = None
            if start >= ref_len and obs[i, start - ref_len : start].all():
                ref = values[i, start - ref_len : start]
                match = _best_match(values, obs, rows, ref, length)
            if match is None:
                if fallback is None:
                    fallback = interpolate_row(values[i], mask[i])
                out[i, start : start + length] = fallback[start : start + length]
                continue
            l, p = match
            offset = ref[-1] - values[l, p + ref_len - 1]
            out[i, start : start + length] = values[l, p + ref_len : p + ref_len + length] + offset
    return out
