"""Iterative low-rank matrix completion: centroid decomposition and soft-thresholded SVD."""

import numpy as np

from ..errors import ParamError
from .stats import linear_interp, mean_impute


def sign_vector(x):
    """Greedy ascent on ``||x.T @ z||`` over sign vectors ``z`` (one sign per row).

    Starts from all ones and flips the single sign with the largest gain
    (lowest index on ties) until no flip improves the norm.
    """
    n = x.shape[0]
    z = np.ones(n)
    s = x.T @ z
    gram = x @ x.T
    diag = np.diag(gram).copy()
    v = x @ s
    for _ in range(4 * n + 1):
        # ||s - 2 z_j x_j||^2 - ||s||^2
        gains = 4.0 * (diag - z * v)
        j = int(np.argmax(gains))
        if gains[j] <= 1e-12 * max(s @ s, 1e-300):
            break
        s -= 2.0 * z[j] * x[j]
        v -= 2.0 * z[j] * gram[:, j]
        z[j] = -z[j]
    return z


def centroid_decomposition(x, rank):
    """Factor the time-by-series matrix ``x ~ loadings @ relevance.T``.

    Each component takes ``r = x.T z / ||x.T z||`` for the greedy sign vector
    ``z`` over time points, sets ``l = x r`` and deflates ``x -= l r.T``.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    n, m = x.shape
    loadings = np.zeros((n, rank))
    relevance = np.zeros((m, rank))
    for c in range(rank):
        z = sign_vector(x)
        s = x.T @ z
        norm = np.linalg.norm(s)
        if norm == 0:
            break
        r = s / norm
        l = x @ r
        loadings[:, c] = l
        relevance[:, c] = r
        x -= np.outer(l, r)
    return loadings, relevance


def cd_reconstruct(values, rank):
    """Rank-``rank`` centroid reconstruction of a series-by-time matrix."""
    loadings, relevance = centroid_decomposition(values.T, rank)
    return (loadings @ relevance.T).T


def cdrec_impute(ds, rank=3, eps=1e-6, max_iter=100):
    if not 1 <= rank <= min(ds.shape):
        raise ParamError(f"rank must be in [1, {min(ds.shape)}], got {rank}")
    mask = ds.mask
    x = linear_interp(ds)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        recon = cd_reconstruct(x, rank)
        change = np.linalg.norm(recon[mask] - x[mask])
        x[mask] = recon[mask]
        if change < eps:
            break
    return x, iterations


def mean_init_sigma1(ds):
    """Largest singular value of the mean-initialized matrix."""
    return float(np.linalg.norm(mean_impute(ds), 2))


def soft_svd_impute(ds, shrinkage=None, eps=1e-6, max_iter=200):
    if shrinkage < 0:
        raise ParamError(f"shrinkage must be non-negative, got {shrinkage}")
    mask = ds.mask
    x = mean_impute(ds)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u, s, vt = np.linalg.svd(x, full_matrices=False)
        recon = (u * np.maximum(s - shrinkage, 0.0)) @ vt
        change = np.linalg.norm(recon[mask] - x[mask])
        scale = np.linalg.norm(x)
        x[mask] = recon[mask]
        if change < eps * (scale if scale > 0 else 1.0):
            break
    return x, iterations
