"""Separable resampling with sparse interpolation matrices."""
import numpy as np
from scipy import sparse


def _area_matrix(n_in, n_out):
    """Rows average the input cells overlapping each output cell (exact box overlap)."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    rows, cols, vals = [], [], []
    for o in range(n_out):
        lo, hi = edges[o], edges[o + 1]
        for i in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            overlap = min(hi, i + 1) - max(lo, i)
            if overlap > 0:
                rows.append(o)
                cols.append(i)
                vals.append(overlap / (hi - lo))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))


def _linear_matrix(n_in, n_out):
    """Linear interpolation with pixel centres at half-integers, clamped at the edges."""
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0, n_in - 1)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = pos - i0
    rows = np.repeat(np.arange(n_out), 2)
    cols = np.stack([i0, i1], axis=1).ravel()
    vals = np.stack([1.0 - frac, frac], axis=1).ravel()
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))


def _apply(img, size, builder):
    arr = np.asarray(img, dtype=np.float64)
    w, h = size
    rows = builder(arr.shape[0], h)
    cols = builder(arr.shape[1], w)
    return np.asarray((rows @ arr) @ cols.T)


def area_resize(img, size):
    """Area-average downscale to ``size = (width, height)``; returns float64."""
    return _apply(img, size, _area_matrix)


def linear_resize(img, size):
    """Bilinear resize (up or down) to ``size = (width, height)``; returns float64."""
    return _apply(img, size, _linear_matrix)


def to_uint8(arr):
    return np.clip(np.round(arr), 0, 255).astype(np.uint8)
