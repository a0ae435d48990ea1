"""Linear CCA baseline from the SVD of the whitened cross-covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import inv_sqrtm_psd, sym


@dataclass(frozen=True)
class LinearCcaModel:
    """Canonical directions as rows: ``U = (x - mean_x) @ projection_x.T``."""

    projection_x: np.ndarray  # (d, dx)
    projection_y: np.ndarray  # (d, dy)
    mean_x: np.ndarray
    mean_y: np.ndarray
    correlations: np.ndarray  # (d,), descending

    @property
    def d(self):
        return self.projection_x.shape[0]

    def transform_x(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.mean_x.shape[0]:
            raise ValueError(f"x has {x.shape[1]} columns, model expects {self.mean_x.shape[0]}")
        return (x - self.mean_x) @ self.projection_x.T

    def transform_y(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if y.shape[1] != self.mean_y.shape[0]:
            raise ValueError(f"y has {y.shape[1]} columns, model expects {self.mean_y.shape[0]}")
        return (y - self.mean_y) @ self.projection_y.T


def _whitener(cov, ridge, label):
    dim = cov.shape[0]
    if ridge is None:
        floor = 1e-8 * np.trace(cov) / dim
        if floor <= 0:
            raise np.linalg.LinAlgError(f"{label} covariance is identically zero")
        return inv_sqrtm_psd(cov, floor=floor)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    c = cov + ridge * np.eye(dim)
    w = np.linalg.eigvalsh(c)
    if ridge == 0 and w.min() <= 1e-12 * max(w.max(), 1e-300):
        raise np.linalg.LinAlgError(
            f"{label} covariance is numerically singular (min eigenvalue {w.min():.3e}); "
            "use a positive ridge")
    return inv_sqrtm_psd(c)


def fit_linear_cca(data, d, ridge=None):
    """Fit the top-``d`` canonical pairs of ``data``.

    Parameters
    ----------
    data : PairedDataset
    d : int
        Number of canonical pairs, at most ``min(dx, dy)``.
    ridge : float or None
        Added to both covariance diagonals before the inverse square roots.
        ``None`` adds nothing but clamps eigenvalues from below at
        ``1e-8 * trace / dim``; ``0`` disables both and raises on a singular
        covariance.
    """
    x, y = data.x, data.y
    n, dx = x.shape
    dy = y.shape[1]
    if not 1 <= d <= min(dx, dy):
        raise ValueError(f"d={d} must be in [1, min(dx, dy)={min(dx, dy)}]")
    if n <= max(dx, dy):
        raise ValueError(f"need n > max(dx, dy) samples, got n={n}")

    mean_x, mean_y = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - mean_x, y - mean_y
    sx = sym(xc.T @ xc / n)
    sy = sym(yc.T @ yc / n)
    sxy = xc.T @ yc / n

    wx = _whitener(sx, ridge, "x")
    wy = _whitener(sy, ridge, "y")
    p, s, qt = np.linalg.svd(wx @ sxy @ wy)
    a = p[:, :d].T @ wx
    b = qt[:d] @ wy
    # deterministic sign: largest-magnitude loading of each x direction positive
    flip = np.sign(a[np.arange(d), np.abs(a).argmax(axis=1)])
    flip[flip == 0] = 1.0
    a *= flip[:, None]
    b *= flip[:, None]
    return LinearCcaModel(a, b, mean_x, mean_y, np.clip(s[:d], 0.0, None))


def project(model, x_new, y_new):
    """Canonical variates ``(U, V)`` of new samples."""
    return model.transform_x(x_new), model.transform_y(y_new)


def component_correlations(u, v):
    """Per-column sample correlation between ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim == 1:
        u, v = u[:, None], v[:, None]
    if u.shape != v.shape:
        raise ValueError(f"U and V shapes differ: {u.shape} vs {v.shape}")
    if u.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    uc = u - u.mean(axis=0)
    vc = v - v.mean(axis=0)
    su = np.sqrt((uc ** 2).sum(axis=0))
    sv = np.sqrt((vc ** 2).sum(axis=0))
    for j in range(u.shape[1]):
        for label, s in (("U", su), ("V", sv)):
            if not s[j] > 0:
                raise ValueError(f"column {j} of {label} has zero variance; correlation undefined")
    return (uc * vc).sum(axis=0) / (su * sv)


def normalized_objective(u, v):
    """Mean of the per-component correlations, in [-1, 1]."""
    return float(component_correlations(u, v).mean())
