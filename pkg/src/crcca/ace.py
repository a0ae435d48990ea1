"""Alternating conditional expectations (ACE) with k-nearest-neighbour smoothing.

Conditional expectations are estimated by averaging over the ``k`` nearest
training points (Euclidean, exact search, the point itself included).
Components are extracted one at a time; later components are kept
uncorrelated with earlier ones by Gram-Schmidt on the training values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .linear_cca import fit_linear_cca


class DegenerateVarianceError(ValueError):
    pass


def knn_indices(ref, query, k):
    """Indices of the ``k`` nearest rows of ``ref`` for each row of ``query``.

    Distance ties at the k-th neighbour are broken by the lower ``ref`` index.
    """
    ref = np.atleast_2d(ref)
    query = np.atleast_2d(query)
    n = ref.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in [1, {n}]")
    tree = cKDTree(ref)
    extra = min(k + 1, n)
    dist, idx = tree.query(query, k=extra)
    dist = dist.reshape(query.shape[0], extra)
    idx = idx.reshape(query.shape[0], extra)
    out = idx[:, :k].copy()
    if extra > k:
        tied = np.flatnonzero(dist[:, k - 1] == dist[:, k])
        for i in tied:
            d2 = ((ref - query[i]) ** 2).sum(axis=1)
            out[i] = np.lexsort((np.arange(n), d2))[:k]
    return out


def _standardize(w, label):
    w = w - w.mean()
    s = np.sqrt((w ** 2).mean())
    if not s > 1e-12:
        raise DegenerateVarianceError(
            f"{label}: k-NN estimate has (near) zero variance; correlation undefined")
    return w / s


def _deflate(w, basis):
    for b in basis:
        w = w - (w @ b / w.shape[0]) * b
    return w


@dataclass(frozen=True)
class AceModel:
    x_train: np.ndarray
    y_train: np.ndarray
    u_train: np.ndarray  # (n, d) fitted phi values
    v_train: np.ndarray  # (n, d) fitted psi values
    k: int
    correlations: np.ndarray
    traces: tuple  # per component: correlation after every half-step

    @property
    def d(self):
        return self.u_train.shape[1]

    @property
    def objective(self):
        return float(np.mean(self.correlations))


def fit_ace(train, d=2, k=70, max_iters=100, tol=1e-6):
    """Fit ``d`` pairs of ACE transforms on ``train``.

    Each component starts from the corresponding whitened linear-CCA variate
    of ``y`` and alternates ``phi <- std(E[psi | x])``, ``psi <- std(E[phi | y])``
    until the correlation changes by less than ``tol``.
    """
    x, y = train.x, train.y
    n = train.n
    if k >= n:
        raise ValueError(f"k={k} must be smaller than n={n}")
    if not 1 <= d <= min(train.dx, train.dy):
        raise ValueError(f"d={d} must be in [1, {min(train.dx, train.dy)}]")
    nbr_x = knn_indices(x, x, k)
    nbr_y = knn_indices(y, y, k)
    start = fit_linear_cca(train, d).transform_y(y)

    us, vs, corrs, traces = [], [], [], []
    for c in range(d):
        v = _standardize(_deflate(start[:, c], vs), f"psi_{c}")
        trace = []
        prev = None
        for _ in range(max_iters):
            u = _standardize(_deflate(v[nbr_x].mean(axis=1), us), f"phi_{c}")
            trace.append(float(u @ v / n))
            v = _standardize(_deflate(u[nbr_y].mean(axis=1), vs), f"psi_{c}")
            r = float(u @ v / n)
            trace.append(r)
            if prev is not None and abs(r - prev) < tol:
                break
            prev = r
        us.append(u)
        vs.append(v)
        corrs.append(r)
        traces.append(tuple(trace))
    return AceModel(x.copy(), y.copy(), np.column_stack(us), np.column_stack(vs), k,
                    np.array(corrs), tuple(traces))


def predict_ace(model, x_new, y_new):
    """Out-of-sample transforms: mean of the fitted values over the k nearest training points."""
    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    y_new = np.atleast_2d(np.asarray(y_new, dtype=float))
    if x_new.shape[1] != model.x_train.shape[1] or y_new.shape[1] != model.y_train.shape[1]:
        raise ValueError("input dimensions do not match the fitted model")
    u = model.u_train[knn_indices(model.x_train, x_new, model.k)].mean(axis=1)
    v = model.v_train[knn_indices(model.y_train, y_new, model.k)].mean(axis=1)
    return u, v
