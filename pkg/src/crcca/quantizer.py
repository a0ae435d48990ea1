"""Uniform lattice quantization and remote-source uniform quantization (RSUQ).

A :class:`QuantizedMap` partitions a source space with a fixed uniform grid
and maps every cell to the average of the *remote* targets observed in it.
:func:`affine_correct` then applies the whitening ``A u + B`` that enforces
zero mean and identity covariance on the training set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from ._linalg import center_cov, inv_sqrtm_psd
from .entropy import plugin_entropy_bits

_MAX_CELLS = np.iinfo(np.int64).max


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeGrid:
    lower: np.ndarray
    upper: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        levels = np.asarray(self.levels, dtype=np.int64).ravel()
        if not (lower.shape == upper.shape == levels.shape):
            raise ValueError("lower, upper and levels must have the same length")
        if np.any(levels < 1):
            raise ValueError("every dimension needs at least one level")
        if np.any(~(lower < upper)):
            raise ValueError("lower bound must be strictly below upper bound in every dimension")
        if self._count(levels) > _MAX_CELLS:
            raise ValueError("grid has too many cells for 64-bit cell ids")
        for name, v in (("lower", lower), ("upper", upper), ("levels", levels)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @staticmethod
    def _count(levels):
        total = 1
        for n in levels:
            total *= int(n)
        return total

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def width(self):
        return (self.upper - self.lower) / self.levels

    @property
    def n_cells(self):
        return self._count(self.levels)

    def cell_index(self, points):
        """Per-dimension integer cell coordinates, clamped to the grid."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f"points have {points.shape[1]} columns, grid has {self.dim}")
        idx = np.floor((points - self.lower) / self.width)
        return np.clip(idx, 0, self.levels - 1).astype(np.int64)

    def flatten(self, idx):
        """Row-major flattened id of per-dimension cell coordinates."""
        ids = np.zeros(idx.shape[0], dtype=np.int64)
        for j in range(self.dim):
            ids = ids * self.levels[j] + idx[:, j]
        return ids

    def unflatten(self, ids):
        ids = np.asarray(ids, dtype=np.int64).copy()
        idx = np.empty((ids.shape[0], self.dim), dtype=np.int64)
        for j in range(self.dim - 1, -1, -1):
            idx[:, j] = ids % self.levels[j]
            ids //= self.levels[j]
        return idx

    def assign(self, points):
        """Flattened cell id of every row of ``points``."""
        return self.flatten(self.cell_index(points))


def build_grid(samples, levels, bounds=None):
    """Uniform grid spanning the per-dimension range of ``samples``.

    The upper bound is widened by ``1e-9 * range`` so the maximum sample falls
    in the last cell. A dimension with zero range becomes a single cell (with a
    warning). ``bounds=(lower, upper)`` overrides the data range, which gives
    nested grids when ``levels`` is varied by integer factors.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 1:
        raise ValueError("need at least one sample")
    ds = samples.shape[1]
    levels = np.broadcast_to(np.asarray(levels, dtype=np.int64), (ds,)).copy()
    if np.any(levels < 1):
        raise ValueError("levels must be >= 1")
    if bounds is None:
        lower = samples.min(axis=0)
        upper = samples.max(axis=0)
    else:
        lower = np.asarray(bounds[0], dtype=float).copy()
        upper = np.asarray(bounds[1], dtype=float).copy()
    span = upper - lower
    flat = ~(span > 0)
    if np.any(flat):
        warnings.warn(
            f"dimensions {np.flatnonzero(flat).tolist()} have zero range; using a single cell",
            RuntimeWarning, stacklevel=2)
        levels[flat] = 1
        upper[flat] = lower[flat] + 1.0
        span = upper - lower
    if bounds is None:
        upper = upper + 1e-9 * span
    return LatticeGrid(lower, upper, levels)


def assign_cell(grid, point):
    """Flattened cell id of a single point (out-of-range coordinates clamp)."""
    return int(grid.assign(np.asarray(point, dtype=float).reshape(1, -1))[0])


@dataclass(frozen=True)
class CellIndex:
    """Occupied cells of a fixed sample under a grid (sorted ids + row inverse)."""

    ids: np.ndarray
    inverse: np.ndarray
    counts: np.ndarray

    @classmethod
    def build(cls, grid, x):
        ids, inverse, counts = np.unique(grid.assign(x), return_inverse=True, return_counts=True)
        return cls(ids, inverse.ravel(), counts)


def cell_means(index, targets):
    """Average of ``targets`` rows per occupied cell, shape ``(n_cells, d)``."""
    k = index.ids.shape[0]
    sums = np.column_stack([
        np.bincount(index.inverse, weights=targets[:, j], minlength=k)
        for j in range(targets.shape[1])
    ])
    return sums / index.counts[:, None]


@dataclass(frozen=True)
class QuantizedMap:
    """Cell-average map over a lattice grid with an affine output correction.

    ``means`` holds the uncorrected cell averages; the corrected output of an
    occupied cell is ``A @ mean + B`` (see :attr:`fits`).
    """

    grid: LatticeGrid
    cell_ids: np.ndarray  # sorted flattened ids of occupied cells
    counts: np.ndarray
    means: np.ndarray  # (n_occupied, d)
    fallback: np.ndarray  # global target mean
    affine_a: np.ndarray
    affine_b: np.ndarray

    @property
    def d(self):
        return self.means.shape[1]

    @property
    def fits(self):
        return self.means @ self.affine_a.T + self.affine_b

    def _occupied_coords(self):
        return self.grid.unflatten(self.cell_ids)

    def lookup(self, x):
        """Row index into ``cell_ids`` for every point; unseen cells go to the nearest occupied one."""
        ids = self.grid.assign(x)
        pos = np.searchsorted(self.cell_ids, ids)
        pos = np.minimum(pos, self.cell_ids.shape[0] - 1)
        hit = self.cell_ids[pos] == ids
        if not np.all(hit):
            missing, inv = np.unique(ids[~hit], return_inverse=True)
            pos[~hit] = self._nearest_occupied(missing)[inv.ravel()]
        return pos

    def _nearest_occupied(self, missing_ids):
        occ = self._occupied_coords().astype(float)
        query = self.grid.unflatten(missing_ids).astype(float)
        tree = cKDTree(occ)
        dist, _ = tree.query(query, k=1)
        out = np.empty(missing_ids.shape[0], dtype=np.int64)
        # integer lattice: distinct distances differ by far more than 1e-9
        for i, (q, r) in enumerate(zip(query, dist)):
            out[i] = min(tree.query_ball_point(q, r + 1e-9))
        return out

    def raw_predict(self, x):
        return self.means[self.lookup(x)]

    def predict(self, x):
        return predict(self, x)


def fit_rsuq(x, targets, grid):
    """Remote-source uniform quantizer: each cell maps to the mean of its targets.

    These cell means are the empirical minimiser of ``sum ||U(x_i) - v_i||^2``
    over all maps that are constant on the grid cells. The returned map has
    identity correction.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if x.shape[0] == 0:
        raise ValueError("cannot fit a quantizer on zero samples")
    if x.shape[0] != targets.shape[0]:
        raise ValueError(f"x has {x.shape[0]} rows but targets have {targets.shape[0]}")
    index = CellIndex.build(grid, x)
    return _map_from_index(grid, index, targets)


def _map_from_index(grid, index, targets):
    d = targets.shape[1]
    return QuantizedMap(grid, index.ids, index.counts, cell_means(index, targets),
                        targets.mean(axis=0), np.eye(d), np.zeros(d))


def whitening_affine(outputs):
    """``(A, B)`` with ``A`` the symmetric inverse root of the output covariance, ``B = -A mean``."""
    mean, cov = center_cov(outputs)
    w = np.linalg.eigvalsh(cov)
    if w.min() <= 1e-10 * max(w.max(), 1e-300):
        raise RankDeficientError(
            f"quantizer outputs have a rank-deficient covariance (eigenvalues {np.round(w, 12).tolist()}); "
            "too few distinct cell fits for the output dimension, use more levels or a smaller d")
    a = inv_sqrtm_psd(cov)
    return a, -a @ mean


def affine_correct(qmap, x_train):
    """Whiten the map's outputs on ``x_train`` (zero mean, identity covariance).

    The correction composes with any existing one, so applying it twice is a
    no-op up to rounding.
    """
    current = predict(qmap, x_train)
    a, b = whitening_affine(current)
    return replace(qmap, affine_a=a @ qmap.affine_a, affine_b=a @ qmap.affine_b + b)


def predict(qmap, x_new):
    """Corrected fit of each row's cell (nearest occupied cell for unseen cells)."""
    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    return qmap.raw_predict(x_new) @ qmap.affine_a.T + qmap.affine_b


def cell_counts(grid, x):
    _, counts = np.unique(grid.assign(x), return_counts=True)
    return counts


def quantizer_entropy(qmap, x):
    """Plug-in Shannon entropy (bits) of the cell occupancy of ``x`` under the map's grid."""
    grid = qmap.grid if isinstance(qmap, QuantizedMap) else qmap
    return plugin_entropy_bits(cell_counts(grid, x))
