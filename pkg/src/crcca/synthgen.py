"""Synthetic paired data: uniform unit square mapped one-to-one onto the unit disk.

Each quarter of the square (split on ``x1``) is stretched to a unit square,
squeezed so that most of its mass sits in a thin strip, and bent onto a
quarter of the unit disk. The first quarter (``x1 < 1/4``) lands on the lower
left quarter disk. The other three use the same construction turned a further
quarter clockwise each time: both the input square (about its centre) and the
output disk (about the origin) are rotated, so every quarter disk carries its
dense strip at its clockwise end.

Samples are drawn with numpy's PCG64 generator (``np.random.default_rng``).
"""

from __future__ import annotations

import numpy as np

from .dataset import PairedDataset

QUADRANT_NAMES = ("blue", "cw90", "cw180", "cw270")

_CW = np.array([[0.0, 1.0], [-1.0, 0.0]])  # clockwise quarter turn, column-vector convention
_CENTER = np.array([0.5, 0.5])


def _turn(q):
    return np.linalg.matrix_power(_CW, q)


def square_to_quarter_disk(z):
    """Base construction on ``z`` in ``[0, 1]^2``: squeeze, shift to ``[-1, 0]^2``, bend."""
    z = np.array(z, dtype=float, copy=True)
    z1, z2 = z[:, 0], z[:, 1]
    z1[z2 > 0.2] *= 0.2
    z1 -= 1.0
    z2 -= 1.0
    return np.column_stack([z1 * np.sqrt(1.0 - 0.5 * z2 ** 2),
                            z2 * np.sqrt(1.0 - 0.5 * z1 ** 2)])


def quadrant_labels(x):
    """Quarter index 0..3 of each sample (``floor(4 x1)``, clipped)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.minimum(np.floor(4.0 * x[:, 0]), 3).astype(int)


def transform(x):
    """Deterministic map from ``[0, 1]^2`` samples to points in the unit disk."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    q = quadrant_labels(x)
    z = np.column_stack([4.0 * x[:, 0] - q, x[:, 1]])
    y = np.empty_like(z)
    for k in range(4):
        rows = q == k
        if not rows.any():
            continue
        r = _turn(k)
        zk = _CENTER + (z[rows] - _CENTER) @ r  # row form of r^-1 (z - c); r is orthogonal
        y[rows] = square_to_quarter_disk(zk) @ r.T
    return y


def generate(n, seed=0):
    """``n`` paired samples: ``x`` uniform on the unit square, ``y = transform(x)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.random.default_rng(seed).random((n, 2))
    return PairedDataset(x, transform(x), ("x1", "x2"), ("y1", "y2"))
