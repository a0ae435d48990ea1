"""Small symmetric-matrix helpers shared by the CCA-style fits."""

import numpy as np


def sym(a):
    return 0.5 * (a + a.T)


def inv_sqrtm_psd(s, floor=0.0):
    """Symmetric inverse square root of a PSD matrix.

    Eigenvalues below ``floor`` are clamped up to ``floor`` before the
    inverse root is taken. With ``floor=0`` a non-positive eigenvalue raises
    ``np.linalg.LinAlgError``.
    """
    w, v = np.linalg.eigh(sym(np.asarray(s, dtype=float)))
    if floor > 0:
        w = np.maximum(w, floor)
    elif w.min() <= 0:
        raise np.linalg.LinAlgError(
            f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    return sym((v / np.sqrt(w)) @ v.T)


def center_cov(m):
    """Column mean and 1/n covariance."""
    mean = m.mean(axis=0)
    c = m - mean
    return mean, sym(c.T @ c / m.shape[0])
