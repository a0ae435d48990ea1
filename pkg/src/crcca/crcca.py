"""Compressed-representation CCA fitted by alternating remote-source quantization.

Each half-step holds one view's representation fixed and replaces the other
by the whitened RSUQ fit onto it: cell means over a fixed uniform grid, then
``A u + B`` to restore zero mean and identity covariance. The grid resolution
(levels per dimension) bounds the representation entropy and acts as the
regulariser. After the loop an orthogonal rotation of each side diagonalises
the cross-covariance so that per-component correlations can be reported.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import good_turing, entropy_bits
from .linear_cca import component_correlations, fit_linear_cca
from .quantizer import (CellIndex, QuantizedMap, _map_from_index, build_grid,
                        predict, quantizer_entropy, whitening_affine)


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CrccaConfig:
    levels: int = 9
    dims: int = 2
    max_iters: int = 100
    tol: float = 1e-5
    seed: int = 0
    ridge: float | None = None

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 2:
            raise ValueError("levels must be an integer >= 2")
        if int(self.dims) != self.dims or self.dims < 1:
            raise ValueError("dims must be a positive integer")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class CrccaModel:
    """Fitted pair of quantized maps plus the final alignment rotations.

    ``objective_trace`` holds the normalised objective after every full
    iteration, followed by one last entry for the aligned representation.
    ``distortion_trace`` holds ``mean ||U - V||^2`` after every half-step.
    """

    map_u: QuantizedMap
    map_v: QuantizedMap
    align_u: np.ndarray
    align_v: np.ndarray
    objective_trace: tuple
    distortion_trace: tuple
    entropy_u: float
    entropy_v: float
    converged: bool
    config: CrccaConfig = field(default_factory=CrccaConfig)

    @property
    def d(self):
        return self.align_u.shape[0]

    @property
    def objective(self):
        return self.objective_trace[-1]

    def transform(self, x, y):
        return (predict(self.map_u, x) @ self.align_u.T,
                predict(self.map_v, y) @ self.align_v.T)


@dataclass(frozen=True)
class EvalReport:
    objective: float
    correlations: np.ndarray
    distortion: float
    entropy_u: float
    entropy_v: float
    gt_entropy_u: float
    gt_entropy_v: float
    missing_mass_u: float
    missing_mass_v: float

    def as_dict(self):
        out = dict(self.__dict__)
        out["correlations"] = [float(c) for c in self.correlations]
        return out


def _whitened_step(grid, index, targets):
    qmap = _map_from_index(grid, index, targets)
    raw = qmap.means[index.inverse]
    a, b = whitening_affine(raw)
    return replace(qmap, affine_a=a, affine_b=b), raw @ a.T + b


def _diag_objective(u, v):
    return float(np.einsum("ij,ij->", u, v) / (u.shape[0] * u.shape[1]))


def _distortion(u, v):
    return float(((u - v) ** 2).sum(axis=1).mean())


def alignment(u, v):
    """Orthogonal ``(R_u, R_v)`` such that ``(u @ R_u.T)`` and ``(v @ R_v.T)`` have diagonal cross-covariance.

    For whitened ``u`` and ``v`` this is linear CCA between them; the rotated
    diagonal sums to the nuclear norm of the cross-covariance, the largest
    value any pair of rotations can reach.
    """
    p, _, qt = np.linalg.svd(u.T @ v / u.shape[0])
    return p.T, qt


def fit_crcca(train, config=CrccaConfig(), callback=None):
    """Alternating RSUQ fit on ``train``.

    ``V`` starts from the whitened linear-CCA projection of ``y``. Each
    iteration refits ``U`` on ``x`` against ``V`` and then ``V`` on ``y``
    against ``U``; both are whitened on the training set. The loop stops when
    the relative change of the normalised objective drops below
    ``config.tol`` or after ``config.max_iters`` iterations.

    ``callback(iteration, side, u, v)``, if given, is called after every
    half-step with ``side`` in ``{"u", "v"}`` and the current training
    representations.
    """
    d = config.dims
    if d > min(train.dx, train.dy):
        raise ValueError(f"dims={d} exceeds min(dx, dy)={min(train.dx, train.dy)}")
    lin = fit_linear_cca(train, d, ridge=config.ridge)
    v = lin.transform_y(train.y)
    mean_v, cov_v = v.mean(axis=0), np.cov(v.T, bias=True).reshape(d, d)
    if np.abs(mean_v).max() > 1e-8 or np.abs(cov_v - np.eye(d)).max() > 1e-6:
        a, b = whitening_affine(v)
        v = v @ a.T + b

    grid_u = build_grid(train.x, config.levels)
    grid_v = build_grid(train.y, config.levels)
    index_u = CellIndex.build(grid_u, train.x)
    index_v = CellIndex.build(grid_v, train.y)

    objectives, distortions = [], []
    converged = False
    map_u = map_v = None
    prev = None
    for it in range(config.max_iters):
        map_u, u = _whitened_step(grid_u, index_u, v)
        distortions.append(_distortion(u, v))
        if callback is not None:
            callback(it, "u", u, v)
        map_v, v = _whitened_step(grid_v, index_v, u)
        distortions.append(_distortion(u, v))
        if callback is not None:
            callback(it, "v", u, v)
        obj = _diag_objective(u, v)
        objectives.append(obj)
        if prev is not None and abs(obj - prev) <= config.tol * abs(prev):
            converged = True
            break
        prev = obj
    if not converged:
        warnings.warn(f"CRCCA did not converge in {config.max_iters} iterations "
                      f"(last objectives {objectives[-3:]})", ConvergenceWarning, stacklevel=2)

    # recompute through the stored maps so evaluate() on train reproduces these numbers
    u = predict(map_u, train.x)
    v = predict(map_v, train.y)
    rot_u, rot_v = alignment(u, v)
    objectives.append(float(component_correlations(u @ rot_u.T, v @ rot_v.T).mean()))
    return CrccaModel(map_u, map_v, rot_u, rot_v, tuple(objectives), tuple(distortions),
                      quantizer_entropy(map_u, train.x), quantizer_entropy(map_v, train.y),
                      converged, config)


def _gt(grid, x):
    est = good_turing(dict(enumerate(np.unique(grid.assign(x), return_counts=True)[1])))
    return entropy_bits(est), est.missing_mass


def evaluate(model, data):
    """Objective, per-component correlations, distortion and entropies of ``model`` on ``data``."""
    if data.dx != model.map_u.grid.dim or data.dy != model.map_v.grid.dim:
        raise ValueError(f"data dims ({data.dx}, {data.dy}) do not match the model "
                         f"({model.map_u.grid.dim}, {model.map_v.grid.dim})")
    u, v = model.transform(data.x, data.y)
    corr = component_correlations(u, v)
    gt_u, m_u = _gt(model.map_u.grid, data.x)
    gt_v, m_v = _gt(model.map_v.grid, data.y)
    return EvalReport(float(corr.mean()), corr, _distortion(u, v),
                      quantizer_entropy(model.map_u, data.x), quantizer_entropy(model.map_v, data.y),
                      gt_u, gt_v, m_u, m_v)


@dataclass(frozen=True)
class SweepPoint:
    levels: int
    eval_objective: float
    train_objective: float
    entropy_u: float
    entropy_v: float
    gt_entropy_u: float
    gt_entropy_v: float
    error: str | None = None
    model: CrccaModel | None = field(default=None, repr=False, compare=False)


def sweep_levels(train, eval_data, levels_list, config=CrccaConfig()):
    """One fit per level count; failures are recorded on the point and the sweep continues."""
    levels_list = list(levels_list)
    if not levels_list:
        raise ValueError("levels_list is empty")
    nan = float("nan")
    points = []
    for n_levels in levels_list:
        try:
            cfg = replace(config, levels=int(n_levels))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                model = fit_crcca(train, cfg)
            rep = evaluate(model, eval_data)
            gt_u, _ = _gt(model.map_u.grid, train.x)
            gt_v, _ = _gt(model.map_v.grid, train.y)
            points.append(SweepPoint(int(n_levels), rep.objective, model.objective,
                                     model.entropy_u, model.entropy_v, gt_u, gt_v, None, model))
        except (ValueError, np.linalg.LinAlgError) as exc:
            points.append(SweepPoint(int(n_levels), nan, nan, nan, nan, nan, nan, str(exc)))
    return points
