"""Repeated train/eval/test experiments with hyperparameter selection on the eval split."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ace import AceModel, fit_ace, predict_ace
from .crcca import ConvergenceWarning, CrccaConfig, CrccaModel, evaluate, fit_crcca
from .dataset import SplitSpec, load_paired, split
from .linear_cca import LinearCcaModel, component_correlations, fit_linear_cca
from .synthgen import generate

METHODS = ("linear", "ace", "crcca")
THREADS_ENV = "CRCCA_NUM_THREADS"


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    Data come from ``x_path``/``y_path`` when both are set, otherwise from
    the synthetic generator with ``synth_n`` samples and ``synth_seed``.
    ``levels`` (CRCCA) and ``k`` (ACE) may list several values; the one with
    the best eval objective is reported on test.
    """

    method: str = "crcca"
    x_path: str | None = None
    y_path: str | None = None
    has_header: bool = False
    synth_n: int = 5000
    synth_seed: int = 0
    split: SplitSpec = field(default_factory=SplitSpec)
    dims: int = 2
    levels: tuple = (9,)
    k: tuple = (70,)
    max_iters: int = 100
    tol: float = 1e-5
    ridge: float | None = None
    reps: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if (self.x_path is None) != (self.y_path is None):
            raise ValueError("give both x_path and y_path, or neither for synthetic data")
        object.__setattr__(self, "levels", tuple(int(v) for v in np.atleast_1d(self.levels)))
        object.__setattr__(self, "k", tuple(int(v) for v in np.atleast_1d(self.k)))
        if isinstance(self.split, dict):
            object.__setattr__(self, "split", SplitSpec(**self.split))
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError("reps must be an integer >= 1")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        if self.synth_n < 3:
            raise ValueError("synth_n must be >= 3")
        if self.method == "crcca":
            if not self.levels or min(self.levels) < 2:
                raise ValueError("crcca needs levels >= 2")
            CrccaConfig(levels=self.levels[0], dims=self.dims, max_iters=self.max_iters,
                        tol=self.tol, ridge=self.ridge)
        if self.method == "ace" and (not self.k or min(self.k) < 1):
            raise ValueError("ace needs k >= 1")

    def to_dict(self):
        out = asdict(self)
        out["levels"] = list(self.levels)
        out["k"] = list(self.k)
        return out

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def candidates(self):
        if self.method == "crcca":
            return list(self.levels)
        if self.method == "ace":
            return list(self.k)
        return [None]

    @property
    def param_name(self):
        return {"crcca": "levels", "ace": "k", "linear": "dims"}[self.method]


def load_data(config):
    if config.x_path is not None:
        return load_paired(config.x_path, config.y_path, config.has_header)
    return generate(config.synth_n, config.synth_seed)


def data_hash(m):
    return hashlib.sha256(np.ascontiguousarray(m, dtype="<f8").tobytes()).hexdigest()


def fit_model(method, train, config, param=None):
    """Fit one model of ``method`` on ``train``; ``param`` is the level count or k."""
    if method == "linear":
        return fit_linear_cca(train, config.dims, ridge=config.ridge)
    if method == "ace":
        return fit_ace(train, d=config.dims, k=int(param), max_iters=config.max_iters)
    cfg = CrccaConfig(levels=int(param), dims=config.dims, max_iters=config.max_iters,
                      tol=config.tol, ridge=config.ridge)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return fit_crcca(train, cfg)


def evaluate_model(model, data):
    """Normalised objective, per-component correlations and (CRCCA only) entropies on ``data``."""
    if isinstance(model, CrccaModel):
        return evaluate(model, data).as_dict()
    if isinstance(model, LinearCcaModel):
        u, v = model.transform_x(data.x), model.transform_y(data.y)
    elif isinstance(model, AceModel):
        u, v = predict_ace(model, data.x, data.y)
    else:
        raise TypeError(f"cannot evaluate {type(model).__name__}")
    corr = component_correlations(u, v)
    return {"objective": float(corr.mean()), "correlations": [float(c) for c in corr],
            "distortion": float(((u - v) ** 2).sum(axis=1).mean())}


def _repetition(config, data, rep):
    t0 = time.perf_counter()
    seed = config.split.seed + rep
    train, eval_data, test = split(data, replace(config.split, seed=seed))
    curve = []
    best = None
    for param in config.candidates():
        model = fit_model(config.method, train, config, param)
        tr = evaluate_model(model, train)
        ev = evaluate_model(model, eval_data)
        row = {"rep": rep, config.param_name: config.dims if param is None else param,
               "train_objective": tr["objective"], "eval_objective": ev["objective"]}
        for key in ("entropy_u", "entropy_v", "gt_entropy_u", "gt_entropy_v"):
            if key in tr:
                row[key] = tr[key]
        curve.append(row)
        if best is None or ev["objective"] > best[0]:
            best = (ev["objective"], param, model, tr, ev)
    _, param, model, tr, ev = best
    return {
        "rep": rep,
        "split_seed": seed,
        "selected": {config.param_name: config.dims if param is None else param},
        "train": tr,
        "eval": ev,
        "test": evaluate_model(model, test),
        "curve": curve,
    }, time.perf_counter() - t0


def _summary(values):
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "min": float(v.min()), "max": float(v.max()), "n": int(v.size)}


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run(config, write=True):
    """Run ``config.reps`` repetitions and return the report dict.

    Repetition ``r`` splits with seed ``config.split.seed + r``. Failures are
    recorded under ``errors`` with their repetition index and the remaining
    repetitions still run. When ``config.out_dir`` is set and ``write`` is
    true, ``report.json`` and ``curve.csv`` are written there.
    Everything except the ``timing`` block is deterministic.
    """
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    data = load_data(config)

    def one(rep):
        try:
            return _repetition(config, data, rep)
        except Exception as exc:  # noqa: BLE001 - surfaced in the report
            return {"rep": rep, "error": f"{type(exc).__name__}: {exc}"}, 0.0

    threads = min(_threads(), config.reps)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(config.reps)))
    else:
        results = [one(r) for r in range(config.reps)]

    reps = [r for r, _ in results if "error" not in r]
    errors = [r for r, _ in results if "error" in r]
    aggregate = {}
    if reps:
        for part in ("train", "eval", "test"):
            aggregate[part] = _summary([r[part]["objective"] for r in reps])
        curve = {}
        for r in reps:
            for row in r["curve"]:
                curve.setdefault(row[config.param_name], []).append(row["eval_objective"])
        aggregate["eval_curve"] = [{config.param_name: p, **_summary(v)} for p, v in curve.items()]

    report = {
        "tool": "crcca",
        "version": __version__,
        "config": config.to_dict(),
        "data": {"n": data.n, "dx": data.dx, "dy": data.dy,
                 "sha256_x": data_hash(data.x), "sha256_y": data_hash(data.y)},
        "repetitions": reps,
        "aggregate": aggregate,
        "errors": errors,
        "timing": {"started": started, "wall_seconds": time.perf_counter() - t0,
                   "rep_seconds": [s for _, s in results]},
    }
    if write and config.out_dir is not None:
        write_report(report, config.out_dir)
    return report


def write_report(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    rows = [row for r in report["repetitions"] for row in r["curve"]]
    if rows:
        keys = list(dict.fromkeys(k for row in rows for k in row))
        with open(out / "curve.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows(rows)
    return out / "report.json"
