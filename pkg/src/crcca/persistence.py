"""JSON persistence for fitted models.

Floats are written with ``repr`` precision by the standard ``json`` module,
so a save/load roundtrip reproduces every array bit for bit. Files carry a
``format_version`` and a ``model_type``; both are checked on load.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .ace import AceModel
from .crcca import CrccaConfig, CrccaModel
from .linear_cca import LinearCcaModel
from .quantizer import LatticeGrid, QuantizedMap

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _arr(a):
    return np.asarray(a).tolist()


def _qmap_to_dict(q):
    return {
        "grid": {"lower": _arr(q.grid.lower), "upper": _arr(q.grid.upper), "levels": _arr(q.grid.levels)},
        "cell_ids": _arr(q.cell_ids),
        "counts": _arr(q.counts),
        "means": _arr(q.means),
        "fallback": _arr(q.fallback),
        "affine_a": _arr(q.affine_a),
        "affine_b": _arr(q.affine_b),
    }


def _qmap_from_dict(d):
    g = d["grid"]
    grid = LatticeGrid(np.array(g["lower"], dtype=float), np.array(g["upper"], dtype=float),
                       np.array(g["levels"], dtype=np.int64))
    means = np.array(d["means"], dtype=float).reshape(len(d["cell_ids"]), -1)
    return QuantizedMap(grid, np.array(d["cell_ids"], dtype=np.int64), np.array(d["counts"], dtype=np.int64),
                        means, np.array(d["fallback"], dtype=float),
                        np.array(d["affine_a"], dtype=float), np.array(d["affine_b"], dtype=float))


def model_to_dict(model):
    if isinstance(model, LinearCcaModel):
        body = {
            "projection_x": _arr(model.projection_x),
            "projection_y": _arr(model.projection_y),
            "mean_x": _arr(model.mean_x),
            "mean_y": _arr(model.mean_y),
            "correlations": _arr(model.correlations),
        }
        kind = "linear"
    elif isinstance(model, CrccaModel):
        body = {
            "map_u": _qmap_to_dict(model.map_u),
            "map_v": _qmap_to_dict(model.map_v),
            "align_u": _arr(model.align_u),
            "align_v": _arr(model.align_v),
            "objective_trace": list(model.objective_trace),
            "distortion_trace": list(model.distortion_trace),
            "entropy_u": model.entropy_u,
            "entropy_v": model.entropy_v,
            "converged": model.converged,
            "config": asdict(model.config),
        }
        kind = "crcca"
    elif isinstance(model, AceModel):
        body = {
            "x_train": _arr(model.x_train),
            "y_train": _arr(model.y_train),
            "u_train": _arr(model.u_train),
            "v_train": _arr(model.v_train),
            "k": model.k,
            "correlations": _arr(model.correlations),
            "traces": [list(t) for t in model.traces],
        }
        kind = "ace"
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {"format_version": FORMAT_VERSION, "model_type": kind, "model": body}


def model_from_dict(doc):
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError("not a model file: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc['format_version']!r} "
                               f"(this version reads {FORMAT_VERSION})")
    kind = doc.get("model_type")
    b = doc.get("model")
    try:
        if kind == "linear":
            return LinearCcaModel(*(np.array(b[k], dtype=float) for k in
                                    ("projection_x", "projection_y", "mean_x", "mean_y", "correlations")))
        if kind == "crcca":
            return CrccaModel(_qmap_from_dict(b["map_u"]), _qmap_from_dict(b["map_v"]),
                              np.array(b["align_u"], dtype=float), np.array(b["align_v"], dtype=float),
                              tuple(b["objective_trace"]), tuple(b["distortion_trace"]),
                              float(b["entropy_u"]), float(b["entropy_v"]), bool(b["converged"]),
                              CrccaConfig(**b["config"]))
        if kind == "ace":
            return AceModel(np.array(b["x_train"], dtype=float), np.array(b["y_train"], dtype=float),
                            np.array(b["u_train"], dtype=float), np.array(b["v_train"], dtype=float),
                            int(b["k"]), np.array(b["correlations"], dtype=float),
                            tuple(tuple(t) for t in b["traces"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} model: {exc}") from exc
    raise ModelFormatError(f"unknown model_type {kind!r}")


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model)))


def load_model(path):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: corrupt model file ({exc})") from exc
    return model_from_dict(doc)
