"""Paired-sample containers, CSV ingestion and train/eval/test splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._linalg import center_cov


class CsvFormatError(ValueError):
    """Raised for malformed numeric CSV input.

    ``row`` and ``column`` are 1-based positions in the file (the header,
    when present, is row 1).
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class PairedDataset:
    """Two row-aligned sample matrices: row i of ``x`` pairs with row i of ``y``."""

    x: np.ndarray
    y: np.ndarray
    x_names: tuple | None = None
    y_names: tuple | None = None

    def __post_init__(self):
        x = _as_matrix(self.x, "x")
        y = _as_matrix(self.y, "y")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x and y must have the same number of rows ({x.shape[0]} != {y.shape[0]})")
        if x.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        for name, m in (("x", x), ("y", y)):
            if not np.all(np.isfinite(m)):
                bad = np.argwhere(~np.isfinite(m))[0]
                raise ValueError(f"{name} has a non-finite entry at row {bad[0]}, column {bad[1]}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        for attr, m in (("x_names", x), ("y_names", y)):
            names = getattr(self, attr)
            if names is not None:
                names = tuple(str(s) for s in names)
                if len(names) != m.shape[1]:
                    raise ValueError(f"{attr} has {len(names)} entries for {m.shape[1]} columns")
                object.__setattr__(self, attr, names)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def dx(self):
        return self.x.shape[1]

    @property
    def dy(self):
        return self.y.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows)
        return PairedDataset(self.x[rows], self.y[rows], self.x_names, self.y_names)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.70
    eval: float = 0.15
    test: float = 0.15
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "eval", "test"):
            f = getattr(self, name)
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"{name} fraction {f} outside [0, 1]")
        total = self.train + self.eval + self.test
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"split fractions sum to {total!r}, expected 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def sizes(self, n):
        """Row counts (train, eval, test); fractions are rounded half-up, test takes the rest."""
        n_train = math.floor(self.train * n + 0.5)
        n_eval = math.floor(self.eval * n + 0.5)
        return n_train, n_eval, n - n_train - n_eval


def load_csv(path, has_header=False):
    """Read a comma-separated file of decimal reals into an ``n x d`` float matrix.

    Returns ``(matrix, header)`` where ``header`` is the list of column names or
    ``None`` when ``has_header`` is false.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    header = None
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if has_header and header is None:
                header = [c.strip() for c in record]
                width = len(header)
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise CsvFormatError(
                    f"{path}: row {lineno} has {len(record)} columns, expected {width}",
                    row=lineno)
            vals = []
            for col, cell in enumerate(record, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: cannot parse {cell!r} as a number at row {lineno}, column {col}",
                        row=lineno, column=col) from None
            rows.append(vals)
    if not rows:
        raise CsvFormatError(f"{path}: no rows")
    return np.array(rows, dtype=float), header


def save_csv(path, m, header=None):
    m = _as_matrix(m, "matrix")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in m:
            w.writerow([repr(float(v)) for v in row])


def load_paired(x_path, y_path, has_header=False):
    x, xh = load_csv(x_path, has_header)
    y, yh = load_csv(y_path, has_header)
    return PairedDataset(x, y, xh, yh)


def split(data, spec):
    """Seeded random partition of the rows into (train, eval, test).

    The same permutation is applied to ``x`` and ``y``; the result depends
    only on ``data.n`` and ``spec``.
    """
    n_train, n_eval, n_test = spec.sizes(data.n)
    if min(n_train, n_eval, n_test) < 1:
        raise ValueError(
            f"split of n={data.n} with {spec} leaves an empty part "
            f"(sizes {n_train}, {n_eval}, {n_test})")
    perm = np.random.default_rng(spec.seed).permutation(data.n)
    return (data.subset(perm[:n_train]),
            data.subset(perm[n_train:n_train + n_eval]),
            data.subset(perm[n_train + n_eval:]))


def column_moments(m):
    """Sample mean and covariance (normalised by n) of the columns of ``m``."""
    m = _as_matrix(m, "matrix")
    if m.shape[0] < 2:
        raise ValueError(f"need at least 2 rows for moments, got {m.shape[0]}")
    return center_cov(m)
