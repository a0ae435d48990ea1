"""Plug-in entropy of cell occupancies, with simple Good-Turing smoothing.

The smoothing follows Gale & Sampson's "simple Good-Turing": Turing's
estimate ``(r+1) N_{r+1} / N_r`` is used for small counts until it stops
differing significantly from the log-log regression estimate, after which
the regression estimate is used for all larger counts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np


def plugin_entropy_bits(counts):
    """Shannon entropy (base 2) of the empirical distribution given by ``counts``."""
    c = np.asarray(list(counts.values()) if isinstance(counts, dict) else counts, dtype=float)
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    p = c / c.sum()
    return float(max(0.0, -(p * np.log2(p)).sum()))


@dataclass(frozen=True)
class GoodTuringEstimate:
    counts: dict  # symbol -> observed count
    n: int
    counts_of_counts: dict  # r -> N_r
    r_star: dict  # r -> smoothed count r*
    probabilities: dict  # symbol -> smoothed probability (observed symbols)
    missing_mass: float  # N_1 / n
    slope: float  # log-log regression slope; nan when not fitted, > -1 flags an unreliable fit
    intercept: float

    @property
    def observed_mass(self):
        return float(sum(self.probabilities.values()))


def _zr(rs, nr):
    z = np.empty(len(rs))
    for i, r in enumerate(rs):
        q = rs[i - 1] if i > 0 else 0
        t = rs[i + 1] if i + 1 < len(rs) else 2 * r - q
        z[i] = nr[i] / (0.5 * (t - q))
    return z


def good_turing(counts):
    """Simple Good-Turing estimate from a ``symbol -> count`` mapping.

    Symbols with count 0 are ignored. The missing mass is ``N_1 / n`` exactly;
    the observed symbols share the remaining ``1 - N_1 / n``.
    """
    counts = dict(counts)
    if any(c < 0 for c in counts.values()):
        raise ValueError("counts must be non-negative")
    counts = {s: int(c) for s, c in counts.items() if c > 0}
    n = sum(counts.values())
    if n < 1:
        raise ValueError("good_turing needs at least one observation")
    coc = dict(sorted(Counter(counts.values()).items()))
    rs = np.array(list(coc), dtype=float)
    nr = np.array(list(coc.values()), dtype=float)
    p0 = coc.get(1, 0) / n

    slope = intercept = float("nan")
    if len(rs) >= 2:
        slope, intercept = np.polyfit(np.log(rs), np.log(_zr(rs, nr)), 1)
        slope, intercept = float(slope), float(intercept)

        def smoothed(r):
            return np.exp(intercept + slope * np.log(r))

    r_star = {}
    use_regression = len(rs) < 2
    for r, n_r in coc.items():
        if len(rs) < 2:
            r_star[r] = float(r)
            continue
        y = (r + 1) * smoothed(r + 1) / smoothed(r)
        n_next = coc.get(r + 1, 0)
        if not use_regression and n_next == 0:
            use_regression = True
        if not use_regression:
            x = (r + 1) * n_next / n_r
            spread = 1.96 * np.sqrt((r + 1) ** 2 * (n_next / n_r ** 2) * (1 + n_next / n_r))
            if abs(x - y) <= spread:
                use_regression = True
            else:
                r_star[r] = float(x)
                continue
        r_star[r] = float(y)

    norm = sum(coc[r] * r_star[r] for r in coc)
    probs = {s: (1.0 - p0) * r_star[c] / norm for s, c in counts.items()}
    return GoodTuringEstimate(counts, n, coc, r_star, probs, p0, slope, intercept)


def entropy_bits(est):
    """``-sum p log2 p`` over the observed symbols; the missing mass is not included."""
    p = np.array([v for v in est.probabilities.values() if v > 0])
    if p.size == 0:
        return 0.0
    return float(max(0.0, -(p * np.log2(p)).sum()))


def good_turing_entropy(symbols):
    """Good-Turing plug-in entropy of a sequence of hashable symbols.

    Returns ``(entropy_bits, missing_mass)``.
    """
    est = good_turing(Counter(np.asarray(symbols).tolist()))
    return entropy_bits(est), est.missing_mass
