"""Independent reference computations used as test oracles.

Written without calling into the package so that agreement is meaningful.
"""

import math
from collections import Counter

import numpy as np


def erm_grid_mse(x, t, lower, upper, levels, n_candidates=401):
    """Smallest MSE over per-cell constant fits picked from a fine value grid (1-D x and t).

    Cells are assigned with plain floor arithmetic; each cell's best value is
    found by scanning ``n_candidates`` evenly spaced values over the target
    range, which is a brute-force search rather than a closed form.
    """
    width = (upper - lower) / levels
    cells = [min(max(int(math.floor((xi - lower) / width)), 0), levels - 1) for xi in x]
    candidates = np.linspace(min(t), max(t), n_candidates)
    total = 0.0
    for c in set(cells):
        vals = np.array([ti for ti, ci in zip(t, cells) if ci == c])
        total += min(((vals - v) ** 2).sum() for v in candidates)
    return total / len(x)


def histogram_entropy_bits(x, lower, upper, levels):
    """Plug-in entropy of a 2-D sample binned with numpy's histogram2d."""
    h, _, _ = np.histogram2d(x[:, 0], x[:, 1], bins=[levels, levels],
                             range=[[lower[0], upper[0]], [lower[1], upper[1]]])
    p = h.ravel() / h.sum()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def gale_sampson(counts):
    """Simple Good-Turing following Gale & Sampson's published recipe.

    ``counts`` is a list of positive integers (one per observed species).
    Returns ``(p0, {r: probability per species seen r times})``.
    """
    n = sum(counts)
    nr = Counter(counts)
    rs = sorted(nr)
    p0 = nr.get(1, 0) / n
    if len(rs) < 2:
        return p0, {r: (1 - p0) * r / sum(nr[s] * s for s in rs) for r in rs}

    z = {}
    for j, r in enumerate(rs):
        i = 0 if j == 0 else rs[j - 1]
        k = 2 * r - i if j == len(rs) - 1 else rs[j + 1]
        z[r] = 2.0 * nr[r] / (k - i)
    lx = [math.log(r) for r in rs]
    ly = [math.log(z[r]) for r in rs]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    b = sum((a - mx) * (c - my) for a, c in zip(lx, ly)) / sum((a - mx) ** 2 for a in lx)
    a = my - b * mx

    def s(r):
        return math.exp(a + b * math.log(r))

    rstar = {}
    turing_done = False
    for r in rs:
        y = (r + 1) * s(r + 1) / s(r)
        if not turing_done:
            if r + 1 not in nr:
                turing_done = True
            else:
                x = (r + 1) * nr[r + 1] / nr[r]
                sd = math.sqrt((r + 1) ** 2 * nr[r + 1] / nr[r] ** 2 * (1 + nr[r + 1] / nr[r]))
                if abs(x - y) <= 1.96 * sd:
                    turing_done = True
                else:
                    rstar[r] = x
                    continue
        rstar[r] = y
    norm = sum(nr[r] * rstar[r] for r in rs)
    return p0, {r: (1 - p0) * rstar[r] / norm for r in rs}


def knn_average(ref, query, values, k):
    """Mean of ``values`` over the k nearest rows of ``ref`` (ties by index), by full sort."""
    out = np.empty((len(query),) + values.shape[1:])
    for i, q in enumerate(query):
        d = ((ref - q) ** 2).sum(axis=1)
        order = sorted(range(len(ref)), key=lambda j: (d[j], j))[:k]
        out[i] = values[order].mean(axis=0)
    return out


def conditional_formula(marginal, source, support, eta, tau, mu):
    """q(u_k|v_j) by direct per-entry evaluation of the exponential form (scalar case)."""
    j_, k_ = len(source), len(support)
    q = np.zeros((j_, k_))
    for j in range(j_):
        w = [marginal[k] * math.exp(-eta * (support[k] - source[j]) ** 2 - tau * support[k]
                                    - mu * support[k] ** 2) for k in range(k_)]
        z = sum(w)
        for k in range(k_):
            q[j, k] = w[k] / z
    return q


def three_point_channel_minimum(prior, source, scale, eta, step=0.02, zoom=0.002, passes=3):
    """Minimum of I(V;U) [nats] + eta E(U-V)^2 over channels to {-scale, 0, scale}.

    Only channels with E[U] = 0 and E[U^2] = 1 are admissible. The masses on
    -scale and +scale of the two rows with the smallest prior weight are
    enumerated on a grid of spacing ``step``; the remaining row is fixed by
    the two moment equations (solving for the heaviest row keeps grid errors
    from being amplified). Each of ``passes``
    refinements enumerates a box of half-width equal to the previous spacing
    around the best point, starting at spacing ``zoom`` and shrinking it tenfold.
    Returns ``(refined minimum, coarse minimum, best channel)``.
    """
    order = np.argsort(prior, kind="stable")  # derived row last
    prior = np.asarray(prior, dtype=float)[order]
    source = np.asarray(source, dtype=float)[order]
    support = np.array([-scale, 0.0, scale])
    dist = (source[:, None] - support[None, :]) ** 2

    def evaluate(axes):
        a1, c1, a2, c2 = (g.ravel() for g in np.meshgrid(*axes, indexing="ij"))
        total = 1.0 / scale ** 2
        s3 = (total - prior[0] * (a1 + c1) - prior[1] * (a2 + c2)) / prior[2]
        d3 = -(prior[0] * (c1 - a1) + prior[1] * (c2 - a2)) / prior[2]
        a3, c3 = (s3 - d3) / 2, (s3 + d3) / 2
        q = np.stack([np.stack([a1, 1 - a1 - c1, c1], 1),
                      np.stack([a2, 1 - a2 - c2, c2], 1),
                      np.stack([a3, 1 - a3 - c3, c3], 1)], 1)
        q = q[np.all(q >= 0, axis=(1, 2))]
        pu = np.einsum("j,njk->nk", prior, q)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(q > 0, q * np.log(q / pu[:, None, :]), 0.0)
        obj = np.einsum("j,njk->n", prior, terms) + eta * np.einsum("j,njk,jk->n", prior, q, dist)
        i = int(np.argmin(obj))
        return float(obj[i]), q[i]

    coarse = np.arange(0.0, 1.0 + 1e-12, step)
    best, q = evaluate([coarse] * 4)
    fine, wide, q_best = best, step, q
    for _ in range(passes):
        center = [q_best[0, 0], q_best[0, 2], q_best[1, 0], q_best[1, 2]]
        axes = [np.arange(max(0.0, c - wide), min(1.0, c + wide) + 1e-12, zoom) for c in center]
        val, q = evaluate(axes)
        if val < fine:
            fine, q_best = val, q
        wide, zoom = zoom, zoom / 10
    q_out = np.empty_like(q_best)
    q_out[order] = q_best
    return fine, best, q_out
