"""Arimoto-Blahut iterations for rate-distortion with second-order constraints.

Finite supports only: a source ``v_1..v_J`` with prior ``p(v)`` and a fixed
reproduction grid ``u_1..u_K``. For a distortion multiplier ``eta`` the
stationary channel has the form

    q(u_k | v_j)  ~  p(u_k) exp(-eta ||u_k - v_j||^2 - tau.u_k - u_k' mu u_k)

normalised over ``k`` for every ``j``, with ``p(u) = sum_j p(v_j) q(u | v_j)``
and the multipliers ``tau`` (vector) and ``mu`` (matrix) chosen so that
``E[U] = 0`` and ``E[U U'] = I``. Root finding for the multipliers supports a
diagonal ``mu`` only; off-diagonal second moments are left unconstrained.

:func:`blahut_arimoto` runs the plain alternating updates. They converge
slowly when reproduction points carry vanishing mass, so :func:`solve_channel`
defaults to an interior-point solve of the same stationarity conditions
(:func:`interior_point`). Either way the result can be checked with
:func:`fixed_point_residual`, which applies one plain update and does not
depend on how the channel was found.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax


class InfeasibleConstraintError(ValueError):
    pass


class ChannelError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DiscreteChannel:
    source: np.ndarray  # (J, m) source points
    prior: np.ndarray  # (J,)
    support: np.ndarray  # (K, m) reproduction points
    cond: np.ndarray  # (J, K); row j is q(. | v_j)
    marginal: np.ndarray  # (K,) p(u)
    eta: float
    tau: np.ndarray  # (m,)
    mu: np.ndarray  # (m, m)

    @property
    def dim(self):
        return self.source.shape[1]


def _as_points(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def make_channel(source, prior, support, eta=1.0, marginal=None, tau=None, mu=None):
    """Channel with a uniform (or given) ``p(u)`` and the matching conditional."""
    source = _as_points(source)
    support = _as_points(support)
    prior = np.asarray(prior, dtype=float).ravel()
    m = source.shape[1]
    if support.shape[1] != m:
        raise ValueError("source and support must have the same dimension")
    if prior.shape[0] != source.shape[0]:
        raise ValueError("prior length must match the number of source points")
    if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-10:
        raise ValueError("prior must be a probability vector")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    k = support.shape[0]
    marginal = np.full(k, 1.0 / k) if marginal is None else np.asarray(marginal, dtype=float)
    tau = np.zeros(m) if tau is None else np.asarray(tau, dtype=float).reshape(m)
    mu = np.zeros((m, m)) if mu is None else np.asarray(mu, dtype=float).reshape(m, m)
    ch = DiscreteChannel(source, prior, support, np.full((source.shape[0], k), 1.0 / k),
                         marginal, float(eta), tau, mu)
    return conditional_update(ch)


def default_support(source, prior, points=None):
    """Uniform grid over the source range widened by one prior standard deviation per side.

    ``points`` is the grid size per dimension (default: the number of source
    points but at least 41 for scalar sources, 21 per dimension otherwise).
    """
    source = _as_points(source)
    prior = np.asarray(prior, dtype=float)
    j, m = source.shape
    if points is None:
        points = max(j, 41) if m == 1 else 21
    mean = prior @ source
    std = np.sqrt(prior @ (source - mean) ** 2)
    axes = [np.linspace(source[:, i].min() - std[i], source[:, i].max() + std[i], points)
            for i in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def sq_distances(ch):
    return ((ch.source[:, None, :] - ch.support[None, :, :]) ** 2).sum(axis=2)


def _penalty(ch, tau=None, mu=None):
    tau = ch.tau if tau is None else tau
    mu = ch.mu if mu is None else mu
    u = ch.support
    return u @ tau + np.einsum("ki,ij,kj->k", u, mu, u)


def _conditional(ch, tau=None, mu=None):
    with np.errstate(divide="ignore", over="ignore"):
        logits = (np.log(ch.marginal)[None, :] - ch.eta * sq_distances(ch)
                  - _penalty(ch, tau, mu)[None, :])
    norm = logsumexp(logits, axis=1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise ChannelError("conditional row vanished after exponentiation; "
                           "p(u) has no mass or eta is too large for the support")
    return np.exp(logits - norm)


def conditional_update(ch):
    """``q(u|v) ~ p(u) exp(-eta ||u - v||^2 - tau.u - u' mu u)``, normalised per source point."""
    return replace(ch, cond=_conditional(ch))


def marginal_update(ch):
    """``p(u) = sum_j p(v_j) q(u | v_j)``."""
    return replace(ch, marginal=ch.prior @ ch.cond)


def moments(ch, cond=None):
    """``(E[U], E[U U'])`` under the joint ``p(v) q(u|v)``."""
    w = ch.prior @ (ch.cond if cond is None else cond)
    u = ch.support
    return w @ u, (u * w[:, None]).T @ u


def distortion(ch):
    return float(ch.prior @ (ch.cond * sq_distances(ch)).sum(axis=1))


def mutual_information_bits(ch):
    """``I(V; U)`` in bits, as ``sum p(v) q(u|v) log q(u|v) / p_q(u)`` with ``p_q`` the induced marginal."""
    q = ch.cond
    pu = ch.prior @ q
    mask = q > 0
    ratio = np.where(mask, q, 1.0) / np.where(mask, pu[None, :], 1.0)
    return float(max(0.0, (ch.prior[:, None] * q * np.log2(ratio)).sum()))


def mutual_information_bits_entropy_form(ch):
    """``H(U) - H(U | V)`` in bits."""
    q = ch.cond
    pu = ch.prior @ q

    def h(p):
        p = p[p > 0]
        return -(p * np.log2(p)).sum()

    return float(h(pu) - sum(pj * h(row) for pj, row in zip(ch.prior, q)))


def fixed_point_residual(ch):
    """Max-abs change of ``(cond, marginal)`` under one conditional + marginal update."""
    nxt = marginal_update(conditional_update(ch))
    return float(max(np.abs(nxt.cond - ch.cond).max(), np.abs(nxt.marginal - ch.marginal).max()))


def _root(f, x0, label, limit=1e12):
    """Root of a non-increasing scalar function, bracketed by expanding steps from ``x0``."""
    lo = hi = x0
    f_lo = f_hi = f(x0)
    step = 1.0
    while f_lo < 0:
        lo, step = lo - step, step * 2
        if abs(lo) > limit:
            raise InfeasibleConstraintError(f"cannot satisfy the {label} constraint on this support")
        f_lo = f(lo)
    step = 1.0
    while f_hi > 0:
        hi, step = hi + step, step * 2
        if abs(hi) > limit:
            raise InfeasibleConstraintError(f"cannot satisfy the {label} constraint on this support")
        f_hi = f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _check_feasible(ch, target_mean, target_second):
    live = ch.support[ch.marginal > 0]
    for i in range(ch.dim):
        col = live[:, i]
        for label, vals, t in (("mean", col, target_mean[i]), ("second-moment", col ** 2, target_second[i])):
            if np.ptp(vals) == 0:
                if abs(vals[0] - t) > 1e-12:
                    raise InfeasibleConstraintError(
                        f"{label} target {t} unreachable: coordinate {i} of the support is constant")
            elif not vals.min() < t < vals.max():
                raise InfeasibleConstraintError(
                    f"{label} target {t} outside the range reachable on coordinate {i} of the support")


def solve_multipliers(ch, target_mean=0.0, target_second_moment=1.0, tol=1e-12, max_rounds=2000):
    """Set ``tau`` and diagonal ``mu`` so the conditional has the target moments.

    Holds ``p(u)`` and ``eta`` fixed. Each round root-finds every ``tau_i`` so
    that ``E[U_i]`` hits its target, then every ``mu_ii`` for ``E[U_i^2]``;
    rounds repeat until all targets hold within ``tol``. Each moment is
    non-increasing in its own multiplier. Returns the channel with the new
    multipliers and the matching conditional.
    """
    m = ch.dim
    if np.any(ch.mu != np.diag(np.diag(ch.mu))):
        raise NotImplementedError("multiplier search supports a diagonal mu only")
    t1 = np.broadcast_to(np.asarray(target_mean, dtype=float), (m,))
    t2 = np.broadcast_to(np.asarray(target_second_moment, dtype=float), (m,))
    _check_feasible(ch, t1, t2)
    tau = ch.tau.copy()
    mu = ch.mu.copy()

    def gaps(tau, mu):
        mean, second = moments(ch, _conditional(ch, tau, mu))
        return mean - t1, np.diag(second) - t2

    for _ in range(max_rounds):
        g1, g2 = gaps(tau, mu)
        if max(np.abs(g1).max(), np.abs(g2).max()) <= tol:
            break
        for i in range(m):
            if abs(gaps(tau, mu)[0][i]) > tol:
                def f(t, i=i):
                    tt = tau.copy()
                    tt[i] = t
                    return gaps(tt, mu)[0][i]
                tau[i] = _root(f, tau[i], "mean")
        for i in range(m):
            if abs(gaps(tau, mu)[1][i]) > tol:
                def g(s, i=i):
                    mm = mu.copy()
                    mm[i, i] = s
                    return gaps(tau, mm)[1][i]
                mu[i, i] = _root(g, mu[i, i], "second-moment")
    else:
        raise InfeasibleConstraintError(
            f"moment constraints not met after {max_rounds} rounds (gaps {g1}, {g2})")
    return replace(ch, tau=tau, mu=mu, cond=_conditional(ch, tau, mu))


def blahut_arimoto(ch, constrained=True, max_sweeps=1000, tol=1e-10, **targets):
    """Plain alternating updates: (multipliers +) conditional, then marginal.

    Returns ``(channel, sweeps, residual)`` where ``residual`` is the
    max-abs change of the last sweep.
    """
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        nxt = solve_multipliers(ch, **targets) if constrained else conditional_update(ch)
        nxt = marginal_update(nxt)
        residual = float(max(np.abs(nxt.cond - ch.cond).max(),
                             np.abs(nxt.marginal - ch.marginal).max()))
        ch = nxt
        if residual <= tol:
            break
    return ch, sweep, residual


def interior_point(ch, constrained=True, target_mean=0.0, target_second_moment=1.0,
                   tol=1e-14, max_steps=300):
    """Stationary channel for the current ``eta`` by a primal-dual interior-point method.

    Works on the convex dual of the stationarity conditions. With
    ``a_j = -log Z_j`` (log inverse normaliser per source point) and
    ``theta = (tau, diag mu)`` the constraints are

        g_k = log sum_j p(v_j) exp(a_j - eta ||u_k - v_j||^2) - theta.phi_k <= 0

    for every reproduction point, ``phi_k = (u_k, u_k^2)``, and ``p(u_k)`` is
    the multiplier of ``g_k``. Stationarity in ``a`` is the marginal equation,
    stationarity in ``theta`` the moment equations, and complementarity
    ``p(u_k) g_k = 0`` picks the support. Unconstrained runs keep ``tau`` and
    ``mu`` at their current values.

    Much faster than the plain alternating updates when some reproduction
    points carry vanishing mass. Returns the channel after one conditional
    and marginal update at the solution.
    """
    j, k = ch.cond.shape
    m = ch.dim
    base = np.log(ch.prior)[:, None] - ch.eta * sq_distances(ch)
    if constrained:
        if np.any(ch.mu != np.diag(np.diag(ch.mu))):
            raise NotImplementedError("multiplier search supports a diagonal mu only")
        t1 = np.broadcast_to(np.asarray(target_mean, dtype=float), (m,))
        t2 = np.broadcast_to(np.asarray(target_second_moment, dtype=float), (m,))
        _check_feasible(replace(ch, marginal=np.ones(k)), t1, t2)
        phi = np.hstack([ch.support, ch.support ** 2])
        target = np.concatenate([t1, t2])
        fixed = np.zeros(k)
    else:
        phi = np.zeros((k, 0))
        target = np.zeros(0)
        fixed = _penalty(ch)
    n = j + phi.shape[1]

    def constraints(x):
        logits = x[:j, None] + base
        return logsumexp(logits, axis=0) - phi @ x[j:] - fixed, softmax(logits, axis=0)

    def residual(x, p, sigma):
        g, s = constraints(x)
        r = np.concatenate([ch.prior - s @ p, phi.T @ p - target, -p * g - sigma])
        return r, g, s

    # start from the normalisers of a uniform p(u), shifted to strict feasibility
    x = np.zeros(n)
    x[:j] = -logsumexp(-ch.eta * sq_distances(ch) - fixed[None, :], axis=1) + np.log(k)
    x[:j] -= constraints(x)[0].max() + 1.0
    p = np.full(k, 1.0 / k)
    centering = 0.1
    for _ in range(max_steps):
        g, _ = constraints(x)
        gap = float(p @ -g) / k
        r, g, s = residual(x, p, centering * gap)
        if max(np.abs(r[:n]).max(), gap) <= tol:
            break
        sp = s * p
        jac = np.zeros((n + k, n + k))
        jac[:j, :j] = sp @ s.T - np.diag(sp.sum(axis=1))
        jac[:j, n:] = -s
        jac[j:n, n:] = phi.T
        jac[n:, :n] = -p[:, None] * np.vstack([s, -phi.T]).T
        jac[n:, n:] = np.diag(-g)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        dx, dp = step[:n], step[n:]
        alpha = 1.0
        shrink = dp < 0
        if shrink.any():
            alpha = min(1.0, 0.99 * float(np.min(-p[shrink] / dp[shrink])))
        norm = np.linalg.norm(r)
        while alpha > 1e-16:
            r_new, g_new, _ = residual(x + alpha * dx, p + alpha * dp, centering * gap)
            if np.all(g_new < 0) and np.linalg.norm(r_new) <= (1 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
        x, p = x + alpha * dx, p + alpha * dp
        # short steps mean the iterate left the central path: recentre more
        centering = min(0.5, max(1e-3, (1.0 - alpha) ** 3))
    else:
        raise ChannelError(f"interior-point solve did not converge in {max_steps} steps")

    if constrained:
        ch = replace(ch, tau=x[j:j + m].copy(), mu=np.diag(x[j + m:]))
    ch = replace(ch, marginal=p / p.sum())
    return marginal_update(conditional_update(ch))


def solve_channel(source, prior, support, eta, constrained=True, method="interior", sweeps=10000):
    """Stationary channel for a fixed ``eta``.

    ``method="interior"`` uses :func:`interior_point`; ``"sweeps"`` runs the
    plain alternating updates of :func:`blahut_arimoto` for up to ``sweeps``
    iterations.
    """
    ch = make_channel(source, prior, support, eta)
    if method == "interior":
        return interior_point(ch, constrained=constrained)
    if method == "sweeps":
        return blahut_arimoto(ch, constrained=constrained, max_sweeps=sweeps, tol=1e-12)[0]
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class RdSolution:
    channel: DiscreteChannel
    rate_bits: float
    distortion: float
    mean: np.ndarray
    second_moment: np.ndarray
    eta_trace: tuple  # (eta, distortion) for every evaluated multiplier
    converged: bool

    def as_dict(self):
        return {
            "eta": self.channel.eta,
            "rate_bits": self.rate_bits,
            "distortion": self.distortion,
            "mean": self.mean.tolist(),
            "second_moment": self.second_moment.tolist(),
            "tau": self.channel.tau.tolist(),
            "mu": self.channel.mu.tolist(),
            "marginal": self.channel.marginal.tolist(),
            "eta_trace": [list(t) for t in self.eta_trace],
            "converged": self.converged,
        }


def _independent_channel(source, prior, support, constrained):
    """Rate-zero channel: ``q(u|v) = p(u)`` with the moment constraints met (eta = 0)."""
    ch = make_channel(source, prior, support, eta=0.0)
    if constrained:
        ch = solve_multipliers(ch)
        ch = replace(ch, marginal=ch.prior @ ch.cond)
    else:
        # best constant reproduction: the support point closest to the source mean
        d = ch.prior @ sq_distances(ch)
        p = np.zeros(support.shape[0])
        p[np.argmin(d)] = 1.0
        ch = replace(ch, marginal=p)
    return replace(ch, cond=np.tile(ch.marginal, (ch.source.shape[0], 1)))


def solve_rd(prior, source, support=None, max_distortion=1.0, constrained=True,
             tol=1e-6, eta_max=1e6, max_evals=200, method="interior"):
    """Minimum ``I(V; U)`` subject to ``E||U - V||^2 <= max_distortion`` (and moment constraints).

    Bisects on ``eta`` (distortion is non-increasing in it), solving the
    stationary channel at every trial value, until the achieved distortion
    lies in ``[max_distortion - tol, max_distortion]``.
    """
    source = _as_points(source)
    support = default_support(source, prior) if support is None else _as_points(support)
    if not max_distortion > 0:
        raise ValueError("distortion bound must be positive")
    trace = []

    def finish(ch, converged=True):
        mean, second = moments(ch)
        return RdSolution(ch, mutual_information_bits(ch), distortion(ch), mean, second,
                          tuple(trace), converged)

    base = _independent_channel(source, prior, support, constrained)
    d0 = distortion(base)
    trace.append((0.0, d0))
    if d0 <= max_distortion:
        return finish(base)

    lo, hi = 0.0, 1.0
    best = None
    evals = 0
    prev = d0
    while True:
        try:
            ch = solve_channel(source, prior, support, hi, constrained, method)
        except (ChannelError, np.linalg.LinAlgError) as exc:
            raise ValueError(f"distortion {max_distortion} is below the minimum reachable on this "
                             f"support (solver failed at eta={hi:g}: {exc})") from exc
        d = distortion(ch)
        trace.append((hi, d))
        evals += 1
        if d <= max_distortion:
            best = ch
            break
        lo = hi
        hi *= 2.0
        # a plateau above the bound means the support cannot get closer
        if hi > eta_max or prev - d <= 1e-12 * max(1.0, d):
            raise ValueError(f"distortion {max_distortion} is below the minimum reachable on this "
                             f"support (about {d:.6g} at eta={lo:g})")
        prev = d
    while max_distortion - distortion(best) > tol:
        if evals >= max_evals or hi - lo <= 1e-12 * hi:
            warnings.warn("eta bisection stopped before reaching the distortion tolerance",
                          RuntimeWarning, stacklevel=2)
            return finish(best, converged=False)
        mid = 0.5 * (lo + hi)
        ch = solve_channel(source, prior, support, mid, constrained, method)
        d = distortion(ch)
        trace.append((mid, d))
        evals += 1
        if d <= max_distortion:
            hi, best = mid, ch
        else:
            lo = mid
    return finish(best)
