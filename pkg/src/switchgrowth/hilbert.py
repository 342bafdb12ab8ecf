"""Hilbert projective metric, Finsler seminorm, and contraction bounds.

The projective metric d(x, y) = log max_{i,j} (x_i y_j)/(x_j y_i) makes
every positive linear flow nonexpansive; when all off-diagonal entries of
the generators are strictly positive the flow contracts at an explicit
exponential rate.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import expm

from .errors import ConeDomainError, DimensionMismatchError, MissingRateError
from .matrices import ControlSet, MetzlerMatrix, vertices

__all__ = [
    "hilbert_distance",
    "finsler_seminorm",
    "payoff_lipschitz_bound",
    "contraction_rate_bound",
    "verify_contraction",
    "ContractionReport",
]

_TINY = 1e-300


def _check_cone(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < _TINY) or not np.all(np.isfinite(x)):
        raise ConeDomainError("vector leaves the open positive cone; "
                              "the projective metric is singular at the boundary")
    return x


def hilbert_distance(x, y) -> float:
    """d(x, y) = log max_{i,j} (x_i y_j)/(x_j y_i); zero iff proportional."""
    x = _check_cone(x)
    y = _check_cone(y)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"{x.shape} vs {y.shape}")
    r = np.log(x) - np.log(y)
    return float(r.max() - r.min())


def finsler_seminorm(h, x) -> float:
    """Tangent-space seminorm max_i h_i/x_i - min_j h_j/x_j at point x."""
    x = _check_cone(x)
    h = np.asarray(h, dtype=float)
    if x.shape != h.shape:
        raise DimensionMismatchError(f"{h.shape} vs {x.shape}")
    r = h / x
    return float(r.max() - r.min())


def _min_weighted_abs_dev(breakpoints: np.ndarray, weights: np.ndarray) -> float:
    """min_a sum_j w_j |d_j - a|, exact at a breakpoint (weighted median)."""
    vals = [np.sum(weights * np.abs(breakpoints - a)) for a in breakpoints]
    return float(min(vals))


def payoff_lipschitz_bound(q, m: MetzlerMatrix, samples: int, seed: int = 0) -> float:
    """Sampled estimate of the Lipschitz constant of x -> <q,mx>/<q,x>.

    The bound is sup over the cone of the inner minimum over a of
    <q, |m - a*id| x> / <q, x>.  The outer sup is approximated by the
    simplex vertices plus `samples` random simplex points (a sampled lower
    estimate of the true sup); the inner minimum is piecewise linear in a
    and solved exactly over the breakpoints {m_jj}.
    """
    q = _check_cone(q)
    a = m.entries
    n = m.n
    if q.shape != (n,):
        raise DimensionMismatchError(f"q has shape {q.shape}, matrix is {n}x{n}")
    off = np.abs(a).copy()
    np.fill_diagonal(off, 0.0)
    diag = np.diag(a)

    rng = np.random.default_rng(seed)
    pts = [np.eye(n)[k] for k in range(n)]
    if samples > 0:
        pts.extend(rng.dirichlet(np.ones(n), size=samples))

    best = 0.0
    for x in pts:
        qx = float(q @ x)
        const = float(q @ (off @ x))
        w = q * x  # weights of the |m_jj - a| terms
        val = (const + _min_weighted_abs_dev(diag, w)) / qx
        best = max(best, val)
    return best


def contraction_rate_bound(cs: ControlSet):
    """Explicit contraction rate mu = min_{i != j} 2 sqrt(m_ij m_ji).

    Requires every vertex matrix to have strictly positive off-diagonal
    entries; returns None otherwise.  For segments the per-pair minimum
    over alpha is taken at the endpoints.
    """
    mu = np.inf
    for v in vertices(cs):
        a = v.entries
        n = v.n
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if a[i, j] <= 0.0 or a[j, i] <= 0.0:
                    return None
                mu = min(mu, 2.0 * np.sqrt(a[i, j] * a[j, i]))
    return float(mu)


@dataclass(frozen=True)
class ContractionReport:
    mu: float
    t: float
    trials: int
    passes: int
    worst_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _random_bang_bang_flow(verts, t: float, rng: np.random.Generator) -> np.ndarray:
    """Resolvent of a random piecewise-constant vertex signal over [0, t].

    Exact per piece: the flow of a constant generator is its exponential.
    """
    n_pieces = int(rng.integers(1, 6))
    cuts = np.sort(rng.uniform(0.0, t, size=n_pieces - 1))
    bounds = np.concatenate(([0.0], cuts, [t]))
    flow = np.eye(verts[0].n)
    for k in range(n_pieces):
        dt = bounds[k + 1] - bounds[k]
        m = verts[int(rng.integers(len(verts)))]
        flow = expm(m.entries * dt) @ flow
    return flow


def verify_contraction(cs: ControlSet, t: float, trials: int,
                       seed: int = 0) -> ContractionReport:
    """Check d(R(t)x, R(t)y) <= exp(-mu t) d(x, y) + 1e-8 on random trials.

    Each trial draws a positive pair (x, y) and a random bang-bang signal;
    trial k uses the deterministic seed (seed, k).
    """
    mu = contraction_rate_bound(cs)
    if mu is None:
        raise MissingRateError("no explicit contraction rate: "
                               "some vertex off-diagonal entry vanishes")
    verts = vertices(cs)
    n = verts[0].n
    factor = np.exp(-mu * t)
    passes = 0
    worst = 0.0
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        x = rng.uniform(0.1, 1.0, size=n)
        y = rng.uniform(0.1, 1.0, size=n)
        flow = _random_bang_bang_flow(verts, t, rng) if t > 0 else np.eye(n)
        d0 = hilbert_distance(x, y)
        d1 = hilbert_distance(flow @ x, flow @ y)
        if d1 <= factor * d0 + 1e-8:
            passes += 1
        if d0 > 0:
            worst = max(worst, d1 / d0)
    return ContractionReport(mu=mu, t=t, trials=trials, passes=passes,
                             worst_ratio=worst)
