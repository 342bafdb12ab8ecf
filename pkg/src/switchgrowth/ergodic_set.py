"""Ergodic set of a segment family: the region enclosed by the two
extremal trajectories.

The set is traced by two constant-control trajectories: one starting at
the Perron point of the low endpoint and flowing with the high control,
the other starting at the Perron point of the high endpoint and flowing
with the low control.  For n = 2 the set is the interval between the two
Perron points; for n = 3 the two curves bound a closed region in the
triangle.  Membership, positive invariance, and attraction are checked
numerically with exact piecewise-exponential flows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .dynamics import ControlSignal, Trajectory, integrate_projected
from .errors import DimensionMismatchError, HorizonTooShortError, OutOfRangeError
from .matrices import Segment, at, spectral

__all__ = [
    "ErgodicBoundary",
    "InvarianceReport",
    "trace_boundary",
    "contains",
    "distance_to_set",
    "invariance_check",
]

_DEGENERATE_TOL = 1e-6


@dataclass(frozen=True)
class ErgodicBoundary:
    cs: Segment
    curve_from_low: Trajectory   # starts at z_low, constant high control
    curve_from_high: Trajectory  # starts at z_high, constant low control
    closed_polyline: np.ndarray  # (E, n); n=2: the two interval endpoints
    z_low: np.ndarray
    z_high: np.ndarray
    delta_boundary: float        # min coordinate along both curves
    pruned: bool                 # True if self-intersections were removed
    degenerate: bool             # True when a == A (single Perron point)


def _perron_point(cs: Segment, alpha: float) -> np.ndarray:
    return spectral(at(cs, alpha)).e1


def _truncate(states: np.ndarray) -> np.ndarray:
    """Cut the trajectory once successive points advance less than 1e-9."""
    steps = np.abs(np.diff(states, axis=0)).sum(axis=1)
    stalled = np.nonzero(steps < 1e-9)[0]
    end = stalled[0] + 1 if stalled.size else states.shape[0]
    return states[:end]


def _resample_arclength(states: np.ndarray, target: int) -> np.ndarray:
    """Thin a curve to ~target points uniformly spaced in l1 arclength.

    Time-uniform thinning leaves wide chords on fast arcs; arclength
    spacing keeps the polyline within O((L/target)^2) of the true curve.
    """
    if states.shape[0] <= target:
        return states
    s = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(states, axis=0)).sum(axis=1))))
    idx = np.searchsorted(s, np.linspace(0.0, s[-1], target))
    idx = np.unique(np.clip(idx, 0, states.shape[0] - 1))
    return states[idx]


def _prune_polyline(poly: np.ndarray):
    """Replace a self-intersecting boundary loop by its outer hull."""
    from shapely.geometry import LinearRing, Polygon

    if LinearRing(poly[:, :2]).is_simple:
        return poly, False
    fixed = Polygon(poly[:, :2]).buffer(0)
    if fixed.geom_type == "MultiPolygon":
        fixed = max(fixed.geoms, key=lambda g: g.area)
    xy = np.array(fixed.exterior.coords)[:-1]
    out = np.column_stack([xy, 1.0 - xy.sum(axis=1)])
    return out, True


def trace_boundary(cs: Segment, horizon: float, dt: float) -> ErgodicBoundary:
    """Integrate the two extremal constant-control trajectories and close
    the region between them."""
    z_low = _perron_point(cs, cs.a)
    z_high = _perron_point(cs, cs.A)
    degenerate = abs(cs.A - cs.a) == 0.0

    sig_high = ControlSignal(((horizon, float(cs.A)),))
    sig_low = ControlSignal(((horizon, float(cs.a)),))
    curve_low = integrate_projected(z_low, cs, sig_high, dt)
    curve_high = integrate_projected(z_high, cs, sig_low, dt)

    if not degenerate:
        err_low = np.abs(curve_low.states[-1] - z_high).sum()
        err_high = np.abs(curve_high.states[-1] - z_low).sum()
        if max(err_low, err_high) > 1e-6:
            raise HorizonTooShortError(
                f"extremal curves end {max(err_low, err_high):.3e} away from "
                "their limit points (tolerance 1e-6); increase the horizon")

    delta = float(min(curve_low.states.min(), curve_high.states.min()))
    pruned = False
    if degenerate:
        polyline = z_low[None, :].copy()
    elif cs.n == 2:
        pts = np.vstack([z_low, z_high])
        polyline = pts[np.argsort(pts[:, 1])]
    else:
        lo = _resample_arclength(_truncate(curve_low.states), 1500)
        hi = _resample_arclength(_truncate(curve_high.states), 1500)
        polyline = np.vstack([lo, hi])
        polyline, pruned = _prune_polyline(polyline)
    polyline.setflags(write=False)
    return ErgodicBoundary(cs=cs, curve_from_low=curve_low,
                           curve_from_high=curve_high,
                           closed_polyline=polyline, z_low=z_low,
                           z_high=z_high, delta_boundary=delta,
                           pruned=pruned, degenerate=degenerate)


def _parity(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray-crossing test of (M, 2) points against an (E, 2) loop."""
    x = points[:, 0:1]
    y = points[:, 1:2]
    x1, y1 = poly[:, 0], poly[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        crossing = ((y1 <= y) != (y2 <= y)) & (x < xint)
    return crossing.sum(axis=1) % 2 == 1


def _contains_many(b: ErgodicBoundary, ys: np.ndarray) -> np.ndarray:
    if b.degenerate:
        return np.abs(ys - b.z_low).sum(axis=1) <= _DEGENERATE_TOL
    if b.cs.n == 2:
        lo, hi = b.closed_polyline[0, 1], b.closed_polyline[1, 1]
        return (ys[:, 1] >= lo - 1e-12) & (ys[:, 1] <= hi + 1e-12)
    return _parity(ys[:, :2], b.closed_polyline[:, :2])


def contains(b: ErgodicBoundary, y) -> bool:
    """Membership of a simplex point in the (closed) ergodic set.

    Points within 1e-8 of the boundary polyline count as members (the set
    is closed; the ray-parity test alone is ambiguous on the boundary).
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (b.cs.n,):
        raise DimensionMismatchError(f"point shape {y.shape}, set is n={b.cs.n}")
    if _contains_many(b, y[None, :])[0]:
        return True
    if b.degenerate or b.cs.n == 2:
        return False
    return bool(np.abs(y - b.closed_polyline).sum(axis=1).min() <= 1e-8)


def distance_to_set(b: ErgodicBoundary, ys: np.ndarray) -> np.ndarray:
    """l1 distance to the set: zero inside, min distance to the boundary
    polyline outside."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if b.degenerate:
        return np.abs(ys - b.z_low).sum(axis=1)
    if b.cs.n == 2:
        lo, hi = b.closed_polyline[0, 1], b.closed_polyline[1, 1]
        t = ys[:, 1]
        return 2.0 * np.maximum(0.0, np.maximum(lo - t, t - hi))
    d = np.abs(ys[:, None, :] - b.closed_polyline[None, :, :]).sum(axis=2).min(axis=1)
    d[_contains_many(b, ys)] = 0.0
    return d


@dataclass(frozen=True)
class InvarianceReport:
    trials: int
    inside_pass: int
    attract_pass: int
    delta_boundary: float
    pruned: bool

    def to_dict(self) -> dict:
        return {"trials": self.trials, "inside_pass": self.inside_pass,
                "attract_pass": self.attract_pass,
                "delta_boundary": self.delta_boundary, "pruned": self.pruned}


def _random_signal_states(verts, y0: np.ndarray, horizon: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Projected states of a random bang-bang signal, sampled every ~0.5
    time units, using exact per-piece matrix exponentials."""
    n_pieces = int(rng.integers(3, 9))
    weights = rng.uniform(0.5, 1.5, size=n_pieces)
    durations = horizon * weights / weights.sum()
    x = y0.copy()
    out = [x.copy()]
    for d in durations:
        m = verts[int(rng.integers(len(verts)))].entries
        nsub = max(1, int(np.ceil(d / 0.5)))
        p = expm(m * (d / nsub))
        for _ in range(nsub):
            x = p @ x
            x = x / x.sum()
            out.append(x.copy())
    return np.array(out)


def _sample_start(b: ErgodicBoundary, rng: np.random.Generator,
                  inside: bool) -> np.ndarray:
    n = b.cs.n
    if b.degenerate and inside:
        return b.z_low.copy()
    for _ in range(10_000):
        y = rng.dirichlet(np.ones(n))
        if contains(b, y) == inside:
            return y
    raise OutOfRangeError(
        "could not sample a start point with the requested membership")


def invariance_check(b: ErgodicBoundary, cs: Segment, trials: int,
                     horizon: float, seed: int = 0) -> InvarianceReport:
    """Positive invariance and attraction under random bang-bang signals.

    Inside trials start in the set and must stay within 1e-3 (l1) of it at
    every sampled state; attraction trials start outside and must end
    within 1e-2 of it.  Trial k uses the deterministic seed (seed, k).
    """
    from .matrices import vertices

    verts = vertices(cs)
    inside_pass = 0
    attract_pass = 0
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        y_in = _sample_start(b, rng, inside=True)
        states = _random_signal_states(verts, y_in, horizon, rng)
        if distance_to_set(b, states).max() <= 1e-3:
            inside_pass += 1
        y_out = _sample_start(b, rng, inside=False)
        states = _random_signal_states(verts, y_out, horizon, rng)
        if distance_to_set(b, states[-1]).item() <= 1e-2:
            attract_pass += 1
    return InvarianceReport(trials=trials, inside_pass=inside_pass,
                            attract_pass=attract_pass,
                            delta_boundary=b.delta_boundary, pruned=b.pruned)
