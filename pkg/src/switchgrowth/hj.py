"""Ergodic Hamilton-Jacobi solver on the simplex.

Semi-Lagrangian relative value iteration for
    -lambda + max_m ( l(y, m) + <Du(y), b(y, m)> ) = 0,  y in S.
The update is w <- max_m [ dt*l(y, m) + Interp(w, y + dt*b(y, m)) ], with
the anchor-node value subtracted each sweep; the per-sweep shift converges
to lambda*dt and the centered iterate to the eigenfunction u (up to its
additive constant).  Grids cover n = 2 (interval) and n = 3 (triangulated
barycentric lattice with piecewise-linear interpolation).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .criteria import find_alpha_star
from .dynamics import Trajectory, as_simplex
from .errors import CFLViolationError, DimensionMismatchError, NoConvergenceError, OutOfRangeError
from .matrices import ControlSet, Segment, spectral, vertices

__all__ = [
    "SimplexGrid",
    "HJSolution",
    "ValueOperator",
    "solve_ergodic",
    "solve_discounted",
    "feedback_trajectory",
    "feedback_growth_rates",
    "Attractor",
    "classify_attractor",
    "SlackReport",
    "lambda_vs_constant",
    "dump_solution",
]


@dataclass(frozen=True)
class SimplexGrid:
    """Regular grid on the simplex: n=2 interval nodes or n=3 barycentric
    lattice (i, j, k)/N with i + j + k = N."""

    n: int
    resolution: int
    nodes: np.ndarray  # (M, n) simplex points

    @staticmethod
    def build(n: int, resolution: int) -> "SimplexGrid":
        if n not in (2, 3):
            raise DimensionMismatchError("grid supports n in {2, 3} only")
        if resolution < 2:
            raise OutOfRangeError("resolution must be >= 2")
        N = resolution
        if n == 2:
            theta = np.arange(N + 1) / N
            nodes = np.column_stack([1.0 - theta, theta])
        else:
            pts = []
            for i in range(N + 1):
                for j in range(N + 1 - i):
                    pts.append((i / N, j / N, (N - i - j) / N))
            nodes = np.array(pts)
        nodes.setflags(write=False)
        return SimplexGrid(n=n, resolution=N, nodes=nodes)

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    def anchor_index(self) -> int:
        bary = np.full(self.n, 1.0 / self.n)
        return int(np.argmin(np.abs(self.nodes - bary).sum(axis=1)))

    def interpolation(self, points: np.ndarray):
        """Cell indices and barycentric weights for arbitrary simplex points.

        Returns (idx, wts) of shape (M, n): value(p) = sum_c wts[:, c] *
        w[idx[:, c]].  Points are clamped/renormalized onto S first; on
        shared cell boundaries the lexicographically lower cell wins.
        """
        p = np.maximum(np.asarray(points, dtype=float), 0.0)
        p = p / p.sum(axis=1, keepdims=True)
        N = self.resolution
        if self.n == 2:
            pos = np.clip(p[:, 1] * N, 0.0, N)
            i0 = np.minimum(pos.astype(int), N - 1)
            frac = pos - i0
            idx = np.column_stack([i0, i0 + 1])
            wts = np.column_stack([1.0 - frac, frac])
            return idx, wts

        a = np.clip(p[:, 0] * N, 0.0, N)
        b = np.clip(p[:, 1] * N, 0.0, N)
        i = np.minimum(a.astype(int), N - 1)
        j = np.minimum(b.astype(int), N - 1)
        f = a - i
        g = b - j
        # offset[i] = index of node (i, 0) in row-major (i, j) enumeration
        rows = np.arange(N + 2)
        offset = rows * (N + 1) - rows * (rows - 1) // 2

        def node(ii, jj):
            # clamp to the row length: an out-of-range stencil corner can
            # only occur with zero weight (points exactly on the j-edge)
            return offset[ii] + np.minimum(jj, N - ii)

        upper = (f + g > 1.0) & (i + j <= N - 2)
        lo = ~upper
        idx = np.empty((p.shape[0], 3), dtype=int)
        wts = np.empty((p.shape[0], 3))
        idx[lo, 0] = node(i[lo], j[lo])
        idx[lo, 1] = node(i[lo] + 1, j[lo])
        idx[lo, 2] = node(i[lo], j[lo] + 1)
        wts[lo, 0] = np.maximum(1.0 - f[lo] - g[lo], 0.0)
        wts[lo, 1] = f[lo]
        wts[lo, 2] = g[lo]
        idx[upper, 0] = node(i[upper] + 1, j[upper] + 1)
        idx[upper, 1] = node(i[upper] + 1, j[upper])
        idx[upper, 2] = node(i[upper], j[upper] + 1)
        wts[upper, 0] = f[upper] + g[upper] - 1.0
        wts[upper, 1] = 1.0 - g[upper]
        wts[upper, 2] = 1.0 - f[upper]
        wts /= wts.sum(axis=1, keepdims=True)
        return idx, wts


class ValueOperator:
    """One sweep of the semi-Lagrangian scheme, precomputed per vertex.

    Departure points are fixed (y + dt*b(y, m) per node and vertex), so the
    interpolation stencils are built once.  The operator is monotone
    (order-preserving) and additively homogeneous by construction.
    """

    def __init__(self, cs: ControlSet, grid: SimplexGrid, dt: float):
        verts = vertices(cs)
        if verts[0].n != grid.n:
            raise DimensionMismatchError(
                f"control set dimension {verts[0].n} != grid dimension {grid.n}")
        nodes = grid.nodes
        max_speed = 1e-300
        self.ell = []
        self.idx = []
        self.wts = []
        for m in verts:
            my = nodes @ m.entries.T
            ell = my.sum(axis=1)
            b = my - ell[:, None] * nodes
            max_speed = max(max_speed, float(np.abs(b).sum(axis=1).max()))
            depart = nodes + dt * b
            idx, wts = grid.interpolation(depart)
            self.ell.append(dt * ell)
            self.idx.append(idx)
            self.wts.append(wts)
        if dt > grid.spacing / max_speed + 1e-15:
            raise CFLViolationError(
                f"dt={dt:.3e} violates CFL bound {grid.spacing / max_speed:.3e}")
        self.dt = dt
        self.grid = grid
        self.n_vertices = len(verts)

    @staticmethod
    def cfl_dt(cs: ControlSet, grid: SimplexGrid, safety: float = 0.9) -> float:
        max_speed = 1e-300
        for m in vertices(cs):
            my = grid.nodes @ m.entries.T
            b = my - my.sum(axis=1)[:, None] * grid.nodes
            max_speed = max(max_speed, float(np.abs(b).sum(axis=1).max()))
        return safety * grid.spacing / max_speed

    def apply(self, w: np.ndarray, discount: float = 1.0):
        """max_m [ dt*l + discount * Interp(w, departure) ] with its argmax."""
        cand = np.empty((self.n_vertices, w.shape[0]))
        for k in range(self.n_vertices):
            interp = np.einsum("mc,mc->m", self.wts[k], w[self.idx[k]])
            cand[k] = self.ell[k] + discount * interp
        return cand.max(axis=0), cand.argmax(axis=0)


@dataclass(frozen=True)
class HJSolution:
    grid: SimplexGrid
    control_set: ControlSet
    u: np.ndarray
    lam: float
    feedback: np.ndarray
    iterations: int
    residual: float
    dt: float
    tol: float
    perron_slack: float = field(default=float("nan"))


def solve_ergodic(cs: ControlSet, grid: SimplexGrid, dt_cfl: float | None = None,
                  tol: float = 1e-9, max_iter: int = 500_000) -> HJSolution:
    """Relative value iteration until the centered sweep change drops below
    tol; lambda is the final anchor shift divided by dt."""
    dt = ValueOperator.cfl_dt(cs, grid) if dt_cfl is None else dt_cfl
    op = ValueOperator(cs, grid, dt)
    anchor = grid.anchor_index()
    w = np.zeros(grid.nodes.shape[0])
    residual = np.inf
    for it in range(1, max_iter + 1):
        w_new, argmax = op.apply(w)
        shift = w_new[anchor]
        w_new -= shift
        residual = float(np.max(np.abs(w_new - w)))
        w = w_new
        if residual <= tol:
            lam = shift / dt
            slack = lam - _max_constant_rate(cs)
            return HJSolution(grid=grid, control_set=cs, u=w, lam=float(lam),
                              feedback=argmax, iterations=it, residual=residual,
                              dt=dt, tol=tol, perron_slack=float(slack))
    raise NoConvergenceError(max_iter, residual)


def solve_discounted(cs: ControlSet, grid: SimplexGrid, eps: float,
                     dt_cfl: float | None = None, tol: float = 1e-10,
                     max_iter: int = 500_000) -> float:
    """Discounted cross-check: lambda ~ eps * u_eps at the anchor node."""
    dt = ValueOperator.cfl_dt(cs, grid) if dt_cfl is None else dt_cfl
    op = ValueOperator(cs, grid, dt)
    anchor = grid.anchor_index()
    discount = 1.0 - eps * dt
    u = np.zeros(grid.nodes.shape[0])
    change = np.inf
    for _ in range(max_iter):
        u_new, _ = op.apply(u, discount=discount)
        change = float(np.max(np.abs(u_new - u)))
        u = u_new
        if change <= tol * max(1.0, abs(u[anchor])) * eps:
            return float(eps * u[anchor])
    raise NoConvergenceError(max_iter, change)


def _max_constant_rate(cs: ControlSet) -> float:
    if isinstance(cs, Segment):
        return find_alpha_star(cs).value
    return max(spectral(m).lambda1 for m in vertices(cs))


def feedback_trajectory(sol: HJSolution, y0, horizon: float, dt: float,
                        record_every: int = 1) -> Trajectory:
    """Closed-loop integration of ydot = b(y, m*(y)).

    The control is re-evaluated each step from the feedback of the node
    carrying the largest interpolation weight at the current position and
    held constant within the step.  The running payoff integral is recorded
    as logmass.
    """
    mats = [m.entries for m in vertices(sol.control_set)]
    grid = sol.grid
    y = as_simplex(y0)
    nsteps = int(np.ceil(horizon / dt - 1e-12))
    h = horizon / nsteps
    times = [0.0]
    states = [y.copy()]
    logmass = [0.0]
    accum = 0.0
    t = 0.0
    for step in range(1, nsteps + 1):
        idx, wts = grid.interpolation(y[None, :])
        node = idx[0, int(np.argmax(wts[0]))]
        m = mats[int(sol.feedback[node])]

        def f(z):
            mz = m @ z
            return mz - mz.sum() * z

        l_prev = float(np.sum(m @ y))
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = np.maximum(y, 0.0)
        y = y / y.sum()
        accum += 0.5 * h * (l_prev + float(np.sum(m @ y)))
        t = step * h
        if step % record_every == 0 or step == nsteps:
            times.append(t)
            states.append(y.copy())
            logmass.append(accum)
    return Trajectory(np.array(times), np.array(states), np.array(logmass))


def feedback_growth_rates(sol: HJSolution, y0s, horizon: float,
                          dt: float) -> np.ndarray:
    """Time-averaged payoff of closed-loop trajectories from several starts.

    Vectorized counterpart of feedback_trajectory for growth-rate estimates
    only: all starts advance in lockstep with per-row feedback controls.
    """
    mats = np.array([m.entries for m in vertices(sol.control_set)])
    grid = sol.grid
    ys = np.array([as_simplex(y) for y in y0s])
    nsteps = int(np.ceil(horizon / dt - 1e-12))
    h = horizon / nsteps
    accum = np.zeros(ys.shape[0])

    def f(a, z):
        mz = np.einsum("mij,mj->mi", a, z)
        return mz - mz.sum(axis=1, keepdims=True) * z

    for _ in range(nsteps):
        idx, wts = grid.interpolation(ys)
        node = idx[np.arange(ys.shape[0]), np.argmax(wts, axis=1)]
        a = mats[sol.feedback[node]]
        l_prev = np.einsum("mij,mj->m", a, ys)
        k1 = f(a, ys)
        k2 = f(a, ys + 0.5 * h * k1)
        k3 = f(a, ys + 0.5 * h * k2)
        k4 = f(a, ys + h * k3)
        ys = ys + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys = np.maximum(ys, 0.0)
        ys = ys / ys.sum(axis=1, keepdims=True)
        accum += 0.5 * h * (l_prev + np.einsum("mij,mj->m", a, ys))
    return accum / (nsteps * h)


@dataclass(frozen=True)
class Attractor:
    kind: str  # "fixed-point" | "limit-cycle" | "undetermined"
    point: np.ndarray | None = None
    period: float | None = None


def classify_attractor(traj: Trajectory, transient: float, tol_fix: float,
                       tol_cycle: float) -> Attractor:
    """Classify the post-transient behaviour of a trajectory.

    Fixed point: displacement within the final window of length
    transient/4 stays below tol_fix.  Limit cycle: the first post-transient
    state recurs within tol_cycle (l1) at stable intervals (coefficient of
    variation <= 0.05) while the mean speed stays above tol_fix/transient.
    """
    times = traj.times
    if times[-1] < 2.0 * transient:
        return Attractor(kind="undetermined")
    post = times >= transient
    t_post = times[post]
    y_post = traj.states[post]

    window = transient / 4.0
    tail = t_post >= t_post[-1] - window
    disp = np.abs(y_post[tail] - y_post[tail][0]).sum(axis=1).max()
    if disp <= tol_fix:
        return Attractor(kind="fixed-point", point=y_post[-1].copy())

    ref = y_post[0]
    d = np.abs(y_post - ref).sum(axis=1)
    speeds = np.abs(np.diff(y_post, axis=0)).sum(axis=1) / np.diff(t_post)
    if speeds.mean() <= tol_fix / transient:
        return Attractor(kind="undetermined")

    close = d < tol_cycle
    runs = []
    in_run = False
    for k, flag in enumerate(close):
        if flag and not in_run:
            start = k
            in_run = True
        elif not flag and in_run:
            runs.append((start, k))
            in_run = False
    if in_run:
        runs.append((start, len(close)))
    rec_times = []
    for s, e in runs:
        kmin = s + int(np.argmin(d[s:e]))
        rec_times.append(t_post[kmin])
    if rec_times and rec_times[0] - t_post[0] < 1e-9:
        rec_times = rec_times[1:]  # the reference point itself
    if len(rec_times) < 3:
        return Attractor(kind="undetermined")
    intervals = np.diff(rec_times)
    cv = intervals.std() / intervals.mean()
    if cv <= 0.05:
        return Attractor(kind="limit-cycle", period=float(intervals.mean()))
    return Attractor(kind="undetermined")


@dataclass(frozen=True)
class SlackReport:
    slack: float
    grid_error: float
    certified: bool
    lam: float
    max_constant: float

    def to_dict(self) -> dict:
        return {"slack": self.slack, "grid_error": self.grid_error,
                "certified": self.certified, "lambda": self.lam,
                "max_constant": self.max_constant}


def lambda_vs_constant(sol: HJSolution, cs: ControlSet) -> SlackReport:
    """lambda(M) minus the best constant-control rate, with an N-vs-N/2
    grid-error estimate; slack beyond 3x the estimate certifies strict
    improvement by switching."""
    coarse_grid = SimplexGrid.build(sol.grid.n, max(2, sol.grid.resolution // 2))
    coarse = solve_ergodic(cs, coarse_grid, tol=sol.tol)
    best_const = _max_constant_rate(cs)
    slack = sol.lam - best_const
    grid_error = abs(sol.lam - coarse.lam)
    return SlackReport(slack=float(slack), grid_error=float(grid_error),
                       certified=bool(slack > 3.0 * grid_error),
                       lam=sol.lam, max_constant=float(best_const))


def dump_solution(sol: HJSolution, csv_path, json_path=None) -> dict:
    """JSON header {n, N, lambda, iterations, residual} and per-node CSV
    `node_coords..., u, feedback_vertex`."""
    header = {"n": sol.grid.n, "N": sol.grid.resolution, "lambda": sol.lam,
              "iterations": sol.iterations, "residual": sol.residual}
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y{k + 1}" for k in range(sol.grid.n)]
                        + ["u", "feedback_vertex"])
        for node, u, fb in zip(sol.grid.nodes, sol.u, sol.feedback):
            writer.writerow([repr(c) for c in node] + [repr(float(u)), int(fb)])
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(header, fh, indent=2)
    return header
