"""Controlled linear flow in the cone and its projection onto the simplex.

The ambient dynamics is xdot = m(t) x.  Dividing by the total mass <1, x>
projects it onto the simplex: ydot = b(y, m) = m y - l(y, m) y with payoff
l(y, m) = <1, m y>.  Since d/dt log<1, x> = l along trajectories, growth
rates are computed as time-averages of the payoff, which avoids overflow
on long horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonPositiveStateError,
    StepTooLargeError,
)
from .matrices import ControlSet, MetzlerMatrix, Segment, at, vertices

__all__ = [
    "as_simplex",
    "ControlSignal",
    "Trajectory",
    "payoff",
    "field",
    "integrate_ambient",
    "integrate_projected",
    "growth_rate",
]


def as_simplex(coords) -> np.ndarray:
    """Clamp tiny negatives and renormalize onto the simplex."""
    y = np.array(coords, dtype=float)
    if y.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {y.shape}")
    if np.any(y < -1e-12) or not np.all(np.isfinite(y)):
        raise NonPositiveStateError(f"coordinates {y} are not on the simplex")
    y = np.maximum(y, 0.0)
    s = y.sum()
    if s <= 0:
        raise NonPositiveStateError("zero vector cannot be projected")
    return y / s


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control: (duration, control) pieces.

    A control is a vertex index (int) or a segment parameter alpha (float).
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple((float(d), c) for d, c in self.pieces)
        for d, _ in pieces:
            if not (d > 0 and np.isfinite(d)):
                raise StepTooLargeError(f"piece duration {d} must be positive finite")
        object.__setattr__(self, "pieces", pieces)

    @property
    def duration(self) -> float:
        return sum(d for d, _ in self.pieces)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    logmass: np.ndarray


def _matrix_for(cs: ControlSet, control) -> np.ndarray:
    if isinstance(control, (int, np.integer)):
        return vertices(cs)[int(control)].entries
    if isinstance(cs, Segment):
        return at(cs, float(control)).entries
    raise DimensionMismatchError(
        f"control {control!r} is not a vertex index for a Vertices set")


def payoff(y, m: MetzlerMatrix) -> float:
    """Instantaneous mass-growth rate l(y, m) = <1, m y>."""
    a = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.shape[1] != y.shape[0]:
        raise DimensionMismatchError(f"{a.shape} vs {y.shape}")
    return float(np.sum(a @ y))


def field(y, m: MetzlerMatrix) -> np.ndarray:
    """Projected vector field b(y, m) = m y - l(y, m) y, tangent to S."""
    a = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.shape[1] != y.shape[0]:
        raise DimensionMismatchError(f"{a.shape} vs {y.shape}")
    my = a @ y
    return my - my.sum() * y


def _rk4(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _iter_pieces(cs, sig, dt):
    """Yield (matrix, substep, nsteps) per piece, steps aligned to boundaries."""
    min_piece = min(d for d, _ in sig.pieces)
    if dt > min_piece + 1e-15:
        raise StepTooLargeError(
            f"dt={dt} exceeds the shortest piece duration {min_piece}")
    for duration, control in sig.pieces:
        m = _matrix_for(cs, control)
        nsteps = max(1, int(np.ceil(duration / dt - 1e-12)))
        yield m, duration / nsteps, nsteps


def integrate_ambient(x0, cs: ControlSet, sig: ControlSignal, dt: float,
                      record_every: int = 1) -> Trajectory:
    """RK4 integration of xdot = m(t) x in the open cone."""
    x = np.array(x0, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveStateError("initial state must be componentwise positive")
    times = [0.0]
    states = [x.copy()]
    logmass = [float(np.log(x.sum()))]
    t = 0.0
    step = 0
    for m, h, nsteps in _iter_pieces(cs, sig, dt):
        f = lambda z: m @ z
        for _ in range(nsteps):
            x = _rk4(f, x, h)
            t += h
            step += 1
            if np.any(x <= 0) or not np.all(np.isfinite(x)):
                raise NonPositiveStateError(
                    f"state left the positive cone at t={t:.6g}; reduce dt")
            if step % record_every == 0:
                times.append(t)
                states.append(x.copy())
                logmass.append(float(np.log(x.sum())))
    if times[-1] != t:
        times.append(t)
        states.append(x.copy())
        logmass.append(float(np.log(x.sum())))
    return Trajectory(np.array(times), np.array(states), np.array(logmass))


def integrate_projected(y0, cs: ControlSet, sig: ControlSignal, dt: float,
                        record_every: int = 1) -> Trajectory:
    """RK4 integration of ydot = b(y, m(t)) with renormalization onto S.

    The running logmass is the trapezoidal integral of the payoff, which
    equals log<1, x(t)> of the matching ambient trajectory.
    """
    y = as_simplex(y0)
    times = [0.0]
    states = [y.copy()]
    logmass = [0.0]
    accum = 0.0
    t = 0.0
    step = 0
    for m, h, nsteps in _iter_pieces(cs, sig, dt):
        f = lambda z: m @ z - np.sum(m @ z) * z
        for _ in range(nsteps):
            l_prev = payoff(y, m)
            y = _rk4(f, y, h)
            y = np.maximum(y, 0.0)
            s = y.sum()
            if s <= 0 or not np.all(np.isfinite(y)):
                raise NonPositiveStateError(
                    f"projected state degenerated at t={t:.6g}; reduce dt")
            y = y / s
            accum += 0.5 * h * (l_prev + payoff(y, m))
            t += h
            step += 1
            if step % record_every == 0:
                times.append(t)
                states.append(y.copy())
                logmass.append(accum)
    if times[-1] != t:
        times.append(t)
        states.append(y.copy())
        logmass.append(accum)
    return Trajectory(np.array(times), np.array(states), np.array(logmass))


def growth_rate(y0, cs: ControlSet, sig: ControlSignal, horizon: float,
                dt: float) -> float:
    """Time-averaged payoff along the projected trajectory.

    The signal is repeated cyclically until the horizon is covered (the
    last piece is truncated).
    """
    if horizon < 1:
        raise StepTooLargeError("horizon must be at least 1")
    pieces = []
    total = 0.0
    while total < horizon - 1e-12:
        for duration, control in sig.pieces:
            d = min(duration, horizon - total)
            if d < dt:  # drop a sub-step remainder rather than violate dt
                total = horizon
                break
            pieces.append((d, control))
            total += d
            if total >= horizon - 1e-12:
                break
    tiled = ControlSignal(tuple(pieces))
    traj = integrate_projected(y0, cs, tiled, dt, record_every=10 ** 9)
    return float(traj.logmass[-1] / traj.times[-1])
