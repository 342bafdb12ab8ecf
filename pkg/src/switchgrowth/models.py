"""Built-in model presets.

Three families are provided:

- "dim2": the 2x2 one-parameter family [[0, 1-alpha], [alpha, 0]] over
  [a, 1-a]; the optimal growth rate is attained by the constant control
  alpha = 1/2 with value 1/2.
- "pmca": a 3-compartment polymerization/fragmentation model (small,
  medium, large polymers) with growth rates tau1, tau2 and fragmentation
  rate beta, controlled by the sonication intensity alpha in [a, A].
- "limit-cycle": a 3x3 segment for which the best constant control is
  unstable under high-frequency periodic perturbation, so the optimal
  feedback produces a limit cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConservationViolatedError, InvalidOverrideError, UnknownPresetError
from .matrices import ControlSet, Segment

__all__ = ["Preset", "preset", "classify_pmca", "pmca_conservation_check",
           "PRESET_NAMES"]

PRESET_NAMES = ("dim2", "pmca", "limit-cycle")

_DEFAULTS = {
    "dim2": {"a": 0.2},
    "pmca": {"tau1": 0.02, "tau2": 1.0, "beta": 0.04, "a": 2.0, "A": 8.0},
    "limit-cycle": {"a": 0.05, "A": 1.0},
}


@dataclass(frozen=True)
class Preset:
    name: str
    control_set: ControlSet
    parameters: dict
    notes: str


def _dim2(a: float) -> Segment:
    g = np.array([[0.0, 1.0], [0.0, 0.0]])
    f = np.array([[0.0, -1.0], [1.0, 0.0]])
    return Segment(G=g, F=f, a=a, A=1.0 - a)


def _pmca(tau1: float, tau2: float, beta: float, a: float, A: float) -> Segment:
    g = np.array([
        [-tau1, 0.0, 0.0],
        [tau1, -tau2, 0.0],
        [0.0, tau2, 0.0],
    ])
    f = np.array([
        [0.0, 2.0 * beta, beta],
        [0.0, -beta, beta],
        [0.0, 0.0, -beta],
    ])
    return Segment(G=g, F=f, a=a, A=A)


_LIMIT_CYCLE_G = np.array([
    [0.0, 0.245, 0.007],
    [0.0, 0.0, 0.141],
    [0.0, 0.0, 0.0],
])
_LIMIT_CYCLE_F = np.array([
    [-0.245, 0.0, 0.0],
    [0.272, -0.499, 0.0],
    [0.645, 0.026, -0.035],
])


def preset(name: str, **overrides) -> Preset:
    """Build a named preset, optionally overriding its parameters."""
    if name not in _DEFAULTS:
        raise UnknownPresetError(f"unknown preset {name!r}; "
                                 f"choose from {PRESET_NAMES}")
    params = dict(_DEFAULTS[name])
    for key, val in overrides.items():
        if key not in params:
            raise InvalidOverrideError(
                f"preset {name!r} has no parameter {key!r} "
                f"(allowed: {sorted(params)})")
        params[key] = float(val)

    if name == "dim2":
        cs = _dim2(params["a"])
        notes = "2x2 exchange family; optimum at alpha=1/2 with rate 1/2"
    elif name == "pmca":
        cs = _pmca(params["tau1"], params["tau2"], params["beta"],
                   params["a"], params["A"])
        notes = ("3-stage polymerization/fragmentation with sonication control; "
                 "single fragmentation rate beta for both breakable stages")
    else:
        cs = Segment(G=_LIMIT_CYCLE_G, F=_LIMIT_CYCLE_F,
                     a=params["a"], A=params["A"])
        notes = ("3x3 segment whose best constant control is unstable under "
                 "high-frequency periodic perturbation")
    return Preset(name=name, control_set=cs, parameters=params, notes=notes)


def classify_pmca(tau1: float, tau2: float) -> str:
    """Shape of alpha -> lambda(alpha) for the pmca family.

    "interior-max" iff tau2 > 2*tau1 (rate increases to a maximum and then
    decays to tau1); "monotone" otherwise (rate increases to tau1).
    """
    return "interior-max" if tau2 > 2.0 * tau1 else "monotone"


def pmca_conservation_check(p: Preset) -> dict:
    """Growth conserves polymer count (1^T G = 0); fragmentation conserves
    total size (q^T F = 0 with q = (1, 2, 3))."""
    cs = p.control_set
    q = np.array([1.0, 2.0, 3.0])
    res_g = float(np.max(np.abs(np.ones(3) @ cs.G)))
    res_f = float(np.max(np.abs(q @ cs.F)))
    if res_g > 1e-14:
        raise ConservationViolatedError("polymer count (1^T G)", res_g)
    if res_f > 1e-14:
        raise ConservationViolatedError("total size (q^T F)", res_f)
    return {"count_residual": res_g, "size_residual": res_f}
