"""Validated Metzler matrices, control sets, and spectral decompositions.

A Metzler matrix has nonnegative off-diagonal entries and generates a
positive linear semiflow.  Control sets are compact families of such
matrices, given either as an explicit vertex list or as a segment
``{G + alpha*F : alpha in [a, A]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import (
    DefectiveSpectrumError,
    NegativeOffDiagonalError,
    NonFiniteEntryError,
    NotIrreducibleError,
    OutOfRangeError,
    WrongVariantError,
)

__all__ = [
    "MetzlerMatrix",
    "Segment",
    "Vertices",
    "ControlSet",
    "SpectralData",
    "validate_metzler",
    "is_irreducible",
    "spectral",
    "vertices",
    "at",
    "load_control_set",
    "control_set_to_dict",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MetzlerMatrix:
    """n x n real matrix with nonnegative off-diagonal entries."""

    entries: np.ndarray
    irreducible: bool

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _support_irreducible(entries: np.ndarray) -> bool:
    """Strong connectivity of the off-diagonal support digraph.

    Edge j -> i whenever entries[i, j] > 0, i != j.  Two breadth-first
    traversals (forward and backward reachability from node 0) suffice.
    Entries are tested against exact zero: they come from user config,
    not floating-point accumulation.
    """
    n = entries.shape[0]
    off = entries.copy()
    np.fill_diagonal(off, 0.0)
    adj = off > 0.0  # adj[i, j]: edge j -> i

    def reaches_all(mat: np.ndarray) -> bool:
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for j in frontier:
                for i in np.nonzero(mat[:, j])[0]:
                    if not seen[i]:
                        seen[i] = True
                        nxt.append(int(i))
            frontier = nxt
        return bool(seen.all())

    return reaches_all(adj) and reaches_all(adj.T)


def validate_metzler(entries) -> MetzlerMatrix:
    """Validate a raw matrix as Metzler and compute its irreducibility flag."""
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise NonFiniteEntryError(f"expected square matrix of size >= 2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntryError("matrix has non-finite entries")
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and a[i, j] < 0.0:
                raise NegativeOffDiagonalError(i, j, a[i, j])
    return MetzlerMatrix(entries=_frozen(a), irreducible=_support_irreducible(a))


def is_irreducible(m: MetzlerMatrix) -> bool:
    return m.irreducible


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition with a normalized positive Perron pair.

    ``right[:, i]`` and ``left[i, :]`` are biorthogonal complex eigenvector
    bases (plain dot product, no conjugation: ``left[i] @ right[:, j] =
    delta_ij``), eigenvalues sorted by descending real part.  The Perron
    pair is real and strictly positive with ``<1, e1> = 1`` and
    ``<phi1, e1> = 1``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    lambda1: float
    e1: np.ndarray
    phi1: np.ndarray


def _power_refine(p: np.ndarray, v0: np.ndarray, max_iter: int = 500) -> np.ndarray:
    """Power iteration on a positive matrix; globally convergent in the cone."""
    v = np.abs(v0)
    if v.sum() <= 0:
        v = np.ones_like(v)
    v = v / v.sum()
    for _ in range(max_iter):
        w = p @ v
        w = w / w.sum()
        if np.max(np.abs(w - v)) < 1e-16:
            v = w
            break
        v = w
    return v


def spectral(m: MetzlerMatrix) -> SpectralData:
    """Full spectral data of an irreducible Metzler matrix.

    Dense complex eigen-decomposition; the Perron pair is refined by power
    iteration on ``expm(m*h)`` with ``h = 1/(1 + max_i |m_ii|)``, which is a
    strictly positive matrix for irreducible Metzler ``m``.
    """
    if not m.irreducible:
        raise NotIrreducibleError("spectral data requires an irreducible matrix")
    a = m.entries
    n = m.n
    vals, vecs = np.linalg.eig(a)
    order = np.lexsort((-vals.imag, -vals.real))
    vals = vals[order]
    vecs = vecs[:, order]

    gaps = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < 1e-9:
        raise DefectiveSpectrumError(
            f"minimum eigenvalue gap {gaps.min():.3e} below 1e-9")

    try:
        left = np.linalg.inv(vecs)
    except np.linalg.LinAlgError as exc:
        raise DefectiveSpectrumError("eigenvector basis is singular") from exc

    # Rescale the dominant pair so that <1, e1> = 1 (biorthogonality kept).
    s = vecs[:, 0].sum()
    vecs = vecs.copy()
    vecs[:, 0] = vecs[:, 0] / s
    left[0, :] = left[0, :] * s

    h = 1.0 / (1.0 + np.max(np.abs(np.diag(a))))
    p = expm(a * h)
    e1 = _power_refine(p, np.real(vecs[:, 0]))
    phi1 = _power_refine(p.T, np.real(left[0, :]))
    phi1 = phi1 / (phi1 @ e1)
    lambda1 = float(phi1 @ (a @ e1))

    return SpectralData(
        eigenvalues=vals,
        right=vecs,
        left=left,
        lambda1=lambda1,
        e1=_frozen(e1),
        phi1=_frozen(phi1),
    )


@dataclass(frozen=True)
class Segment:
    """Matrix family ``{G + alpha*F : alpha in [a, A]}``.

    Both endpoint matrices must be Metzler and irreducible; by affinity all
    interior points are then Metzler.
    """

    G: np.ndarray
    F: np.ndarray
    a: float
    A: float
    _verts: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.a > self.A:
            raise OutOfRangeError(f"segment range [{self.a}, {self.A}] is empty")
        g = _frozen(self.G)
        f = _frozen(self.F)
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "F", f)
        lo = validate_metzler(g + self.a * f)
        hi = validate_metzler(g + self.A * f)
        for which, v in (("G + a*F", lo), ("G + A*F", hi)):
            if not v.irreducible:
                raise NotIrreducibleError(f"segment vertex {which} is reducible")
        object.__setattr__(self, "_verts", (lo, hi))

    @property
    def n(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True)
class Vertices:
    """Finite matrix family given by its extreme points."""

    matrices: tuple

    def __post_init__(self):
        mats = tuple(
            m if isinstance(m, MetzlerMatrix) else validate_metzler(m)
            for m in self.matrices
        )
        if not mats:
            raise OutOfRangeError("vertex list is empty")
        for k, m in enumerate(mats):
            if not m.irreducible:
                raise NotIrreducibleError(f"vertex {k} is reducible")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return self.matrices[0].n


ControlSet = Union[Segment, Vertices]


def vertices(cs: ControlSet) -> list[MetzlerMatrix]:
    """Extreme points of the control set."""
    if isinstance(cs, Segment):
        return list(cs._verts)
    return list(cs.matrices)


def at(cs: ControlSet, alpha: float) -> MetzlerMatrix:
    """Matrix ``G + alpha*F`` of a segment, validated."""
    if not isinstance(cs, Segment):
        raise WrongVariantError("at() requires a Segment control set")
    if not (cs.a <= alpha <= cs.A):
        raise OutOfRangeError(f"alpha={alpha} outside [{cs.a}, {cs.A}]")
    return validate_metzler(cs.G + alpha * cs.F)


def control_set_to_dict(cs: ControlSet) -> dict:
    """JSON-ready model-file representation."""
    if isinstance(cs, Segment):
        return {
            "n": cs.n,
            "kind": "segment",
            "G": cs.G.tolist(),
            "F": cs.F.tolist(),
            "range": [cs.a, cs.A],
        }
    return {
        "n": cs.n,
        "kind": "vertices",
        "matrices": [m.entries.tolist() for m in cs.matrices],
    }


def load_control_set(source) -> ControlSet:
    """Parse a model file (path, file object, or already-parsed dict)."""
    if isinstance(source, dict):
        data = source
    elif hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(source) as fh:
            data = json.load(fh)
    kind = data.get("kind")
    if kind == "segment":
        a, A = data["range"]
        return Segment(G=np.array(data["G"], dtype=float),
                       F=np.array(data["F"], dtype=float),
                       a=float(a), A=float(A))
    if kind == "vertices":
        return Vertices(tuple(np.array(m, dtype=float) for m in data["matrices"]))
    raise OutOfRangeError(f"unknown control set kind: {kind!r}")
