"""Shared fixtures and random-instance generators."""

import numpy as np
import pytest

from switchgrowth import Segment, Vertices, preset, spectral, validate_metzler


@pytest.fixture(scope="session")
def dim2():
    return preset("dim2")


@pytest.fixture(scope="session")
def pmca():
    return preset("pmca")


@pytest.fixture(scope="session")
def limit_cycle():
    return preset("limit-cycle")


def random_metzler(rng: np.random.Generator, n: int,
                   strict: bool = True) -> np.ndarray:
    """Random Metzler matrix with strictly positive off-diagonals (hence
    irreducible) and diagonal in [-1, 0.5]."""
    lo = 0.05 if strict else 0.0
    m = rng.uniform(lo, 1.0, size=(n, n))
    np.fill_diagonal(m, rng.uniform(-1.0, 0.5, size=n))
    return m


def random_segment(rng: np.random.Generator, n: int) -> Segment:
    """Random segment over [0, 1] with strictly positive off-diagonal
    vertices: G = m_a, F = m_A - m_a."""
    m_a = random_metzler(rng, n)
    m_A = random_metzler(rng, n)
    return Segment(G=m_a, F=m_A - m_a, a=0.0, A=1.0)


def random_vertices(rng: np.random.Generator, n: int,
                    count: int | None = None) -> Vertices:
    if count is None:
        count = int(rng.integers(2, 4))
    return Vertices(tuple(random_metzler(rng, n) for _ in range(count)))


def critical_segment(rng: np.random.Generator, n: int,
                     delta: float = 0.4) -> tuple[Segment, float]:
    """Random segment whose Perron eigenvalue is critical at alpha0 = 0.5.

    Given a random Metzler m0 and direction f0, the shifted direction
    F = f0 - (phi1 f0 e1) I makes phi1 F e1 = 0 at m0; with G = m0 - 0.5 F
    the point alpha0 = 0.5 is then a critical point of lambda(alpha).
    The shift only moves the diagonal, so both endpoints stay Metzler for
    delta small enough (retry on the rare failure).
    """
    for _ in range(100):
        m0 = random_metzler(rng, n)
        f0 = random_metzler(rng, n)
        s = spectral(validate_metzler(m0))
        F = f0 - float(s.phi1 @ (f0 @ s.e1)) * np.eye(n)
        G = m0 - 0.5 * F
        try:
            return Segment(G=G, F=F, a=0.5 - delta, A=0.5 + delta), 0.5
        except Exception:
            continue
    raise RuntimeError("failed to build a critical segment")
