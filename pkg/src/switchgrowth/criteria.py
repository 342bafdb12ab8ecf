"""Perron/Floquet eigenvalue derivatives and optimality criteria for segments.

For a segment {G + alpha*F} with a critical point alpha* of the Perron
eigenvalue, the second-order behaviour under periodic control perturbations
alpha* + eps*gamma(t) is governed by sums over the subdominant eigen-pairs.
A positive high-frequency sum certifies that periodic switching beats the
best constant control; its negation is the generalized Legendre condition
for short-time optimality of the constant control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DefectiveSpectrumError, StepTooLargeError
from .matrices import Segment, SpectralData, at, spectral

__all__ = [
    "AlphaStar",
    "CriteriaReport",
    "perron_derivative",
    "find_alpha_star",
    "perron_second_derivative",
    "floquet_second_derivative_cos",
    "floquet_second_derivative_general",
    "high_frequency_criterion",
    "legendre_value",
    "floquet_exponent_monodromy",
    "build_report",
]

_IMAG_TOL = 1e-9


def _eig_at(cs: Segment, alpha: float) -> SpectralData:
    return spectral(at(cs, alpha))


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > _IMAG_TOL * (1.0 + abs(value.real)):
        raise DefectiveSpectrumError(
            f"{what}: imaginary residue {value.imag:.3e} "
            "(complex pairs failed to cancel)")
    return float(value.real)


def _coupling_terms(s: SpectralData, f: np.ndarray):
    """(lambda1 - lambda_i, (phi1 F e_i)(phi_i F e_1)) for i >= 2."""
    fe = f @ s.right          # columns F e_i
    p1_f_e = s.left[0] @ fe   # phi1 F e_i
    p_f_e1 = s.left @ fe[:, 0]  # phi_i F e_1
    gaps = s.eigenvalues[0] - s.eigenvalues[1:]
    return gaps, p1_f_e[1:] * p_f_e1[1:]


def perron_derivative(cs: Segment, alpha: float) -> float:
    """d(lambda)/d(alpha) = phi1 F e1 with <phi1, e1> = 1."""
    s = _eig_at(cs, alpha)
    return float(s.phi1 @ (cs.F @ s.e1))


def _perron_value(cs: Segment, alpha: float) -> float:
    vals = np.linalg.eigvals(cs.G + alpha * cs.F)
    return float(vals.real.max())


@dataclass(frozen=True)
class AlphaStar:
    alpha: float
    value: float
    boundary: bool


def find_alpha_star(cs: Segment, grid: int = 200) -> AlphaStar:
    """Maximize the Perron eigenvalue over [a, A].

    Coarse grid scan followed by golden-section refinement of the localized
    basin to an interval below 1e-10.  Boundary maximizers are flagged, not
    rejected.
    """
    alphas = np.linspace(cs.a, cs.A, grid)
    vals = np.array([_perron_value(cs, a) for a in alphas])
    k = int(np.argmax(vals))
    lo = alphas[max(k - 1, 0)]
    hi = alphas[min(k + 1, grid - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = _perron_value(cs, x1)
    f2 = _perron_value(cs, x2)
    while hi - lo > 1e-10:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = _perron_value(cs, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = _perron_value(cs, x2)
    alpha = 0.5 * (lo + hi)
    span = cs.A - cs.a
    boundary = bool((alpha - cs.a) < 1e-7 * span or (cs.A - alpha) < 1e-7 * span)
    if boundary:
        alpha = cs.a if (alpha - cs.a) < (cs.A - alpha) else cs.A
    return AlphaStar(alpha=float(alpha), value=_perron_value(cs, alpha),
                     boundary=boundary)


def perron_second_derivative(cs: Segment, alpha_star: float) -> float:
    """d2(lambda)/d(alpha)2 = 2 sum_{i>=2} (phi1 F e_i)(phi_i F e_1)/(l1 - l_i)."""
    s = _eig_at(cs, alpha_star)
    gaps, terms = _coupling_terms(s, cs.F)
    return _real_part(2.0 * np.sum(terms / gaps), "perron_second_derivative")


def floquet_second_derivative_cos(cs: Segment, alpha_star: float,
                                  omega: float) -> float:
    """Second derivative of the Floquet eigenvalue for gamma(t) = cos(omega t)."""
    s = _eig_at(cs, alpha_star)
    gaps, terms = _coupling_terms(s, cs.F)
    val = np.sum(gaps / (omega ** 2 + gaps ** 2) * terms)
    return _real_part(val, "floquet_second_derivative_cos")


def floquet_second_derivative_general(cs: Segment, alpha_star: float,
                                      gamma: np.ndarray, period: float) -> float:
    """Second Floquet derivative for an arbitrary sampled periodic gamma.

    gamma holds >= 512 uniform cyclic samples over one period (no duplicated
    endpoint).  For each subdominant pair the relaxation ODE
    gammadot_i/(l1 - l_i) + gamma_i = gamma is solved exactly per Fourier
    mode; <gamma_i^2> is then the cyclic mean of the squared response.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size < 512:
        raise StepTooLargeError("gamma needs >= 512 uniform samples over one period")
    n_s = gamma.size
    c = np.fft.fft(gamma) / n_s
    k = np.fft.fftfreq(n_s, d=1.0 / n_s)  # integer mode numbers
    w0 = 2.0 * np.pi / period
    neg = (-np.arange(n_s)) % n_s  # index of mode -k

    s = _eig_at(cs, alpha_star)
    gaps, terms = _coupling_terms(s, cs.F)
    total = 0.0 + 0.0j
    for kappa, term in zip(gaps, terms):
        a = c * kappa / (kappa + 1j * k * w0)
        mean_sq = np.sum(a * a[neg])
        total += 2.0 * mean_sq * term / kappa
    return _real_part(total, "floquet_second_derivative_general")


def high_frequency_criterion(cs: Segment, alpha_star: float) -> float:
    """sum_{i>=2} (l1 - l_i)(phi_i F e_1)(phi1 F e_i); positive means that
    high-frequency periodic perturbation strictly improves the growth rate."""
    s = _eig_at(cs, alpha_star)
    gaps, terms = _coupling_terms(s, cs.F)
    return _real_part(np.sum(gaps * terms), "high_frequency_criterion")


def legendre_value(cs: Segment, alpha_star: float) -> float:
    """phi1 F (G + alpha* F - lambda1 I) F e1; positive certifies short-time
    local optimality of the constant control."""
    s = _eig_at(cs, alpha_star)
    m = cs.G + alpha_star * cs.F - s.lambda1 * np.eye(cs.n)
    return float(s.phi1 @ (cs.F @ (m @ (cs.F @ s.e1))))


def floquet_exponent_monodromy(cs: Segment, alpha, period: float,
                               dt: float) -> float:
    """Floquet exponent via the monodromy matrix of xdot = (G + alpha(t)F)x.

    alpha is a callable t -> control value; the fundamental matrix is
    integrated over one period with fixed RK4 steps.
    """
    if dt > period / 1000.0:
        raise StepTooLargeError(f"dt={dt} exceeds period/1000")
    nsteps = int(np.ceil(period / dt - 1e-12))
    h = period / nsteps
    g, f = cs.G, cs.F
    phi = np.eye(cs.n)
    t = 0.0
    for _ in range(nsteps):
        a0 = g + alpha(t) * f
        a1 = g + alpha(t + 0.5 * h) * f
        a2 = g + alpha(t + h) * f
        k1 = a0 @ phi
        k2 = a1 @ (phi + 0.5 * h * k1)
        k3 = a1 @ (phi + 0.5 * h * k2)
        k4 = a2 @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    rho = np.max(np.abs(np.linalg.eigvals(phi)))
    return float(np.log(rho) / period)


@dataclass(frozen=True)
class CriteriaReport:
    alpha_star: float
    lambda_star: float
    boundary: bool
    perron_second: float
    high_freq: float
    legendre: float
    identity_residual: float
    floquet_second_at: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alphaStar": self.alpha_star,
            "lambdaStar": self.lambda_star,
            "boundary": self.boundary,
            "perronSecond": self.perron_second,
            "highFreq": self.high_freq,
            "legendre": self.legendre,
            "identityResidual": self.identity_residual,
            "floquetSecondAt": {str(w): v for w, v in self.floquet_second_at.items()},
        }


def build_report(cs: Segment, omegas=()) -> CriteriaReport:
    """Locate alpha* and evaluate all second-order criteria there."""
    star = find_alpha_star(cs)
    second = perron_second_derivative(cs, star.alpha)
    hf = high_frequency_criterion(cs, star.alpha)
    leg = legendre_value(cs, star.alpha)
    residual = abs(leg + hf)
    if residual > 1e-8:
        raise DefectiveSpectrumError(
            f"Legendre/high-frequency identity residual {residual:.3e} exceeds 1e-8")
    sweep = {float(w): floquet_second_derivative_cos(cs, star.alpha, float(w))
             for w in omegas}
    return CriteriaReport(
        alpha_star=star.alpha,
        lambda_star=star.value,
        boundary=star.boundary,
        perron_second=second,
        high_freq=hf,
        legendre=leg,
        identity_residual=residual,
        floquet_second_at=sweep,
    )
