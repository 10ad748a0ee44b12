"""Spectral factorization of the outgoing-field spectrum.

The measured quadrature of the quantum record has a rational spectrum,
a quartic in sideband frequency over |R(Omega)|^2.  Splitting it into
factors analytic (with analytic inverses) in the upper and lower half
planes is what turns the causal estimation problem into algebra: the
numerator roots come in pairs {+-beta, +-beta_c} obtained in closed form
from the two quartic coefficients a1, a2, and the lower-half-plane pair
{beta, -beta_c} builds phi_plus.

Closed forms follow the complex-conjugate-pair regime (a2 > a1^2), which
covers every underdamped configuration; the overdamped corner falls back
to numeric companion-matrix roots, which also serve as the independent
root oracle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .params import WorkingParams, quantum_bath_rate


class RealRootRegimeError(ValueError):
    """Quartic numerator roots are not a complex-conjugate pair (a2 <= a1^2).

    Callers should fall back to :func:`spectral_roots_numeric`.
    """


@dataclass(frozen=True)
class SpectralRoots:
    """Roots of the record-spectrum numerator and the response poles.

    ``beta`` and ``-beta_c`` are the numerator roots in the lower half
    plane (zeros of phi_plus); ``eta`` and ``-eta_c`` are the response
    poles there.  In the generic regime beta_c = conj(beta) and
    eta_c = conj(eta).
    """

    a1: float
    a2: float
    a: float
    b: float
    beta: complex
    beta_c: complex
    eta: complex
    eta_c: complex

    @property
    def beta_product(self) -> complex:
        return self.beta * self.beta_c

    @property
    def beta_square_sum(self) -> complex:
        return self.beta**2 + self.beta_c**2


def _spectrum_frequency(params: WorkingParams) -> float:
    # the record resonance: omega_q in SN/mutual, omega_m in standard QM
    return params.omega_q


def quartic_coefficients(params: WorkingParams, omega: float | None = None) -> tuple[float, float, float]:
    """Coefficients (Omega^4, Omega^2, Omega^0) of the record-spectrum numerator.

    The numerator is S_yqyq(Omega)*|R(Omega)|^2 expressed in lam units;
    with a quantum bath the constant term carries lam^2*lam_tilde^2 in
    place of lam^4.
    """
    w = _spectrum_frequency(params) if omega is None else omega
    g, lam = params.gamma_m, params.lam
    s2 = math.sin(2.0 * params.theta)
    ss = math.sin(params.theta) ** 2
    c2 = g * g - 2.0 * w * w - lam * lam * s2
    # constant term: lam^2 lam_tilde^2 ss, with the thermal increment kept
    # additive (never reconstructed from the stored lam_tilde)
    c0 = w**4 + lam * lam * w * w * s2 + (lam**4 + lam * lam * quantum_bath_rate(params)) * ss
    return (1.0, c2, c0)


def _a1_a2(params: WorkingParams, omega: float | None = None) -> tuple[float, float]:
    _, c2, c0 = quartic_coefficients(params, omega)
    return (-c2, 4.0 * c0)


def _root_blocks(params: WorkingParams, omega: float | None = None):
    """a1, sqrt(a2), and the gaps sqrt(a2) -+ a1 in cancellation-free form.

    a2 - a1^2 expands to 4 lam^2 s^2 (lt^2 - lam^2 c^2)
    + gamma^2 (4 w^2 - gamma^2 + 2 lam^2 sin2theta), avoiding the w^4
    cancellation that dominates the direct difference at small lam.
    """
    w = _spectrum_frequency(params) if omega is None else omega
    g, lam = params.gamma_m, params.lam
    s2 = math.sin(2.0 * params.theta)
    s = math.sin(params.theta)
    a1, a2 = _a1_a2(params, omega)
    sqrt_a2 = math.sqrt(a2)
    d = (4.0 * lam * lam * s * s * (lam * lam * s * s + quantum_bath_rate(params))
         + g * g * (4.0 * w * w - g * g + 2.0 * lam * lam * s2))
    if a1 >= 0.0:
        gap_minus = d / (sqrt_a2 + a1) if (sqrt_a2 + a1) > 0 else 0.0   # sqrt(a2) - a1
        gap_plus = sqrt_a2 + a1
    else:
        gap_minus = sqrt_a2 - a1
        gap_plus = d / gap_minus if gap_minus > 0 else 0.0              # sqrt(a2) + a1
    return a1, a2, sqrt_a2, d, gap_minus, gap_plus


def _eta_pair(omega: float, gamma: float) -> tuple[complex, complex]:
    root = cmath.sqrt(complex(4.0 * omega * omega - gamma * gamma)) / 2.0
    return (root - 0.5j * gamma, root + 0.5j * gamma)


def spectral_roots(params: WorkingParams, omega: float | None = None) -> SpectralRoots:
    """Closed-form factorization data.

    Raises :class:`RealRootRegimeError` outside the complex-pair regime
    (only reachable for overdamped mechanics).
    """
    a1, a2, sqrt_a2, d, gap_minus, gap_plus = _root_blocks(params, omega)
    if d <= 0 and a1 > 0:
        raise RealRootRegimeError(
            f"a2={a2:.6g} <= a1^2={a1*a1:.6g}; use spectral_roots_numeric")
    a = math.sqrt(gap_plus) / 2.0
    b = -math.sqrt(gap_minus) / 2.0
    w = _spectrum_frequency(params) if omega is None else omega
    eta, eta_c = _eta_pair(w, params.gamma_m)
    return SpectralRoots(a1=a1, a2=a2, a=a, b=b,
                         beta=complex(a, b), beta_c=complex(a, -b),
                         eta=eta, eta_c=eta_c)


def spectral_roots_numeric(params: WorkingParams, omega: float | None = None) -> SpectralRoots:
    """Root oracle: companion-matrix eigenvalues of the quartic numerator.

    The quartic in Omega is Omega^4 - a1*Omega^2 + a2/4; its four roots
    are +-beta, +-beta_c.  The lower-half-plane member of each +- pair is
    selected; the pairing into (beta, beta_c) keeps beta*beta_c and
    beta^2 + beta_c^2 real, matching the closed forms in the generic
    regime and extending them to the overdamped one.
    """
    a1, a2 = _a1_a2(params, omega)
    roots = np.roots([1.0, 0.0, -a1, 0.0, a2 / 4.0])
    lower = np.array(sorted((r for r in roots if r.imag < 0), key=lambda r: r.real))
    if len(lower) != 2:
        # gamma_m = lam = 0 edge: roots on the real axis, S == 1
        lower = np.array(sorted(roots, key=lambda r: (abs(r.imag), r.real)))[:2]
        lower = np.array(sorted(lower, key=lambda r: r.real))
    beta = complex(lower[1])
    beta_c = complex(-lower[0])
    w = _spectrum_frequency(params) if omega is None else omega
    eta, eta_c = _eta_pair(w, params.gamma_m)
    a = 0.5 * float((beta + beta_c).real)
    b = float((beta - beta_c).imag) / 2.0
    return SpectralRoots(a1=a1, a2=a2, a=a, b=b, beta=beta, beta_c=beta_c,
                         eta=eta, eta_c=eta_c)


def roots_for(params: WorkingParams, omega: float | None = None) -> SpectralRoots:
    """Closed form where available, numeric fallback otherwise."""
    try:
        return spectral_roots(params, omega)
    except RealRootRegimeError:
        return spectral_roots_numeric(params, omega)


def estimator_numerator_terms(params: WorkingParams, omega: float | None = None
                              ) -> tuple[float, float]:
    """(beta beta_c - w^2, beta - beta_c + i gamma as a real coefficient).

    The causal-estimator numerator is
    beta*beta_c - w^2 + Omega*(beta - beta_c + i gamma); both constants
    are returned in cancellation-free form: beta*beta_c = sqrt(c0) gives
    beta*beta_c - w^2 = (c0 - w^4)/(sqrt(c0) + w^2), and
    -i(beta - beta_c + i gamma) = sqrt(X) - gamma = (X - gamma^2)
    /(sqrt(X) + gamma) with X - gamma^2 = 4 lam^2 s^2 (lam^2 s^2 + qrate)
    /(sqrt(a2) + 2 w^2 + lam^2 sin2theta).  The second return value is
    the real number sqrt(X) - gamma (= -2b - gamma = 2q), so the
    numerator is (first) - i*Omega*(second).
    """
    w = _spectrum_frequency(params) if omega is None else omega
    g, lam = params.gamma_m, params.lam
    s = math.sin(params.theta)
    s2 = math.sin(2.0 * params.theta)
    qrate = quantum_bath_rate(params)
    _, _, c0 = quartic_coefficients(params, omega)
    c0_minus_w4 = lam * lam * w * w * s2 + (lam**4 + lam * lam * qrate) * s * s
    const = c0_minus_w4 / (math.sqrt(c0) + w * w)
    x_minus_g2 = (4.0 * lam * lam * s * s * (lam * lam * s * s + qrate)
                  / (2.0 * math.sqrt(c0) + 2.0 * w * w + lam * lam * s2))
    two_q = x_minus_g2 / (math.sqrt(x_minus_g2 + g * g) + g)
    return const, two_q


def degeneracy_warning(roots: SpectralRoots, omega_scale: float) -> bool:
    """True when beta approaches eta (near-critical closed-loop estimator)."""
    return abs(roots.beta - roots.eta) < 1e-6 * omega_scale


def phi_plus(roots: SpectralRoots, Omega):
    """Upper-half-plane-analytic spectral factor, phi_plus -> 1 at infinity."""
    Omega = np.asarray(Omega, dtype=float)
    num = (Omega - roots.beta) * (Omega + roots.beta_c)
    den = (Omega - roots.eta) * (Omega + roots.eta_c)
    return num / den


def phi_minus(roots: SpectralRoots, Omega):
    """Lower-half-plane-analytic factor; conjugate of phi_plus on the real axis."""
    Omega = np.asarray(Omega, dtype=float)
    num = (Omega - roots.beta_c) * (Omega + roots.beta)
    den = (Omega - roots.eta_c) * (Omega + roots.eta)
    return num / den


def numerator_quartic(roots: SpectralRoots, Omega):
    """N(Omega) = (Omega^2 - beta^2)(Omega^2 - beta_c^2), real on the real axis."""
    Omega = np.asarray(Omega, dtype=float)
    val = (Omega**2 - roots.beta**2) * (Omega**2 - roots.beta_c**2)
    return val.real
