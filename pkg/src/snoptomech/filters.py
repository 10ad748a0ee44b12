"""Causal estimators of the mirror displacement from the measurement record.

Three equivalent constructions of the steady-state estimator are exposed
and cross-checked against each other:

* the Wiener filter synthesized from the spectral factorization roots,
* the Kalman-form filter built from the steady conditional variance
  (in a full-record variant, relating <x>_c to the complete data string,
  and a quantum-record variant, relating the quantum part of the
  displacement to the quantum part of the record),
* the explicit time-domain kernel, a damped oscillation at frequency
  Omega_x with decay Gamma, whose analytic Fourier transform reproduces
  the full-record variant.

Filters are expressed in the internal hbar = M = 1 units; applying a
filter to the dimensionless record yields displacement in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factorization import SpectralRoots, estimator_numerator_terms, roots_for
from .params import ParameterError, WorkingParams
from .riccati import measurement_rate

__all__ = [
    "response", "response_m", "response_q", "response_pm",
    "record_numerator", "wiener_filter", "kalman_filter",
    "decay_rate", "oscillation_frequency", "filter_time_domain",
    "filter_time_domain_ft", "mutual_filters", "MutualFilters",
    "anticausal_mass",
]


def response(omega: float, gamma: float, Omega):
    """Mechanical response denominator R(Omega) = omega^2 - Omega^2 - i gamma Omega."""
    Omega = np.asarray(Omega, dtype=float)
    return omega * omega - Omega**2 - 1j * gamma * Omega


def response_m(params: WorkingParams, Omega):
    return response(params.omega_m, params.gamma_m, Omega)


def response_q(params: WorkingParams, Omega):
    return response(params.omega_q, params.gamma_m, Omega)


def response_pm(params: WorkingParams, Omega) -> tuple[np.ndarray, np.ndarray]:
    """(R_plus, R_minus) of the mutual protocol's difference/sum modes."""
    rq = response_q(params, Omega)
    wg2 = params.omega_grav**2
    return rq + wg2, rq - wg2


def _record_resonance(params: WorkingParams) -> float:
    return params.omega_q


def record_numerator(params: WorkingParams, Omega, form: str = "moments"):
    """A(Omega), the numerator of the record->displacement map.

    form="moments" builds it from the steady conditional variance,
    A = -2 q (q + gamma - i Omega) - lam^2 sin(theta) cos(theta);
    form="roots" uses the spectral-root representation
    ((b - b_c + i gamma)(b - b_c - i gamma - 2 Omega) - lam^2 sin2theta)/2.
    The two agree identically; keeping both guards the conventions.
    """
    Omega = np.asarray(Omega, dtype=float)
    g = params.gamma_m
    if form == "moments":
        q = measurement_rate(params)
        sc = params.sin_theta * params.cos_theta
        return -2.0 * q * (q + g - 1j * Omega) - params.lam**2 * sc
    if form == "roots":
        r = roots_for(params)
        dbeta = r.beta - r.beta_c
        s2 = math.sin(2.0 * params.theta)
        return ((dbeta + 1j * g) * (dbeta - 1j * g - 2.0 * Omega)
                - params.lam**2 * s2) / 2.0
    raise ValueError(f"unknown form {form!r}")


def wiener_filter(params: WorkingParams, Omega,
                  roots: SpectralRoots | None = None):
    """Causal MMSE filter from the factorization roots.

    K(Omega) = (beta beta_c + Omega(beta - beta_c) + i gamma Omega - w^2)
    / (lam sin(theta) (beta - Omega)(Omega + beta_c)) with w the record
    resonance (omega_q here; omega_m in the gravity-free limit where the
    two coincide).
    """
    params.require_sin_theta()
    Omega = np.asarray(Omega, dtype=float)
    if roots is None:
        r = roots_for(params)
        const, two_q = estimator_numerator_terms(params)
        num = const - 1j * Omega * two_q
    else:
        # explicit roots (e.g. the perturbation hook): literal numerator
        r = roots
        w = _record_resonance(params)
        num = (r.beta * r.beta_c + Omega * (r.beta - r.beta_c)
               + 1j * params.gamma_m * Omega - w * w)
    den = params.lam * params.sin_theta * (r.beta - Omega) * (Omega + r.beta_c)
    return num / den


def kalman_filter(params: WorkingParams, Omega, variant: str = "full_record"):
    """Steady-state filter in the A/(lam sin(theta) (A - R)) form.

    variant="full_record": R = R_m; maps the complete record to <x>_c
    (the form the trajectory equations produce directly).
    variant="quantum_record": R = R_q; maps the quantum record to the
    quantum displacement estimate, equal to `wiener_filter`.
    """
    params.require_sin_theta()
    Omega = np.asarray(Omega, dtype=float)
    A = record_numerator(params, Omega)
    if variant == "full_record":
        R = response_m(params, Omega)
    elif variant == "quantum_record":
        R = response_q(params, Omega)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return A / (params.lam * params.sin_theta * (A - R))


def decay_rate(params: WorkingParams) -> float:
    """Gamma, the estimator relaxation rate: gamma_m/2 + alpha^2 V_xx sin^2(theta).

    This is minus half the trace of the conditional-mean drift matrix; it
    makes the time-domain kernel's transform match the frequency-domain
    filter exactly.
    """
    return 0.5 * params.gamma_m + measurement_rate(params)


def oscillation_frequency(params: WorkingParams) -> float:
    """Omega_x of the time-domain kernel (squared form kept positive)."""
    q = measurement_rate(params)
    g = params.gamma_m
    val = (params.omega_m**2 - 0.25 * g * g
           + params.lam**2 * params.sin_theta * params.cos_theta
           + g * q + q * q)
    if val <= 0:
        raise ParameterError("overdamped estimator: Omega_x^2 <= 0")
    return math.sqrt(val)


def filter_time_domain(params: WorkingParams, t):
    """Impulse response K_theta(t) of the full-record estimator; 0 for t < 0."""
    params.require_sin_theta()
    t = np.asarray(t, dtype=float)
    gam = decay_rate(params)
    ox = oscillation_frequency(params)
    s, c = params.sin_theta, params.cos_theta
    v_xx_lam = measurement_rate(params) / (params.lam**2 * s * s)  # alpha^2 V_xx / lam^2... V_xx in lam units
    cos_amp = 2.0 * params.lam * s * v_xx_lam
    sin_amp = params.lam * (params.gamma_m * s * v_xx_lam + c)
    out = np.exp(-gam * t) * (cos_amp * np.cos(ox * t) + sin_amp * np.sin(ox * t) / ox)
    return np.where(t < 0.0, 0.0, out)


def filter_time_domain_ft(params: WorkingParams, Omega):
    """Analytic Fourier transform (int_0^inf K(t) e^{i Omega t} dt) of the kernel."""
    Omega = np.asarray(Omega, dtype=float)
    gam = decay_rate(params)
    ox = oscillation_frequency(params)
    s, c = params.sin_theta, params.cos_theta
    v_xx_lam = measurement_rate(params) / (params.lam**2 * s * s)
    cos_amp = 2.0 * params.lam * s * v_xx_lam
    sin_amp = params.lam * (params.gamma_m * s * v_xx_lam + c)
    pole = (gam - 1j * Omega)**2 + ox * ox
    return (cos_amp * (gam - 1j * Omega) + sin_amp) / pole


@dataclass(frozen=True)
class MutualFilters:
    """Per-channel and two-channel estimator responses of the mutual protocol."""

    k_q: np.ndarray      # single-channel quantum-record filter K_q^{A/B}
    k_aa: np.ndarray     # two-channel diagonal (theta = pi/2)
    k_ab: np.ndarray     # two-channel cross (theta = pi/2)


def mutual_filters(params: WorkingParams, Omega,
                   rates: tuple[float, float] | None = None) -> MutualFilters:
    """Estimator responses for the two-mirror protocol.

    The two-channel forms are derived for phase-quadrature readout and
    require theta = pi/2; the single-channel K_q is theta-general.  An
    explicitly asymmetric pair of measurement rates is rejected (the
    two-channel solution assumes matched conditional variances).
    """
    Omega = np.asarray(Omega, dtype=float)
    if rates is not None and not math.isclose(rates[0], rates[1], rel_tol=1e-12, abs_tol=0.0):
        raise ParameterError(f"asymmetric conditional variances not supported: {rates}")
    k_q = wiener_filter(params, Omega)
    if abs(params.theta - math.pi / 2) > 1e-12:
        nan = np.full_like(Omega, np.nan, dtype=complex)
        return MutualFilters(k_q=k_q, k_aa=nan, k_ab=nan)
    q = rates[0] if rates is not None else measurement_rate(params)
    A = q * (q + params.gamma_m - 1j * Omega)
    rp, rm = response_pm(params, Omega)
    lam = params.lam
    k_sum = A / (lam * (2.0 * A + rm))
    k_diff = A / (lam * (2.0 * A + rp))
    return MutualFilters(k_q=k_q, k_aa=k_sum + k_diff, k_ab=k_sum - k_diff)


def anticausal_mass(filter_freq, omega_max: float, n: int = 1 << 16) -> float:
    """Fraction of squared kernel mass at t < 0 for a sampled K(Omega).

    `filter_freq` is a callable Omega -> complex.  The response is sampled
    on a uniform grid over [-omega_max, omega_max) and inverted by FFT;
    the ratio returned is sum_{t<0} |k|^2 / sum_t |k|^2.
    """
    d_omega = 2.0 * omega_max / n
    grid = (np.arange(n) - n // 2) * d_omega
    K = np.asarray(filter_freq(grid), dtype=complex)
    # k(t_m) ~ sum_j K(Omega_j) e^{-i Omega_j t_m}: forward FFT of the
    # ifftshifted samples; t_m = m*dt with the upper half holding t < 0
    kt = np.fft.fft(np.fft.ifftshift(K))
    power = np.abs(kt) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    return float(np.sum(power[n // 2:]) / total)


def filter_pole_depths(params: WorkingParams) -> np.ndarray:
    """|Im| of the estimator poles (all must be strictly below the real axis)."""
    r = roots_for(params)
    poles = np.array([r.beta, -r.beta_c])
    return -poles.imag
