"""Conditional second moments of the mirror state under continuous measurement.

The three coupled Riccati equations for (V_xx, V_xp, V_pp) are integrated
in zero-point units of the bare mechanical frequency: x in units of
sqrt(hbar/(2*M*omega_m)), p in units of sqrt(hbar*M*omega_m/2), so the
ground state is the identity covariance and the equations contain only
frequencies.  The stiffness entering the second moments is omega_q (the
gravity-shifted frequency); a quantum bath adds the momentum-diffusion
drive 4*gamma_m*theta_T/omega_m, while a classical bath leaves the
moments at their zero-bath values.

The steady state is available in closed form; `steady_moments` evaluates
it through two independent routes (the explicit radical and the
spectral-root representation (-gamma_m + i(beta - beta_c))/(2 alpha^2
sin^2 theta)) and checks their agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .factorization import roots_for
from .params import ParameterError, WorkingParams, quantum_bath_rate


class MomentsError(ValueError):
    """Covariance left the valid Gaussian cone."""


@dataclass(frozen=True)
class ConditionalMoments:
    """Second-order conditional moments, zero-point units (vacuum = (1, 0, 1))."""

    v_xx: float
    v_xp: float
    v_pp: float

    def validate(self, tol: float = 1e-9):
        scale = max(self.v_xx, self.v_pp, 1.0)
        if self.v_xx < -tol * scale or self.v_pp < -tol * scale:
            raise MomentsError(f"negative variance: {self}")
        if self.det < -tol * scale * scale:
            raise MomentsError(f"covariance not positive semidefinite: {self}")
        return self

    @property
    def det(self) -> float:
        return self.v_xx * self.v_pp - self.v_xp**2

    @classmethod
    def vacuum(cls) -> "ConditionalMoments":
        return cls(1.0, 0.0, 1.0)


def _bath_drive(params: WorkingParams) -> float:
    return quantum_bath_rate(params) / params.omega_m


def riccati_rhs(m: ConditionalMoments, params: WorkingParams) -> tuple[float, float, float]:
    """Time derivatives of the scaled conditional moments."""
    wm, g = params.omega_m, params.gamma_m
    wq2_over_wm = params.omega_q**2 / wm
    lam2_over_wm = params.lam**2 / wm
    s, c = params.sin_theta, params.cos_theta
    meas = lam2_over_wm * s * s
    cross = lam2_over_wm * s * c
    d_xx = 2.0 * wm * m.v_xp - meas * m.v_xx**2
    d_xp = (-g * m.v_xp + wm * m.v_pp - wq2_over_wm * m.v_xx
            - meas * m.v_xx * m.v_xp - cross * m.v_xx)
    d_pp = (-2.0 * g * m.v_pp - 2.0 * wq2_over_wm * m.v_xp - meas * m.v_xp**2
            + lam2_over_wm * s * s - 2.0 * cross * m.v_xp + _bath_drive(params))
    return (d_xx, d_xp, d_pp)


def riccati_step(m: ConditionalMoments, params: WorkingParams, dt: float,
                 tol: float = 1e-9) -> ConditionalMoments:
    """One explicit Euler step; rejects steps that break covariance validity."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    d_xx, d_xp, d_pp = riccati_rhs(m, params)
    out = ConditionalMoments(m.v_xx + dt * d_xx, m.v_xp + dt * d_xp, m.v_pp + dt * d_pp)
    return out.validate(tol)


def suggested_dt(params: WorkingParams, factor: float = 50.0) -> float:
    """Fixed step obeying dt <= min(2 pi / omega_q, 1/lam, 1/gamma_m)/factor."""
    scales = [2.0 * math.pi / params.omega_q if params.omega_q > 0 else math.inf]
    if params.lam > 0:
        scales.append(1.0 / params.lam)
    if params.gamma_m > 0:
        scales.append(1.0 / params.gamma_m)
    return min(scales) / factor


def measurement_rate(params: WorkingParams) -> float:
    """q = alpha^2 V_xx sin^2(theta) at steady state [rad/s].

    Evaluates the closed-form radical in a cancellation-free arrangement:
    with X = sqrt(a2) - a1, the rate is (sqrt(X) - gamma)/2, and
    X - gamma^2 = 4 lam^2 s^2 (lt^2 - lam^2 c^2) / (sqrt(a2) + 2 w^2
    + lam^2 sin2theta), which stays accurate when q << gamma or lam << w.
    """
    params.require_sin_theta()
    if params.lam <= 0:
        raise ParameterError("steady state undefined at lam = 0 (no measurement)")
    w, g = params.omega_q, params.gamma_m
    lam = params.lam
    s2 = math.sin(2.0 * params.theta)
    s = params.sin_theta
    qrate = quantum_bath_rate(params)
    inner = math.sqrt(w**4 + lam * lam * w * w * s2
                      + (lam**4 + lam * lam * qrate) * s * s)
    denom = 2.0 * inner + 2.0 * w * w + lam * lam * s2
    x_minus_g2 = 4.0 * lam * lam * s * s * (lam * lam * s * s + qrate) / denom
    x = x_minus_g2 + g * g
    return x_minus_g2 / (2.0 * (math.sqrt(x) + g))


def steady_moments(params: WorkingParams, cross_check_tol: float = 1e-10) -> ConditionalMoments:
    """Closed-form stationary moments (zero-point units).

    The V_xx radical is cross-checked against the spectral-root form
    (-gamma_m + i(beta - beta_c))/(2 alpha^2 sin^2 theta); disagreement
    beyond `cross_check_tol` (relative) raises MomentsError.
    """
    q = measurement_rate(params)
    roots = roots_for(params)
    q_roots = (-params.gamma_m + (1j * (roots.beta - roots.beta_c)).real) / 2.0
    # residual normalized by max(q, gamma): the -gamma + sqrt(X) cancellation
    # limits the root route's absolute accuracy to ~eps*gamma when q << gamma
    if abs(q_roots - q) > cross_check_tol * max(abs(q), params.gamma_m, 1e-280):
        raise MomentsError(
            f"steady V_xx routes disagree: radical {q}, roots {q_roots}")
    wm, g, w, lam = params.omega_m, params.gamma_m, params.omega_q, params.lam
    s, c = params.sin_theta, params.cos_theta
    u = q / (s * s)
    # alpha^2 V_xp / M = s^2 u^2; alpha^2 V_pp / M^2 = g s^2 u^2 + w^2 u + 2 s^4 u^3 + s c lam^2 u
    v_xx = 2.0 * wm * u / lam**2
    v_xp = 2.0 * (s * u)**2 / lam**2
    w_term = g * (s * u)**2 + w * w * u + 2.0 * (s * s * u)**2 * u + s * c * lam * lam * u
    v_pp = 2.0 * w_term / (lam**2 * wm)
    return ConditionalMoments(v_xx, v_xp, v_pp).validate()


def integrate_to_steady(params: WorkingParams, start: ConditionalMoments | None = None,
                        dt: float | None = None, rel_tol: float = 1e-12,
                        max_steps: int = 20_000_000) -> ConditionalMoments:
    """Long-time Riccati integration (independent oracle for the closed form)."""
    m = start if start is not None else ConditionalMoments.vacuum()
    h = dt if dt is not None else suggested_dt(params)
    prev = m
    for _ in range(max_steps):
        m = riccati_step(prev, params, h)
        scale = max(abs(m.v_xx), abs(m.v_xp), abs(m.v_pp), 1e-300)
        if (abs(m.v_xx - prev.v_xx) + abs(m.v_xp - prev.v_xp)
                + abs(m.v_pp - prev.v_pp)) < rel_tol * scale:
            return m
        prev = m
    raise MomentsError("Riccati integration did not converge")


def measurement_rate_from_moments(m: ConditionalMoments, params: WorkingParams) -> float:
    """q = alpha^2 V_xx sin^2 theta for arbitrary (not necessarily steady) moments."""
    return params.lam**2 * m.v_xx * params.sin_theta**2 / (2.0 * params.omega_m)
