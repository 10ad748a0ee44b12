"""Output-light statistics: spectra, transfer functions, covariance blocks.

Everything here is a pure per-frequency evaluation in the internal
hbar = M = 1 units, with all spectra symmetrized two-sided densities
normalized to a shot-noise floor of one.  The semiclassical ("sn")
branches close the conditional-mean feedback loop through the causal
estimator, so the full record spectrum keeps the form
|A - R_m|^2 / |R_m|^2 with the bath entering through the conditional
variance; the "qg" branches treat the gravitational coupling as an
operator and follow from a plain linear input-output solve.

For the two-mirror protocol the exact A<->B exchange symmetry splits the
four output channels into independent sum (+) and difference (-) chains,
which is also how the covariance invariants are evaluated without
catastrophic cancellation at large measurement strength; see
`entanglement.negativity_spectrum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factorization import estimator_numerator_terms, roots_for
from .filters import record_numerator, response, response_m, response_pm, response_q
from .params import (Bath, ParameterError, Protocol, Theory, WorkingParams,
                     bath_force_density, derive_lam_tilde, quantum_bath_rate)
from .riccati import measurement_rate

__all__ = [
    "chi_q", "spectrum_self", "transfer_self", "covariance_self",
    "mutual_output_transfer", "covariance_mutual", "CovarianceBlocks",
    "mutual_stats", "MutualStats", "qg_mutual_linear_solve",
]


def chi_q(params: WorkingParams, Omega, mass: float | None = None):
    """Mechanical susceptibility at the shifted frequency.

    Returns the reduced, dimensionless combination lam^2 / R_q(Omega)
    (what multiplies every occurrence of the raw susceptibility in the
    normalized spectra); with `mass` given, returns the raw
    1/(M (omega_q^2 - Omega^2 - i gamma Omega)) instead.
    """
    rq = response_q(params, Omega)
    if mass is not None:
        return 1.0 / (mass * rq)
    return params.lam**2 / rq


def _zero_bath(params: WorkingParams) -> WorkingParams:
    if params.bath is Bath.NONE:
        return params
    return params.replace(bath=Bath.NONE, lam_tilde=params.lam)


def spectrum_self(params: WorkingParams, Omega, components: bool = False):
    """Record spectrum S(Omega) of the self protocol, any theory/bath.

    With components=True returns (S, dict) where the dict splits S into
    the shot/back-action part, the direct bath part, and the
    self-gravity part; the three sum to S exactly.
    """
    if params.protocol is not Protocol.SELF_GRAVITY:
        raise ParameterError("spectrum_self requires the self protocol")
    Omega = np.asarray(Omega, dtype=float)
    rm = response_m(params, Omega)
    rm2 = np.abs(rm) ** 2
    if params.bath is Bath.CLASSICAL:
        p_filter = _zero_bath(params)
        bath = bath_force_density(params) * params.lam**2 * params.sin_theta**2 / rm2
    else:
        p_filter = params
        bath = np.zeros_like(rm2)
    A = record_numerator(p_filter, Omega)
    S = np.abs(A - rm) ** 2 / rm2 + bath
    if not components:
        return S
    lam = params.lam
    s, s2 = params.sin_theta, math.sin(2.0 * params.theta)
    shot_ba = 1.0 + (lam**4 * s * s + lam**2 * s2 * (params.omega_m**2 - Omega**2)) / rm2
    bath_line = bath_force_density(params) * lam**2 * s * s / rm2
    wsn2 = params.omega_sn_sq
    r = roots_for(p_filter)
    sn_line = wsn2 * (2.0 * params.omega_q**2 + lam**2 * s2 - math.sqrt(r.a2)) / rm2
    return S, {"shot_backaction": shot_ba, "bath": bath_line, "sn": sn_line}


def transfer_self(params: WorkingParams, Omega):
    """K_yy(Omega): map from the quantum record to the full record."""
    params.require_sin_theta()
    Omega = np.asarray(Omega, dtype=float)
    p_filter = _zero_bath(params) if params.bath is Bath.CLASSICAL else params
    A = record_numerator(p_filter, Omega)
    rm = response_m(params, Omega)
    rq = response_q(params, Omega)
    return (rq / rm) * (A - rm) / (A - rq)


def quantum_record_spectrum(params: WorkingParams, Omega):
    """S of the quantum record: 1 + lam^2 sin2t Re(1/R_q) + lam^2 lt^2 s^2/|R_q|^2."""
    Omega = np.asarray(Omega, dtype=float)
    rq = response_q(params, Omega)
    rq2 = np.abs(rq) ** 2
    lam = params.lam
    s2 = math.sin(2.0 * params.theta)
    ss = params.sin_theta**2
    lam2_lt2 = lam**4 + lam * lam * quantum_bath_rate(params)
    return 1.0 + lam * lam * s2 * rq.real / rq2 + lam2_lt2 * ss / rq2


def covariance_self(params: WorkingParams, Omega):
    """Frequency-resolved 2x2 covariance of the (amplitude, phase) data channels.

    Returns (V, det) with V of shape (..., 2, 2), Hermitian per frequency,
    and det real.  The construction fixes the data channels at theta = 0
    and theta = pi/2 regardless of params.theta.
    """
    Omega = np.asarray(Omega, dtype=float)
    p2 = params.replace(theta=math.pi / 2)
    rq = response_q(params, Omega)
    rq2 = np.abs(rq) ** 2
    rm2 = np.abs(response_m(params, Omega)) ** 2
    lam = params.lam
    g = lam * lam / rq
    s_f = bath_force_density(params)
    if params.theory is Theory.QG:
        one = np.ones_like(Omega)
        rm = response_m(params, Omega)
        cross = lam * lam / rm
        v22 = 1.0 + lam**4 / rm2 + s_f * lam * lam / rm2
        V = _pack2(one, np.conj(cross), cross, v22)
        det = 1.0 + s_f * lam * lam / rm2
        return V, det
    if params.bath is Bath.CLASSICAL:
        k0 = transfer_self(_zero_bath(p2), Omega)
        cross = k0 * np.conj(g)
        bath_cl = s_f * lam * lam / rm2
        v22 = np.abs(k0) ** 2 * (1.0 + lam**4 / rq2) + bath_cl
        V = _pack2(np.ones_like(Omega), np.conj(cross), cross, v22)
        det = np.abs(k0) ** 2 + bath_cl
        return V, det
    bath_q = quantum_bath_rate(params) * lam * lam / rq2
    kyy = transfer_self(p2, Omega)
    cross = kyy * np.conj(g)
    s22 = 1.0 + lam**4 / rq2 + bath_q
    v22 = np.abs(kyy) ** 2 * s22
    V = _pack2(np.ones_like(Omega), np.conj(cross), cross, v22)
    det = np.abs(kyy) ** 2 * (1.0 + bath_q)
    return V, det


def _pack2(m11, m12, m21, m22) -> np.ndarray:
    m11, m12, m21, m22 = np.broadcast_arrays(m11, m12, m21, m22)
    out = np.empty(m11.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m11
    out[..., 0, 1] = m12
    out[..., 1, 0] = m21
    out[..., 1, 1] = m22
    return out


# ---------------------------------------------------------------------------
# mutual protocol
# ---------------------------------------------------------------------------

def mutual_output_transfer(params: WorkingParams, Omega, route: str = "wiener"):
    """(T_AA, T_AB): coefficients mapping the quantum records to the outputs.

    route="wiener" builds them from the spectral-factorization roots,
    route="sme" from the two-channel steady-state filter (theta = pi/2
    only); the two agree identically for a symmetric configuration.
    """
    if params.protocol is not Protocol.MUTUAL_GRAVITY:
        raise ParameterError("mutual_output_transfer requires the mutual protocol")
    Omega = np.asarray(Omega, dtype=float)
    p = _zero_bath(params) if params.bath is Bath.CLASSICAL else params
    rp, rm_ = response_pm(params, Omega)
    rq = response_q(params, Omega)
    wg2 = params.omega_grav**2
    if route == "wiener":
        r = roots_for(p)
        const, two_q = estimator_numerator_terms(p)
        D = (r.beta - Omega) * (Omega + r.beta_c)
        k = (const - 1j * Omega * two_q) / D      # = lam sin(theta) K_q = (D - R_q)/D
        t_aa = 1.0 + wg2 * wg2 * k / (rp * rm_)
        t_ab = wg2 * rq * k / (rp * rm_)
        return t_aa, t_ab
    if route == "sme":
        if abs(params.theta - math.pi / 2) > 1e-12:
            raise ParameterError("the two-channel filter route requires theta = pi/2")
        q = measurement_rate(p)
        A = q * (q + params.gamma_m - 1j * Omega)
        common = 2.0 * A / ((2.0 * A + rq) * rp * rm_)
        return 1.0 + wg2 * wg2 * common, wg2 * rq * common
    raise ValueError(f"unknown route {route!r}")


@dataclass(frozen=True)
class MutualStats:
    """Per-frequency second-order statistics of the two-mirror outputs.

    `c_diag`/`c_cross` are the amplitude-phase cross entries S_{y2A,y1A}
    and S_{y2A,y1B}; `s22_diag`/`s22_cross` the phase auto- and
    cross-spectra.  `det_plus`/`det_minus` are the 2x2 determinants of the
    sum/difference channels in analytically reduced (cancellation-free)
    form; the exchange symmetry gives det(sigma_4x4) = det_plus*det_minus
    and Sigma = 4|c_cross|^2 + det_plus + det_minus.
    """

    c_diag: np.ndarray
    c_cross: np.ndarray
    s22_diag: np.ndarray
    s22_cross: np.ndarray
    det_plus: np.ndarray
    det_minus: np.ndarray


def mutual_stats(params: WorkingParams, Omega) -> MutualStats:
    """Output statistics of the mutual protocol at theta = pi/2 readout."""
    if params.protocol is not Protocol.MUTUAL_GRAVITY:
        raise ParameterError("mutual_stats requires the mutual protocol")
    Omega = np.asarray(Omega, dtype=float)
    rp, rm_ = response_pm(params, Omega)
    rq = response_q(params, Omega)
    lam = params.lam
    wg2 = params.omega_grav**2
    s_f = bath_force_density(params)
    # thermal force transfers (operator force in QG, conditional-mean force
    # under the classical prescription; identical coefficients)
    th_diag = s_f * lam * lam * (np.abs(rq) ** 2 + wg2 * wg2) / np.abs(rp * rm_) ** 2
    th_cross = 2.0 * s_f * lam * lam * wg2 * rq.real / np.abs(rp * rm_) ** 2
    th_plus = s_f * lam * lam / np.abs(rm_) ** 2
    th_minus = s_f * lam * lam / np.abs(rp) ** 2
    if params.theory is Theory.QG:
        g_aa = lam * lam * rq / (rp * rm_)
        g_ab = lam * lam * wg2 / (rp * rm_)
        return MutualStats(
            c_diag=g_aa, c_cross=g_ab,
            s22_diag=1.0 + np.abs(g_aa) ** 2 + np.abs(g_ab) ** 2 + th_diag,
            s22_cross=2.0 * (g_aa * np.conj(g_ab)).real + th_cross,
            det_plus=1.0 + th_plus, det_minus=1.0 + th_minus)
    p = _zero_bath(params) if params.bath is Bath.CLASSICAL else params
    q = measurement_rate(p)
    A = q * (q + params.gamma_m - 1j * Omega)
    g = lam * lam / rq
    rq2 = np.abs(rq) ** 2
    bath_q = quantum_bath_rate(params) * lam * lam / rq2
    s22q = 1.0 + lam**4 / rq2 + bath_q
    denom = 2.0 * A + rq
    t_plus = rq * (2.0 * A + rm_) / (rm_ * denom)     # sum channel
    t_minus = rq * (2.0 * A + rp) / (rp * denom)      # difference channel
    t_ab = 2.0 * A * wg2 * rq / (denom * rp * rm_)
    t_aa = 1.0 + 2.0 * A * wg2 * wg2 / (denom * rp * rm_)
    if params.bath is Bath.CLASSICAL:
        return MutualStats(
            c_diag=t_aa * g, c_cross=t_ab * g,
            s22_diag=(np.abs(t_aa) ** 2 + np.abs(t_ab) ** 2) * s22q + th_diag,
            s22_cross=2.0 * (t_aa * np.conj(t_ab)).real * s22q + th_cross,
            det_plus=np.abs(t_plus) ** 2 + th_plus,
            det_minus=np.abs(t_minus) ** 2 + th_minus)
    return MutualStats(
        c_diag=t_aa * g, c_cross=t_ab * g,
        s22_diag=(np.abs(t_aa) ** 2 + np.abs(t_ab) ** 2) * s22q,
        s22_cross=2.0 * (t_aa * np.conj(t_ab)).real * s22q,
        det_plus=np.abs(t_plus) ** 2 * (1.0 + bath_q),
        det_minus=np.abs(t_minus) ** 2 * (1.0 + bath_q))


@dataclass(frozen=True)
class CovarianceBlocks:
    """2x2 blocks sigma_A, sigma_B, sigma_AB of the joint output covariance."""

    sigma_a: np.ndarray
    sigma_b: np.ndarray
    sigma_ab: np.ndarray

    def validate(self, tol: float = 1e-10) -> "CovarianceBlocks":
        for name, blk in (("sigma_a", self.sigma_a), ("sigma_b", self.sigma_b)):
            herm = np.abs(blk - np.conj(np.swapaxes(blk, -1, -2)))
            scale = np.maximum(np.abs(blk).max(axis=(-1, -2)), 1.0)
            if np.any(herm.max(axis=(-1, -2)) > tol * scale):
                raise ParameterError(f"{name} is not Hermitian within tolerance")
            diag = np.stack([blk[..., 0, 0], blk[..., 1, 1]], axis=-1)
            if np.any(np.abs(diag.imag) > tol * scale[..., None]) or np.any(diag.real < -tol):
                raise ParameterError(f"{name} has an invalid diagonal")
        return self


def covariance_mutual(params: WorkingParams, Omega, theory: Theory | None = None) -> CovarianceBlocks:
    """Output covariance blocks of the mutual protocol (theta = pi/2 channels)."""
    if theory is not None and theory is not params.theory:
        params = derive_lam_tilde(params.replace(theory=theory))
    st = mutual_stats(params, Omega)
    one = np.ones_like(np.asarray(Omega, dtype=float))
    zero = np.zeros_like(one)
    sigma_a = _pack2(one, np.conj(st.c_diag), st.c_diag, st.s22_diag)
    sigma_ab = _pack2(zero, np.conj(st.c_cross), st.c_cross, st.s22_cross)
    return CovarianceBlocks(sigma_a=sigma_a, sigma_b=sigma_a.copy(), sigma_ab=sigma_ab)


def qg_mutual_linear_solve(params: WorkingParams, Omega) -> CovarianceBlocks:
    """Brute-force operator-gravity covariance via a per-frequency linear solve.

    Independent oracle for the closed-form QG branch: solves the coupled
    response matrix for each drive channel (two amplitude quadratures,
    two thermal forces), assembles every covariance entry from the input
    densities, and never uses the +/- decomposition.
    """
    Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
    n = Omega.size
    lam = params.lam
    wg2 = params.omega_grav**2
    s_f = bath_force_density(params)
    rq = response_q(params, Omega)
    sigma_a = np.zeros((n, 2, 2), dtype=complex)
    sigma_ab = np.zeros((n, 2, 2), dtype=complex)
    drives = [(np.array([lam, 0.0]), 1.0), (np.array([0.0, lam]), 1.0),
              (np.array([1.0, 0.0]), s_f), (np.array([0.0, 1.0]), s_f)]
    for i in range(n):
        M = np.array([[rq[i], -wg2], [-wg2, rq[i]]], dtype=complex)
        # transfer of y2 = a2 + lam*x per drive channel
        t_a = np.zeros(4, dtype=complex)
        t_b = np.zeros(4, dtype=complex)
        dens = np.zeros(4)
        for ch, (vec, den) in enumerate(drives):
            x = np.linalg.solve(M, vec.astype(complex))
            t_a[ch] = lam * x[0]
            t_b[ch] = lam * x[1]
            dens[ch] = den
        s11 = 1.0
        s12 = np.conj(t_a[0]) * 1.0              # <a1A y2A*>, a1A drive channel 0
        s22 = 1.0 + np.sum(dens * np.abs(t_a) ** 2)
        sigma_a[i] = [[s11, s12], [np.conj(s12), s22]]
        c12 = np.conj(t_b[0]) * 1.0              # <a1A y2B*>
        c22 = np.sum(dens * t_a * np.conj(t_b))
        sigma_ab[i] = [[0.0, c12], [np.conj(c12), c22]]
    return CovarianceBlocks(sigma_a=sigma_a, sigma_b=sigma_a.copy(), sigma_ab=sigma_ab)
