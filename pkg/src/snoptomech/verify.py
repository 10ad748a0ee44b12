"""Randomized numerical verification of the cross-picture identities.

Each suite draws random configurations, evaluates one identity through
two independently coded routes, and reports the worst normalized
residual.  These are the equalities the rest of the package leans on:
the estimator synthesized by spectral factorization against the
steady-state filter, the quantum-record spectrum against its
root-factored form, the two-channel output relations of the mutual
protocol from the factorization route against the filter-matrix route,
the closed-form roots against companion-matrix eigenvalues, and the
determinant-form negativity against the symplectic eigenvalues on
real-valued blocks.

`perturb_beta` (a fractional shift applied to the factorization roots in
the estimator suite) is a negative-control hook: any nonzero value must
make the suite fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .entanglement import log_negativity, negativity_symplectic
from .factorization import (SpectralRoots, numerator_quartic, phi_minus, phi_plus,
                            roots_for, spectral_roots_numeric)
from .filters import kalman_filter, record_numerator, response_q, wiener_filter
from .params import Bath, Protocol, Theory, WorkingParams, derive_lam_tilde
from .riccati import measurement_rate
from .spectra import CovarianceBlocks, mutual_output_transfer, quantum_record_spectrum

DEFAULT_TOLERANCES = {
    "kalman_wiener": 1e-10,
    "spectrum_identity": 1e-10,
    "mutual_cross_method": 1e-10,
    "roots_companion": 1e-10,
    "factorization_reconstruction": 1e-10,
    "negativity_oracle": 1e-10,
}


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    draws: int


@dataclass(frozen=True)
class VerificationReport:
    seed: int
    n_draws: int
    passed: bool
    identities: list[IdentityResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "n_draws": self.n_draws, "passed": self.passed,
                "identities": [asdict(r) for r in self.identities]}


def _draw_params(rng: np.random.Generator, *, mutual: bool = False,
                 thermal: bool = False, sn_shift: bool = False) -> WorkingParams:
    """Random working configuration over the verification sweep ranges."""
    theta = rng.uniform(0.1, math.pi - 0.1)
    lam = 10.0 ** rng.uniform(-2.0, 2.0)
    gamma = 10.0 ** rng.uniform(-8.0, -1.0)
    theta_T = 10.0 ** rng.uniform(0.0, 4.0) if thermal and rng.random() < 0.7 else 0.0
    bath = Bath.QUANTUM if theta_T > 0 else Bath.NONE
    if mutual:
        omega_m = 1.0
        omega_g = 10.0 ** rng.uniform(-4.0, math.log10(0.3))
        omega_q = math.sqrt(omega_m**2 - omega_g**2)
        protocol, theory = Protocol.MUTUAL_GRAVITY, Theory.SN
    else:
        omega_q = 1.0
        omega_g = math.sqrt(rng.uniform(0.0, 3.0)) if sn_shift else 0.0
        omega_m = math.sqrt(max(omega_q**2 - omega_g**2, 0.04))
        protocol, theory = Protocol.SELF_GRAVITY, Theory.SN
    p = WorkingParams(omega_m=omega_m, gamma_m=gamma, omega_q=omega_q,
                      omega_grav=omega_g, lam=lam, lam_tilde=lam,
                      theta=theta, theta_T=theta_T,
                      protocol=protocol, theory=theory, bath=bath)
    return derive_lam_tilde(p)


def _grid(params: WorkingParams, points: int) -> np.ndarray:
    base = np.geomspace(1e-3, 1e3, points // 2) * params.omega_q
    fine = np.linspace(0.2, 3.0, points - points // 2) * params.omega_q
    return np.unique(np.concatenate([base, fine]))


def _rel_residual(x, y) -> float:
    x, y = np.asarray(x), np.asarray(y)
    denom = np.maximum(np.abs(x), np.abs(y))
    floor = 1e-280 + 0.0 * denom
    return float(np.max(np.abs(x - y) / np.maximum(denom, floor + np.max(denom) * 1e-14)))


def _perturbed(roots: SpectralRoots, eps: float) -> SpectralRoots:
    if eps == 0.0:
        return roots
    beta = roots.beta * (1.0 + eps)
    return SpectralRoots(a1=roots.a1, a2=roots.a2, a=beta.real, b=beta.imag,
                         beta=beta, beta_c=roots.beta_c, eta=roots.eta,
                         eta_c=roots.eta_c)


def check_kalman_wiener(rng, n_draws: int, grid_points: int = 10_000,
                        perturb_beta: float = 0.0) -> float:
    """Wiener (root form) vs steady-state filter (quantum-record form)."""
    worst = 0.0
    for _ in range(n_draws):
        p = _draw_params(rng, sn_shift=rng.random() < 0.5, thermal=True)
        grid = _grid(p, grid_points)
        kw = wiener_filter(p, grid, roots=_perturbed(roots_for(p), perturb_beta))
        kk = kalman_filter(p, grid, variant="quantum_record")
        worst = max(worst, _rel_residual(kw, kk))
    return worst


def check_spectrum_identity(rng, n_draws: int, grid_points: int = 4000) -> float:
    """Direct quantum-record spectrum vs |A - R_q|^2/|R_q|^2."""
    worst = 0.0
    for _ in range(n_draws):
        p = _draw_params(rng, sn_shift=rng.random() < 0.5, thermal=True)
        grid = _grid(p, grid_points)
        direct = quantum_record_spectrum(p, grid)
        rq = response_q(p, grid)
        A = record_numerator(p, grid)
        via_a = np.abs(A - rq) ** 2 / np.abs(rq) ** 2
        worst = max(worst, _rel_residual(direct, via_a))
    return worst


def check_mutual_cross_method(rng, n_draws: int, grid_points: int = 4000) -> float:
    """Output transfer pair: factorization route vs two-channel filter route."""
    worst = 0.0
    for _ in range(n_draws):
        p = _draw_params(rng, mutual=True, thermal=True)
        p = p.replace(theta=math.pi / 2)
        grid = _grid(p, grid_points)
        t_w = mutual_output_transfer(p, grid, route="wiener")
        t_s = mutual_output_transfer(p, grid, route="sme")
        worst = max(worst, _rel_residual(t_w[0], t_s[0]), _rel_residual(t_w[1], t_s[1]))
    return worst


def check_roots_companion(rng, n_draws: int) -> float:
    """Closed-form beta, beta_c vs companion-matrix eigenvalues."""
    worst = 0.0
    for _ in range(n_draws):
        p = _draw_params(rng, sn_shift=rng.random() < 0.5, thermal=True)
        closed = roots_for(p)
        numeric = spectral_roots_numeric(p)
        scale = max(abs(closed.beta), abs(closed.beta_c))
        worst = max(worst,
                    abs(closed.beta - numeric.beta) / scale,
                    abs(closed.beta_c - numeric.beta_c) / scale)
    return worst


def check_factorization_reconstruction(rng, n_draws: int, grid_points: int = 2000) -> float:
    """phi_plus * phi_minus vs the record spectrum on a dense real grid."""
    worst = 0.0
    for _ in range(n_draws):
        p = _draw_params(rng, sn_shift=rng.random() < 0.5, thermal=True)
        grid = _grid(p, grid_points)
        roots = roots_for(p)
        recon = phi_plus(roots, grid) * phi_minus(roots, grid)
        s = quantum_record_spectrum(p, grid)
        worst = max(worst, _rel_residual(recon.real, s),
                    float(np.max(np.abs(recon.imag) / np.maximum(s, 1e-280))))
    return worst


def random_real_blocks(rng) -> CovarianceBlocks:
    """Random valid real covariance blocks (positive definite 4x4)."""
    x = rng.normal(size=(4, 4))
    sigma = x @ x.T + 0.5 * np.eye(4)
    return CovarianceBlocks(sigma_a=sigma[None, :2, :2].astype(complex),
                            sigma_b=sigma[None, 2:, 2:].astype(complex),
                            sigma_ab=sigma[None, :2, 2:].astype(complex))


def check_negativity_oracle(rng, n_draws: int) -> float:
    """Determinant-form negativity vs symplectic eigenvalues on real blocks."""
    worst = 0.0
    for _ in range(n_draws):
        blocks = random_real_blocks(rng)
        a = log_negativity(blocks)
        b = negativity_symplectic(blocks)
        worst = max(worst, float(np.max(np.abs(a.raw - b.raw))),
                    float(np.max(np.abs(a.eps - b.eps))))
    return worst


_SUITES = {
    "kalman_wiener": check_kalman_wiener,
    "spectrum_identity": check_spectrum_identity,
    "mutual_cross_method": check_mutual_cross_method,
    "roots_companion": check_roots_companion,
    "factorization_reconstruction": check_factorization_reconstruction,
    "negativity_oracle": check_negativity_oracle,
}


def run_verification(seed: int = 0, n_draws: int = 100,
                     perturb_beta: float = 0.0,
                     tolerances: dict | None = None) -> VerificationReport:
    """Run every identity suite and collect a machine-readable report."""
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    results = []
    for suite_index, (name, fn) in enumerate(_SUITES.items()):
        rng = np.random.default_rng(np.random.SeedSequence((seed, suite_index)))
        kwargs = {"perturb_beta": perturb_beta} if name == "kalman_wiener" else {}
        worst = fn(rng, n_draws, **kwargs)
        results.append(IdentityResult(name=name, max_residual=worst,
                                      tolerance=tol[name],
                                      passed=bool(worst <= tol[name]),
                                      draws=n_draws))
    return VerificationReport(seed=seed, n_draws=n_draws,
                              passed=all(r.passed for r in results),
                              identities=results)
