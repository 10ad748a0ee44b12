"""Gaussian entanglement of the joint outgoing-light data channels.

The logarithmic negativity of a two-mode Gaussian state follows from the
covariance blocks alone: with Sigma = det(sigma_A) + det(sigma_B)
- 2 det(sigma_AB) and the full 4x4 determinant det(sigma), the smallest
partial-transpose symplectic eigenvalue is
nu^2 = (Sigma - sqrt(Sigma^2 - 4 det sigma))/2 and
eps_N = max{-ln(nu), 0}.

Frequency-resolved blocks have complex Hermitian off-diagonals; the
determinant formula (real for Hermitian blocks) is the defining
prescription there.  For real-valued covariance matrices the formula
coincides with the symplectic-eigenvalue computation, which
`negativity_symplectic` implements as an independent check; for complex
blocks the two are inequivalent and only the determinant form is used.

`negativity_spectrum` evaluates the mutual-protocol curves through the
sum/difference channel chains, which keeps every invariant
cancellation-free even at measurement strengths where the raw covariance
entries span ~25 decades.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Theory, WorkingParams, derive_lam_tilde
from .spectra import CovarianceBlocks, mutual_stats

__all__ = ["NegativityResult", "log_negativity", "negativity_symplectic",
           "negativity_spectrum"]


class NegativityError(ValueError):
    """Blocks outside the domain of the negativity formula."""


@dataclass(frozen=True)
class NegativityResult:
    """Negativity data per frequency point."""

    sigma_sum: np.ndarray     # Sigma = det A + det B - 2 det C
    det_sigma: np.ndarray     # det of the assembled 4x4 matrix
    raw: np.ndarray           # N = -(1/2) ln[(Sigma - sqrt(...))/2], sign kept
    eps: np.ndarray           # max(N, 0)


def _neg_from_invariants(sigma_sum, det_sigma) -> NegativityResult:
    sigma_sum = np.asarray(sigma_sum, dtype=float)
    det_sigma = np.asarray(det_sigma, dtype=float)
    disc = sigma_sum**2 - 4.0 * det_sigma
    if np.any(disc < 0):
        worst = float(np.min(disc))
        raise NegativityError(f"negative discriminant Sigma^2 - 4 det sigma = {worst}")
    nu2 = 2.0 * det_sigma / (sigma_sum + np.sqrt(disc))
    if np.any(nu2 <= 0):
        raise NegativityError("non-positive partial-transpose eigenvalue")
    raw = -0.5 * np.log(nu2)
    return NegativityResult(sigma_sum=sigma_sum, det_sigma=det_sigma,
                            raw=raw, eps=np.maximum(raw, 0.0))


def _det2(block) -> np.ndarray:
    return (block[..., 0, 0] * block[..., 1, 1]
            - block[..., 0, 1] * block[..., 1, 0])


def log_negativity(blocks: CovarianceBlocks, herm_tol: float = 1e-10) -> NegativityResult:
    """Negativity from covariance blocks via the determinant formula."""
    blocks.validate(herm_tol)
    det_a = _det2(blocks.sigma_a)
    det_b = _det2(blocks.sigma_b)
    det_c = _det2(blocks.sigma_ab)
    for name, d in (("sigma_a", det_a), ("sigma_b", det_b), ("sigma_ab", det_c)):
        scale = np.maximum(np.abs(d), 1.0)
        if np.any(np.abs(d.imag) > herm_tol * scale):
            raise NegativityError(f"det {name} is not real")
    sigma_sum = det_a.real + det_b.real - 2.0 * det_c.real
    full = np.concatenate([
        np.concatenate([blocks.sigma_a, blocks.sigma_ab], axis=-1),
        np.concatenate([np.conj(np.swapaxes(blocks.sigma_ab, -1, -2)), blocks.sigma_b], axis=-1),
    ], axis=-2)
    det_sigma = np.linalg.det(full).real
    return _neg_from_invariants(sigma_sum, det_sigma)


_J4 = np.array([[0, 1, 0, 0],
                [-1, 0, 0, 0],
                [0, 0, 0, 1],
                [0, 0, -1, 0]], dtype=float)
_PT = np.diag([1.0, 1.0, 1.0, -1.0])


def negativity_symplectic(blocks: CovarianceBlocks, real_tol: float = 1e-10) -> NegativityResult:
    """Independent route: smallest symplectic eigenvalue of the partial transpose.

    Valid for real-valued covariance blocks only (where it provably equals
    the determinant formula); complex blocks are rejected.
    """
    full = np.concatenate([
        np.concatenate([blocks.sigma_a, blocks.sigma_ab], axis=-1),
        np.concatenate([np.conj(np.swapaxes(blocks.sigma_ab, -1, -2)), blocks.sigma_b], axis=-1),
    ], axis=-2)
    if np.any(np.abs(full.imag) > real_tol * np.maximum(np.abs(full).max(), 1.0)):
        raise NegativityError("symplectic route requires real covariance blocks")
    st = _PT @ full.real @ _PT
    ev = np.linalg.eigvals(1j * _J4 @ st)
    nus = np.sort(np.abs(ev.real), axis=-1)
    nu_min = nus[..., 0]
    raw = -np.log(nu_min)
    det_sigma = np.linalg.det(full.real)
    det_a, det_b, det_c = (_det2(blocks.sigma_a).real, _det2(blocks.sigma_b).real,
                           _det2(blocks.sigma_ab).real)
    return NegativityResult(sigma_sum=det_a + det_b - 2.0 * det_c,
                            det_sigma=det_sigma, raw=raw,
                            eps=np.maximum(raw, 0.0))


def negativity_spectrum(params: WorkingParams, Omega,
                        theory: Theory | None = None) -> NegativityResult:
    """Mutual-protocol negativity curves via the sum/difference channels.

    The exchange symmetry gives det(sigma) = det(sigma_+) det(sigma_-) and
    Sigma = 4|c_cross|^2 + det(sigma_+) + det(sigma_-), with each
    single-channel determinant available in analytically reduced form;
    no large-number cancellation occurs at any measurement strength.
    """
    if theory is not None and theory is not params.theory:
        params = derive_lam_tilde(params.replace(theory=theory))
    st = mutual_stats(params, Omega)
    sigma_sum = (4.0 * np.abs(st.c_cross) ** 2 + st.det_plus + st.det_minus).real
    det_sigma = (st.det_plus * st.det_minus).real
    return _neg_from_invariants(sigma_sum, det_sigma)
