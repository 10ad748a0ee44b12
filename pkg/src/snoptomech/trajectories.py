"""Stochastic conditional-mean trajectories and measurement records.

The conditional means evolve by Euler-Maruyama in zero-point units of the
bare mechanical frequency (x in sqrt(hbar/(2 M omega_m)), p in
sqrt(hbar M omega_m / 2)); the conditional second moments co-evolve
deterministically (they carry no measurement noise), either frozen at the
closed-form steady state or integrated alongside.

In the semiclassical self protocol the conditional-mean force from the
state-dependent potential cancels the stiffness shift, so the mean rings
at the bare frequency while the moments see the shifted one; in the
mutual protocol each mean is driven by the other mirror's conditional
mean through the gravity coupling.

Record samples are stored shot-noise-normalized: sample_k =
lam*sin(theta)*sqrt(dt/omega_m)*X_k + dW_k/sqrt(dt), so pure measurement
noise is a unit-variance white sequence and the averaged periodogram of
the samples estimates the analytic two-sided spectra directly.

Reproducibility: every (trajectory, noise channel) owns an independent
Philox stream seeded by SeedSequence((master_seed, trajectory_index,
channel_index)), so single trajectories replay exactly regardless of
ensemble size and channel labels can be swapped by swapping channel
indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Bath, ParameterError, Protocol, Theory, WorkingParams
from .riccati import ConditionalMoments, riccati_step, steady_moments, suggested_dt
from .welch import SegmentPolicy, SpectrumEstimate, WelchAccumulator


class TrajectoryError(ValueError):
    """Non-finite trajectory state or inconsistent run specification."""


@dataclass
class TrajectoryState:
    """Conditional means of an ensemble (one or two mirrors) plus moments."""

    x: np.ndarray                 # shape (n_channels, n_traj)
    p: np.ndarray
    moments: tuple[ConditionalMoments, ...]
    t: float = 0.0

    def validate(self) -> "TrajectoryState":
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise TrajectoryError(f"non-finite trajectory state at t={self.t}")
        return self


@dataclass(frozen=True)
class MeasurementRecord:
    """Shot-noise-normalized homodyne record(s)."""

    dt: float
    labels: tuple[str, ...]
    samples: np.ndarray           # shape (n_channels, n_samples)
    seed: int

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.labels):
            raise TrajectoryError("samples must be (n_channels, n_samples)")

    @property
    def duration(self) -> float:
        return self.samples.shape[1] * self.dt


def _weights(params: WorkingParams):
    lam_s = params.lam / math.sqrt(params.omega_m)
    s, c = params.sin_theta, params.cos_theta
    return lam_s, s, c


def initial_state(params: WorkingParams, n_traj: int, start: str = "steady") -> TrajectoryState:
    """Zero means with vacuum or closed-form steady moments."""
    n_ch = 2 if params.protocol is Protocol.MUTUAL_GRAVITY else 1
    m = steady_moments(params) if start == "steady" else ConditionalMoments.vacuum()
    return TrajectoryState(x=np.zeros((n_ch, n_traj)), p=np.zeros((n_ch, n_traj)),
                           moments=(m,) * n_ch, t=0.0)


def trajectory_step_self(state: TrajectoryState, params: WorkingParams, dW: np.ndarray,
                         dt: float, dW_th: np.ndarray | None = None,
                         evolve_moments: bool = False):
    """One Euler-Maruyama step of the single-mirror conditional mean.

    dW ~ N(0, dt) per trajectory.  Returns (state', samples) with the
    record sample formed from the pre-step mean and the same increment.
    """
    if params.protocol is not Protocol.SELF_GRAVITY:
        raise ParameterError("trajectory_step_self requires the self protocol")
    lam_s, s, c = _weights(params)
    wm, g = params.omega_m, params.gamma_m
    m = state.moments[0]
    x, p = state.x[0], state.p[0]
    sample = lam_s * s * math.sqrt(dt) * x + dW / math.sqrt(dt)
    x_new = x + wm * p * dt + lam_s * s * m.v_xx * dW
    p_new = p - wm * x * dt - g * p * dt + lam_s * (s * m.v_xp + c) * dW
    if params.bath is Bath.CLASSICAL and params.theta_T > 0:
        if dW_th is None:
            raise TrajectoryError("classical bath requires a thermal increment")
        p_new = p_new + math.sqrt(4.0 * g * params.theta_T / wm) * dW_th
    m_new = riccati_step(m, params, dt) if evolve_moments else m
    out = TrajectoryState(x=x_new[None, :], p=p_new[None, :], moments=(m_new,),
                          t=state.t + dt)
    return out.validate(), sample


def trajectory_step_mutual(state: TrajectoryState, params: WorkingParams,
                           dW_a: np.ndarray, dW_b: np.ndarray, dt: float,
                           dW_th: tuple[np.ndarray, np.ndarray] | None = None,
                           evolve_moments: bool = False):
    """One Euler-Maruyama step of the two-mirror conditional means (theta = pi/2)."""
    if params.protocol is not Protocol.MUTUAL_GRAVITY:
        raise ParameterError("trajectory_step_mutual requires the mutual protocol")
    if params.theory is not Theory.SN:
        raise ParameterError("mutual trajectories are defined for the semiclassical theory")
    if abs(params.theta - math.pi / 2) > 1e-12:
        raise ParameterError("mutual trajectories require theta = pi/2")
    lam_s, _, _ = _weights(params)
    wm, g = params.omega_m, params.gamma_m
    k_self = params.omega_q**2 / wm
    k_cross = params.omega_grav**2 / wm
    m_a, m_b = state.moments
    xa, xb = state.x
    pa, pb = state.p
    rt = math.sqrt(dt)
    samples = np.stack([lam_s * rt * xa + dW_a / rt, lam_s * rt * xb + dW_b / rt])
    xa_new = xa + wm * pa * dt + lam_s * m_a.v_xx * dW_a
    xb_new = xb + wm * pb * dt + lam_s * m_b.v_xx * dW_b
    pa_new = pa + (-k_self * xa + k_cross * xb - g * pa) * dt + lam_s * m_a.v_xp * dW_a
    pb_new = pb + (-k_self * xb + k_cross * xa - g * pb) * dt + lam_s * m_b.v_xp * dW_b
    if params.bath is Bath.CLASSICAL and params.theta_T > 0:
        if dW_th is None:
            raise TrajectoryError("classical bath requires thermal increments")
        amp = math.sqrt(4.0 * g * params.theta_T / wm)
        pa_new = pa_new + amp * dW_th[0]
        pb_new = pb_new + amp * dW_th[1]
    mom = tuple(riccati_step(m, params, dt) for m in state.moments) if evolve_moments \
        else state.moments
    out = TrajectoryState(x=np.stack([xa_new, xb_new]), p=np.stack([pa_new, pb_new]),
                          moments=mom, t=state.t + dt)
    return out.validate(), samples


class _NoiseBank:
    """Per-(trajectory, channel) Philox streams, drawn in step chunks."""

    def __init__(self, master_seed: int, n_traj: int, n_channels: int, chunk: int):
        self.chunk = chunk
        self.n_traj = n_traj
        self.n_channels = n_channels
        self._gens = [
            [np.random.Generator(np.random.Philox(
                np.random.SeedSequence((master_seed, traj, ch))))
             for traj in range(n_traj)]
            for ch in range(n_channels)]
        self._buf = np.empty((n_channels, n_traj, chunk))
        self._pos = chunk

    def draw(self) -> np.ndarray:
        """Next (n_channels, n_traj) matrix of standard normals."""
        if self._pos >= self.chunk:
            for ch in range(self.n_channels):
                for traj in range(self.n_traj):
                    self._buf[ch, traj] = self._gens[ch][traj].standard_normal(self.chunk)
            self._pos = 0
        out = self._buf[:, :, self._pos]
        self._pos += 1
        return out


def _channels_needed(params: WorkingParams) -> int:
    n = 2 if params.protocol is Protocol.MUTUAL_GRAVITY else 1
    if params.bath is Bath.CLASSICAL and params.theta_T > 0:
        n *= 2
    return n


def simulate_record(params: WorkingParams, *, duration: float, dt: float | None = None,
                    seed: int = 0, n_traj: int = 1, burn_in: float = 0.0,
                    start: str = "steady", evolve_moments: bool = False,
                    decimate: int = 1, return_means: bool = False):
    """Materialized records, one MeasurementRecord per trajectory.

    `decimate` block-averages the stored samples by the given factor
    (rescaled so white noise stays unit variance); the effective sample
    interval is decimate*dt.  With return_means=True also returns the
    conditional-mean displacement (zero-point units, block-averaged) as
    an (n_channels, n_traj, n_samples) array.
    """
    h = dt if dt is not None else suggested_dt(params)
    n_out = max(1, int(round(duration / (h * decimate))))
    burn_steps = int(round(burn_in / h))
    mutual = params.protocol is Protocol.MUTUAL_GRAVITY
    n_meas = 2 if mutual else 1
    out = np.empty((n_meas, n_traj, n_out))
    means = np.empty((n_meas, n_traj, n_out)) if return_means else None
    for written, block, mean_block in _run(params, h, n_out, burn_steps, n_traj,
                                           seed, start, evolve_moments, decimate):
        out[:, :, written - 1] = block
        if means is not None:
            means[:, :, written - 1] = mean_block
    labels = ("y2A", "y2B") if mutual else ("y_theta",)
    records = [MeasurementRecord(dt=h * decimate, labels=labels,
                                 samples=out[:, k, :], seed=seed)
               for k in range(n_traj)]
    if return_means:
        return records, means
    return records


def _run(params, h, n_out, burn_steps, n_traj, seed, start, evolve_moments, decimate):
    """Core ensemble loop.

    Yields (written, block, mean_block) once per decimated output sample:
    `block` is the (n_meas, n_traj) matrix of normalized record samples,
    `mean_block` the block-averaged conditional-mean displacement.
    """
    mutual = params.protocol is Protocol.MUTUAL_GRAVITY
    n_meas = 2 if mutual else 1
    thermal = params.bath is Bath.CLASSICAL and params.theta_T > 0
    bank = _NoiseBank(seed, n_traj, _channels_needed(params), chunk=2048)
    state = initial_state(params, n_traj, start)
    acc = np.zeros((n_meas, n_traj))
    acc_mean = np.zeros((n_meas, n_traj))
    written = 0
    n_steps = n_out * decimate
    for k in range(-burn_steps, n_steps):
        pre_x = state.x
        draws = bank.draw() * math.sqrt(h)
        if mutual:
            dth = (draws[2], draws[3]) if thermal else None
            state, samples = trajectory_step_mutual(
                state, params, draws[0], draws[1], h, dW_th=dth,
                evolve_moments=evolve_moments)
        else:
            dth = draws[1] if thermal else None
            state, samples = trajectory_step_self(
                state, params, draws[0], h, dW_th=dth, evolve_moments=evolve_moments)
            samples = samples[None, :]
        if k < 0:
            continue
        acc += samples
        acc_mean += pre_x
        if (k + 1) % decimate == 0:
            written += 1
            yield written, acc / math.sqrt(decimate), acc_mean / decimate
            acc[:] = 0.0
            acc_mean[:] = 0.0


def ensemble_spectrum(params: WorkingParams, *, dt: float, n_traj: int, seed: int,
                      n_segments: int, policy: SegmentPolicy,
                      burn_in: float = 0.0, decimate: int = 1, start: str = "steady",
                      evolve_moments: bool = False, cross: bool = False
                      ) -> SpectrumEstimate | tuple[SpectrumEstimate, SpectrumEstimate]:
    """Streaming ensemble Welch estimate of the record spectrum.

    Runs n_segments consecutive segments of policy.segment_samples
    decimated samples per trajectory, feeding each completed segment to
    the averaged-periodogram accumulator; with cross=True (mutual
    protocol) also returns the A-B cross-spectrum estimate.  Memory stays
    at one segment per trajectory regardless of run length.
    """
    mutual = params.protocol is Protocol.MUTUAL_GRAVITY
    n_meas = 2 if mutual else 1
    if cross and not mutual:
        raise TrajectoryError("cross-spectrum requires the mutual protocol")
    nseg = policy.segment_samples
    h_dec = dt * decimate
    acc_auto = WelchAccumulator(policy, h_dec)
    acc_cross = WelchAccumulator(policy, h_dec) if cross else None
    buf = np.empty((n_meas, n_traj, nseg))
    burn_steps = int(round(burn_in / dt))
    for written, block, _ in _run(params, dt, nseg * n_segments, burn_steps, n_traj,
                                  seed, start, evolve_moments, decimate):
        idx = (written - 1) % nseg
        buf[:, :, idx] = block
        if idx == nseg - 1:
            for ch in range(n_meas):
                acc_auto.add(buf[ch])
            if acc_cross is not None:
                acc_cross.add(buf[0], buf[1])
    auto = acc_auto.result()
    if cross:
        return auto, acc_cross.result()
    return auto
