"""Averaged-periodogram spectral estimation for measurement records.

Normalization matches the analytic curves: records are stored so that
pure measurement noise is a unit-variance white sequence, and the
estimator divides each windowed periodogram by sum(w^2), so white input
gives a flat density of one (the two-sided convention reported on
positive-frequency bins only).

High-Q mechanics put an effectively coherent, statistically unresolvable
tone at the mechanical frequency into every record; the segmenting
policy therefore supports projecting out known tones (and a low-order
polynomial trend) from each segment before windowing, which removes the
line without biasing bins more than a few bin widths away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SpectrumEstimateError(ValueError):
    """Record too short (or policy inconsistent) for the requested estimate."""


@dataclass(frozen=True)
class SegmentPolicy:
    """Segmenting/windowing policy of the averaged periodogram."""

    segment_samples: int
    window: str = "boxcar"            # "boxcar" | "hann"
    detrend_order: int = 1            # polynomial order projected out; -1 disables
    notch_freqs: tuple = ()           # angular frequencies projected out per segment
    notch_ramped: bool = True         # also project t*cos, t*sin (drifting tone amplitude)
    min_segments: int = 32

    def window_values(self) -> np.ndarray:
        n = self.segment_samples
        if self.window == "boxcar":
            return np.ones(n)
        if self.window == "hann":
            return 0.5 - 0.5 * np.cos(2.0 * math.pi * np.arange(n) / n)
        raise SpectrumEstimateError(f"unknown window {self.window!r}")

    def regressors(self, dt: float) -> np.ndarray | None:
        n = self.segment_samples
        t = np.arange(n) * dt
        tt = np.linspace(-1.0, 1.0, n)
        cols = []
        if self.detrend_order >= 0:
            cols.extend(tt**k for k in range(self.detrend_order + 1))
        for w in self.notch_freqs:
            cols.append(np.cos(w * t))
            cols.append(np.sin(w * t))
            if self.notch_ramped:
                cols.append(tt * np.cos(w * t))
                cols.append(tt * np.sin(w * t))
        if not cols:
            return None
        x = np.stack(cols, axis=1)
        q, _ = np.linalg.qr(x)
        return q


@dataclass(frozen=True)
class SpectrumEstimate:
    """Averaged periodogram with per-bin standard errors."""

    omega: np.ndarray          # angular frequencies of the bins [rad/s]
    values: np.ndarray         # density (real) or cross-density (complex)
    stderr: np.ndarray         # standard error of the mean, per bin
    n_segments: int
    dt: float

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.omega / (2.0 * math.pi)


class WelchAccumulator:
    """Streaming averaged periodogram over batches of equal-length segments.

    Feed `add(a)` (or `add(a, b)` for a cross-spectrum) arrays of shape
    (n_records, segment_samples); results average over every segment of
    every record seen so far.
    """

    def __init__(self, policy: SegmentPolicy, dt: float):
        self.policy = policy
        self.dt = dt
        self._win = policy.window_values()
        self._norm = float(np.sum(self._win**2))
        self._q = policy.regressors(dt)
        self._count = 0
        self._sum = None
        self._sumsq = None

    def _periodogram(self, seg: np.ndarray) -> np.ndarray:
        if seg.ndim == 1:
            seg = seg[None, :]
        if seg.shape[1] != self.policy.segment_samples:
            raise SpectrumEstimateError(
                f"segment length {seg.shape[1]} != policy {self.policy.segment_samples}")
        if self._q is not None:
            seg = seg - (seg @ self._q) @ self._q.T
        return np.fft.rfft(seg * self._win, axis=1)

    def add(self, a: np.ndarray, b: np.ndarray | None = None):
        fa = self._periodogram(np.asarray(a, dtype=float))
        if b is None:
            vals = (np.abs(fa) ** 2) / self._norm
        else:
            fb = self._periodogram(np.asarray(b, dtype=float))
            vals = fa * np.conj(fb) / self._norm
        if self._sum is None:
            self._sum = np.zeros(vals.shape[1], dtype=vals.dtype)
            self._sumsq = np.zeros(vals.shape[1], dtype=float)
        self._sum += vals.sum(axis=0)
        self._sumsq += (np.abs(vals) ** 2).sum(axis=0)
        self._count += vals.shape[0]

    def result(self, drop_dc: bool = True) -> SpectrumEstimate:
        if self._count < self.policy.min_segments:
            raise SpectrumEstimateError(
                f"only {self._count} segments accumulated; policy requires "
                f">= {self.policy.min_segments}")
        n = self._count
        mean = self._sum / n
        var = np.maximum(self._sumsq / n - np.abs(mean) ** 2, 0.0)
        stderr = np.sqrt(var / n)
        nseg = self.policy.segment_samples
        omega = 2.0 * math.pi * np.fft.rfftfreq(nseg, d=self.dt)
        sl = slice(1, None) if drop_dc else slice(None)
        vals = mean if np.iscomplexobj(mean) else mean.real
        return SpectrumEstimate(omega=omega[sl], values=vals[sl],
                                stderr=stderr[sl], n_segments=n, dt=self.dt)


def _segments(samples: np.ndarray, nseg: int) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n_rec, n = samples.shape
    k = n // nseg
    if k == 0:
        raise SpectrumEstimateError(
            f"record length {n} shorter than one segment ({nseg})")
    return samples[:, :k * nseg].reshape(n_rec * k, nseg)


def estimate_spectrum(samples: np.ndarray, dt: float, policy: SegmentPolicy) -> SpectrumEstimate:
    """Averaged periodogram of one or more records (rows)."""
    acc = WelchAccumulator(policy, dt)
    acc.add(_segments(samples, policy.segment_samples))
    return acc.result()


def estimate_cross_spectrum(samples_a: np.ndarray, samples_b: np.ndarray,
                            dt: float, policy: SegmentPolicy) -> SpectrumEstimate:
    """Averaged cross periodogram between two synchronized channels."""
    acc = WelchAccumulator(policy, dt)
    acc.add(_segments(samples_a, policy.segment_samples),
            _segments(samples_b, policy.segment_samples))
    return acc.result()
