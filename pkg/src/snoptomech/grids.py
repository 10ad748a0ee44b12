"""Frequency grid construction for spectral evaluation and export.

Resonances at quality factors ~1e7 are far narrower than any log grid;
curves are therefore sampled on a base grid (log or linear) plus dense
linear refinement windows around the requested feature frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import Protocol, WorkingParams


@dataclass(frozen=True)
class GridSpec:
    """Base grid plus refinement windows; fully serializable."""

    omega_min: float
    omega_max: float
    points: int
    spacing: str = "log"                      # "log" | "linear"
    refinements: tuple = field(default_factory=tuple)  # (center, half_width, points)

    def __post_init__(self):
        if self.omega_min <= 0 and self.spacing == "log":
            raise ValueError("log spacing requires omega_min > 0")
        if self.omega_max <= self.omega_min:
            raise ValueError("omega_max must exceed omega_min")
        if self.points < 2:
            raise ValueError("points must be >= 2")

    def build(self) -> np.ndarray:
        if self.spacing == "log":
            base = np.geomspace(self.omega_min, self.omega_max, self.points)
        elif self.spacing == "linear":
            base = np.linspace(self.omega_min, self.omega_max, self.points)
        else:
            raise ValueError(f"unknown spacing {self.spacing!r}")
        parts = [base]
        for center, half_width, pts in self.refinements:
            lo = max(center - half_width, self.omega_min)
            hi = min(center + half_width, self.omega_max)
            if hi > lo:
                parts.append(np.linspace(lo, hi, int(pts)))
        grid = np.unique(np.concatenate(parts))
        return grid

    def to_dict(self) -> dict:
        return {"omega_min": self.omega_min, "omega_max": self.omega_max,
                "points": self.points, "spacing": self.spacing,
                "refinements": [list(r) for r in self.refinements]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(omega_min=d["omega_min"], omega_max=d["omega_max"],
                   points=d["points"], spacing=d.get("spacing", "log"),
                   refinements=tuple(tuple(r) for r in d.get("refinements", ())))


def default_grid(params: WorkingParams, points: int = 2000,
                 refine_points: int = 400) -> GridSpec:
    """Log grid over [1e-3, 1e3] omega_m with refinement at the resonances."""
    wm = params.omega_m
    refinements = []
    centers = [params.omega_q]
    if params.protocol is Protocol.MUTUAL_GRAVITY and params.omega_grav > 0:
        wq2, wg2 = params.omega_q**2, params.omega_grav**2
        centers = [params.omega_q, np.sqrt(wq2 + wg2), np.sqrt(wq2 - wg2)]
    for c in centers:
        half = max(20.0 * params.gamma_m, 1e-4 * wm)
        refinements.append((float(c), float(half), refine_points))
    return GridSpec(omega_min=1e-3 * wm, omega_max=1e3 * wm, points=points,
                    spacing="log", refinements=tuple(refinements))


def parse_grid_arg(text: str) -> GridSpec:
    """Parse the CLI form MIN:MAX:N[:log|:linear] (values in rad/s)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"grid spec must be MIN:MAX:N[:log|:linear], got {text!r}")
    spacing = parts[3] if len(parts) == 4 else "log"
    return GridSpec(omega_min=float(parts[0]), omega_max=float(parts[1]),
                    points=int(parts[2]), spacing=spacing)
