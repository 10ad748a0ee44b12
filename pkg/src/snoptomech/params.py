"""Physical and working parameter sets for the gravitationally coupled
optomechanical protocols.

Two protocols are supported: a single mirror whose own (semiclassical)
gravity acts back on it through the conditional mean of its position
("self" protocol), and a pair of identical mirrors coupled through their
mutual gravity ("mutual" protocol).  Either protocol can be evaluated in
the semiclassical theory, where gravity is sourced by conditional
expectation values (``Theory.SN``), or with the gravitational coupling
treated as an operator (``Theory.QG``).

Internally every formula is expressed in a unit system with hbar = M = 1,
in which the optomechanical measurement strength is the single frequency
scale ``lam = alpha*sqrt(hbar/M)`` [rad/s] and all output spectra are
dimensionless with the shot-noise floor equal to one.  ``PhysicalParams``
carries laboratory values; :func:`derive_working_params` reduces them to
the internal ``WorkingParams`` used by every other module.

Temperature enters only as the thermal frequency ``theta_T = k_B T/hbar``
[rad/s].  Three bath prescriptions are distinguished: no bath, a quantum
bath (thermal force treated as an operator drive, entering the conditional
variance through ``lam_tilde**2 = lam**2 + 4*gamma_m*theta_T``), and a
classical bath (thermal force drives the conditional mean only).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path


class Protocol(enum.Enum):
    SELF_GRAVITY = "self"
    MUTUAL_GRAVITY = "mutual"


class Theory(enum.Enum):
    SN = "sn"
    QG = "qg"


class Bath(enum.Enum):
    NONE = "none"
    QUANTUM = "quantum"
    CLASSICAL = "classical"


class ParameterError(ValueError):
    """Invalid or inconsistent physical configuration."""


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-frame configuration.

    All frequencies are angular [rad/s].  The measurement strength may be
    given directly as ``lam`` or as the raw coupling ``alpha`` (in which
    case ``mass`` converts it, ``lam = alpha*sqrt(hbar/mass)``).  The
    gravity frequency is the self-gravity frequency for the self protocol
    and the mutual-gravity frequency for the mutual protocol.
    """

    mass: float                      # [kg]
    omega_m: float                   # bare mechanical frequency [rad/s]
    gamma_m: float                   # mechanical damping [rad/s]
    omega_grav: float                # omega_SN (self) or omega_g (mutual) [rad/s]
    theta: float = math.pi / 2       # homodyne angle [rad]
    theta_T: float = 0.0             # thermal frequency k_B T / hbar [rad/s]
    lam: float | None = None         # measurement strength [rad/s]
    alpha: float | None = None       # raw coupling, alternative to lam
    protocol: Protocol = Protocol.SELF_GRAVITY
    theory: Theory = Theory.SN
    bath: Bath = Bath.NONE

    HBAR = 1.054571817e-34

    def __post_init__(self):
        if self.mass <= 0:
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if self.omega_m <= 0:
            raise ParameterError(f"omega_m must be positive, got {self.omega_m}")
        if self.gamma_m < 0:
            raise ParameterError(f"gamma_m must be non-negative, got {self.gamma_m}")
        if self.omega_grav < 0:
            raise ParameterError(f"gravity frequency must be non-negative, got {self.omega_grav}")
        if self.theta_T < 0:
            raise ParameterError(f"theta_T must be non-negative, got {self.theta_T}")
        if not 0.0 < self.theta <= math.pi:
            raise ParameterError(f"theta must lie in (0, pi], got {self.theta}")
        if (self.lam is None) == (self.alpha is None):
            raise ParameterError("exactly one of lam or alpha must be given")
        if self.lam is not None and self.lam < 0:
            raise ParameterError(f"lam must be non-negative, got {self.lam}")
        if self.alpha is not None and self.alpha < 0:
            raise ParameterError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def lam_value(self) -> float:
        if self.lam is not None:
            return self.lam
        return self.alpha * math.sqrt(self.HBAR / self.mass)

    @classmethod
    def from_quality_factor(cls, *, mass, omega_m, quality_factor, **kw) -> "PhysicalParams":
        """Build with gamma_m = omega_m / Q_m."""
        return cls(mass=mass, omega_m=omega_m, gamma_m=omega_m / quality_factor, **kw)


@dataclass(frozen=True)
class WorkingParams:
    """Internal (hbar = M = 1) parameter set used by all formulas.

    ``omega_q`` is the shifted mechanical frequency: sqrt(omega_m^2 +
    omega_grav^2) for self-gravity SN, omega_m for self-gravity QG, and
    sqrt(omega_m^2 - omega_grav^2) for the mutual protocol (both theories).
    ``lam_tilde`` folds the quantum-bath force noise into the measurement
    strength; it equals ``lam`` for the other prescriptions.
    """

    omega_m: float
    gamma_m: float
    omega_q: float
    omega_grav: float
    lam: float
    lam_tilde: float
    theta: float
    theta_T: float
    protocol: Protocol
    theory: Theory
    bath: Bath

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta)

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)

    @property
    def omega_sn_sq(self) -> float:
        """Self-gravity stiffness shift omega_q^2 - omega_m^2 (zero in QG)."""
        return self.omega_q**2 - self.omega_m**2

    def require_sin_theta(self):
        if abs(math.sin(self.theta)) < 1e-12:
            raise ParameterError("operation requires sin(theta) != 0")

    def replace(self, **kw) -> "WorkingParams":
        d = asdict(self)
        d.update(kw)
        d["protocol"] = Protocol(d["protocol"]) if not isinstance(d["protocol"], Protocol) else d["protocol"]
        d["theory"] = Theory(d["theory"]) if not isinstance(d["theory"], Theory) else d["theory"]
        d["bath"] = Bath(d["bath"]) if not isinstance(d["bath"], Bath) else d["bath"]
        return WorkingParams(**d)

    def with_bath(self, bath: Bath, theta_T: float | None = None) -> "WorkingParams":
        p = self.replace(bath=bath, theta_T=self.theta_T if theta_T is None else theta_T)
        return derive_lam_tilde(p)


def derive_lam_tilde(p: WorkingParams) -> WorkingParams:
    if p.bath is Bath.QUANTUM:
        lt = math.sqrt(p.lam**2 + 4.0 * p.gamma_m * p.theta_T)
    else:
        lt = p.lam
    return p.replace(lam_tilde=lt)


def bath_force_density(p: WorkingParams) -> float:
    """White thermal force density 4 gamma_m theta_T (zero without a bath).

    Formulas must use this increment directly rather than recovering it
    from lam_tilde**2 - lam**2, which underflows at large measurement
    strength (the increment can sit far below one ulp of lam**2).
    """
    if p.bath is Bath.NONE or p.theta_T <= 0.0:
        return 0.0
    return 4.0 * p.gamma_m * p.theta_T


def quantum_bath_rate(p: WorkingParams) -> float:
    """The lam_tilde**2 - lam**2 increment: thermal force under the quantum
    prescription (drives the conditional variance); zero otherwise."""
    return bath_force_density(p) if p.bath is Bath.QUANTUM else 0.0


def derive_working_params(p: PhysicalParams) -> WorkingParams:
    """Reduce a laboratory configuration to the internal unit system.

    Rejects a mutual-gravity configuration with omega_g >= omega_m (the
    shifted frequency would not be real).
    """
    lam = p.lam_value
    if p.protocol is Protocol.MUTUAL_GRAVITY:
        wq_sq = p.omega_m**2 - p.omega_grav**2
        if wq_sq <= 0:
            raise ParameterError(
                f"mutual gravity requires omega_g < omega_m "
                f"(got omega_g={p.omega_grav}, omega_m={p.omega_m})")
        omega_q = math.sqrt(wq_sq)
    elif p.theory is Theory.QG:
        omega_q = p.omega_m
    else:
        omega_q = math.sqrt(p.omega_m**2 + p.omega_grav**2)
    w = WorkingParams(
        omega_m=p.omega_m, gamma_m=p.gamma_m, omega_q=omega_q,
        omega_grav=p.omega_grav, lam=lam, lam_tilde=lam,
        theta=p.theta, theta_T=p.theta_T,
        protocol=p.protocol, theory=p.theory, bath=p.bath)
    return derive_lam_tilde(w)


# ---------------------------------------------------------------------------
# configuration files
#
# JSON, one key per PhysicalParams field (angular frequencies in rad/s).
# Convenience keys: "quality_factor" instead of "gamma_m", and any
# frequency may be given as "<name>_hz" (converted by 2*pi).
# ---------------------------------------------------------------------------

_FREQ_KEYS = ("omega_m", "gamma_m", "omega_grav", "theta_T", "lam", "alpha")


def physical_params_from_dict(cfg: dict, overrides: dict | None = None) -> PhysicalParams:
    cfg = dict(cfg)
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    for key in _FREQ_KEYS:
        hz = cfg.pop(key + "_hz", None)
        if hz is not None and key not in cfg:
            cfg[key] = 2.0 * math.pi * hz
    q = cfg.pop("quality_factor", None)
    if q is not None and "gamma_m" not in cfg:
        cfg["gamma_m"] = cfg["omega_m"] / q
    try:
        return PhysicalParams(
            mass=cfg["mass"],
            omega_m=cfg["omega_m"],
            gamma_m=cfg["gamma_m"],
            omega_grav=cfg.get("omega_grav", 0.0),
            theta=cfg.get("theta", math.pi / 2),
            theta_T=cfg.get("theta_T", 0.0),
            lam=cfg.get("lam"),
            alpha=cfg.get("alpha"),
            protocol=Protocol(cfg.get("protocol", "self")),
            theory=Theory(cfg.get("theory", "sn")),
            bath=Bath(cfg.get("bath", "none")),
        )
    except KeyError as exc:
        raise ParameterError(f"missing configuration key: {exc}") from exc


def load_physical_params(path: str | Path, overrides: dict | None = None) -> PhysicalParams:
    with open(path) as fh:
        cfg = json.load(fh)
    return physical_params_from_dict(cfg, overrides)


def physical_params_to_dict(p: PhysicalParams) -> dict:
    d = asdict(p)
    d["protocol"] = p.protocol.value
    d["theory"] = p.theory.value
    d["bath"] = p.bath.value
    return d
