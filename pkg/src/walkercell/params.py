"""Physical and nondimensional control parameters.

The model lives on a periodic channel of circumference 2*pi*r0 and unit
depth after rescaling lengths by the layer height. Five numbers control
the dynamics: the Rayleigh number, the Prandtl number, top and bottom
turbulent friction coefficients, and the rotation number. The rotation
number is carried for reporting only; rotation enters the momentum
balance as a gradient field and drops out of the divergence-free
projection, which the stability tests verify.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """A parameter violates its physical domain."""


class ConfigError(ValueError):
    """A configuration file is malformed or inconsistent."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional inputs, SI units.

    Attributes
    ----------
    nu : kinematic viscosity [m^2/s]
    kappa : thermal diffusivity [m^2/s]
    alpha_T : thermal expansion coefficient [1/K]
    g : gravitational acceleration [m/s^2]
    rho0 : reference density [kg/m^3]
    Omega : rotation rate [1/s]
    a : channel radius [m]
    h : layer height [m]
    C0, C1 : bottom/top friction coefficients [1/(m^2 s)]
    T0, T1 : bottom/top reference temperatures [K]
    """

    nu: float
    kappa: float
    alpha_T: float
    g: float
    rho0: float = 1.0
    Omega: float = 0.0
    a: float = 1.0
    h: float = 1.0
    C0: float = 0.0
    C1: float = 0.0
    T0: float = 300.0
    T1: float = 200.0


@dataclass(frozen=True)
class NondimParams:
    """Nondimensional control parameters.

    rayleigh  thermal forcing strength R
    prandtl   momentum/heat diffusivity ratio Pr
    delta0    bottom friction number
    delta1    top friction number
    omega     rotation number (spectator: absent from the projected operator)
    r0        channel radius in units of the layer height
    """

    rayleigh: float
    prandtl: float
    delta0: float = 0.0
    delta1: float = 0.0
    omega: float = 0.0
    r0: float = 1.0

    @property
    def delta0p(self) -> float:
        """Effective bottom drag: curvature drag 2/r0^2 plus delta0."""
        return 2.0 / self.r0**2 + self.delta0

    @property
    def delta1p(self) -> float:
        """Effective top drag: curvature drag 2/r0^2 plus delta1."""
        return 2.0 / self.r0**2 + self.delta1

    def replace(self, **kw) -> "NondimParams":
        d = dict(
            rayleigh=self.rayleigh, prandtl=self.prandtl, delta0=self.delta0,
            delta1=self.delta1, omega=self.omega, r0=self.r0,
        )
        d.update(kw)
        return NondimParams(**d)


def buoyancy_weight(p: NondimParams) -> float:
    """Temperature weight Pr*R that makes the linearized operator self-adjoint."""
    return p.prandtl * p.rayleigh


def validate_physical(ph: PhysicalParams) -> PhysicalParams:
    if not (ph.nu > 0 and math.isfinite(ph.nu)):
        raise ParameterError(f"viscosity nu must be positive, got {ph.nu}")
    if not (ph.kappa > 0 and math.isfinite(ph.kappa)):
        raise ParameterError(f"diffusivity kappa must be positive, got {ph.kappa}")
    if not (ph.alpha_T > 0):
        raise ParameterError(f"thermal expansion alpha_T must be positive, got {ph.alpha_T}")
    if not (ph.g > 0):
        raise ParameterError(f"gravity g must be positive, got {ph.g}")
    if not (ph.a > 0 and ph.h > 0):
        raise ParameterError(f"geometry a={ph.a}, h={ph.h} must be positive")
    if ph.C0 < 0 or ph.C1 < 0:
        raise ParameterError(f"friction coefficients must be nonnegative, got C0={ph.C0}, C1={ph.C1}")
    if not (ph.T0 > ph.T1):
        raise ParameterError(
            f"bottom temperature must exceed top temperature for heating from below, got T0={ph.T0}, T1={ph.T1}"
        )
    return ph


def validate(p: NondimParams) -> NondimParams:
    for name in ("rayleigh", "prandtl", "delta0", "delta1", "omega", "r0"):
        v = getattr(p, name)
        if not math.isfinite(v):
            raise ParameterError(f"{name} must be finite, got {v}")
    if p.prandtl <= 0:
        raise ParameterError(f"prandtl must be positive, got {p.prandtl}")
    if p.r0 <= 0:
        raise ParameterError(f"r0 must be positive, got {p.r0}")
    if p.delta0 < 0 or p.delta1 < 0:
        raise ParameterError(f"friction numbers must be nonnegative, got {p.delta0}, {p.delta1}")
    return p


def nondimensionalize(ph: PhysicalParams) -> NondimParams:
    """Map dimensional inputs to the nondimensional control parameters.

    Scales: length by h, time by h^2/kappa, temperature by T0 - T1.
    """
    validate_physical(ph)
    h = ph.h
    return validate(NondimParams(
        rayleigh=ph.alpha_T * ph.g * (ph.T0 - ph.T1) * h**3 / (ph.kappa * ph.nu),
        prandtl=ph.nu / ph.kappa,
        delta0=ph.C0 * h**4 / ph.nu,
        delta1=ph.C1 * h**4 / ph.nu,
        omega=2.0 * ph.Omega * h**2 / ph.kappa,
        r0=ph.a / h,
    ))


_PHYS_KEYS = ("nu", "kappa", "alpha_T", "g", "rho0", "Omega", "a", "h", "C0", "C1", "T0", "T1")
_NONDIM_KEYS = ("rayleigh", "prandtl", "delta0", "delta1", "omega", "r0")


def _section_floats(cfg: configparser.ConfigParser, section: str, allowed) -> dict:
    out = {}
    for key, raw in cfg.items(section):
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section}] (allowed: {', '.join(allowed)})")
        try:
            out[key] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc
    return out


def params_from_config(cfg: configparser.ConfigParser) -> tuple[NondimParams, list[str]]:
    """Build NondimParams from parsed config sections.

    Accepts [physical] and/or [nondim]; when both are present the nondim
    section wins and a warning is recorded.
    """
    warnings: list[str] = []
    has_phys = cfg.has_section("physical")
    has_nd = cfg.has_section("nondim")
    if not has_phys and not has_nd:
        raise ConfigError("config must contain a [physical] or [nondim] section")
    if has_nd:
        if has_phys:
            warnings.append("both [physical] and [nondim] given; using [nondim]")
        vals = _section_floats(cfg, "nondim", _NONDIM_KEYS)
        if "rayleigh" not in vals:
            raise ConfigError("[nondim] must set rayleigh")
        if "prandtl" not in vals:
            raise ConfigError("[nondim] must set prandtl")
        try:
            return validate(NondimParams(**vals)), warnings
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
    vals = _section_floats(cfg, "physical", _PHYS_KEYS)
    missing = [k for k in ("nu", "kappa", "alpha_T", "g") if k not in vals]
    if missing:
        raise ConfigError(f"[physical] missing required keys: {', '.join(missing)}")
    try:
        return nondimensionalize(PhysicalParams(**vals)), warnings
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def read_config(path: str) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cfg.optionxform = str  # keep key case: C0 vs c0 matter
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return cfg
