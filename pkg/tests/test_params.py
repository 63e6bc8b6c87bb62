import configparser

import pytest

from walkercell.params import (ConfigError, NondimParams, ParameterError,
                               PhysicalParams, buoyancy_weight,
                               nondimensionalize, params_from_config,
                               read_config, validate)


def test_nondimensionalize_scales():
    ph = PhysicalParams(nu=1e-2, kappa=5e-3, alpha_T=2e-4, g=9.8, rho0=1.0,
                        Omega=7.3e-5, a=4.0, h=2.0, C0=1e-4, C1=2e-4,
                        T0=300.0, T1=280.0)
    p = nondimensionalize(ph)
    h = ph.h
    assert p.prandtl == pytest.approx(ph.nu / ph.kappa)
    assert p.rayleigh == pytest.approx(
        ph.alpha_T * ph.g * (ph.T0 - ph.T1) * h**3 / (ph.kappa * ph.nu))
    assert p.delta0 == pytest.approx(ph.C0 * h**4 / ph.nu)
    assert p.delta1 == pytest.approx(ph.C1 * h**4 / ph.nu)
    assert p.omega == pytest.approx(2.0 * ph.Omega * h**2 / ph.kappa)
    assert p.r0 == pytest.approx(ph.a / h)


@pytest.mark.parametrize("r0", [0.5, 1.0, 2.0])
def test_effective_friction_offset(r0):
    # the curvature drag 2/r0^2 separates raw and effective coefficients
    p = NondimParams(rayleigh=1.0, prandtl=1.0, delta0=0.3, delta1=0.7, r0=r0)
    assert p.delta0p - p.delta0 == pytest.approx(2.0 / r0**2)
    assert p.delta1p - p.delta1 == pytest.approx(2.0 / r0**2)


def test_replace_keeps_unmentioned_fields():
    p = NondimParams(rayleigh=10.0, prandtl=2.0, delta0=1.0, delta1=3.0,
                     omega=5.0, r0=0.7)
    q = p.replace(rayleigh=20.0)
    assert q.rayleigh == 20.0
    assert (q.prandtl, q.delta0, q.delta1, q.omega, q.r0) == \
        (p.prandtl, p.delta0, p.delta1, p.omega, p.r0)


def test_buoyancy_weight():
    p = NondimParams(rayleigh=100.0, prandtl=7.0)
    assert buoyancy_weight(p) == 700.0


@pytest.mark.parametrize("kw", [
    {"prandtl": 0.0}, {"prandtl": -1.0}, {"r0": 0.0}, {"delta0": -0.1},
    {"rayleigh": float("nan")},
])
def test_validate_rejects(kw):
    base = dict(rayleigh=1.0, prandtl=1.0, delta0=0.0, delta1=0.0, r0=1.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        validate(NondimParams(**base))


def test_physical_validation_needs_heating_from_below():
    ph = PhysicalParams(nu=1e-2, kappa=5e-3, alpha_T=2e-4, g=9.8, rho0=1.0,
                        Omega=0.0, a=4.0, h=2.0, C0=0.0, C1=0.0,
                        T0=280.0, T1=300.0)
    with pytest.raises(ParameterError):
        nondimensionalize(ph)


def _cfg(text: str) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cfg.optionxform = str
    cfg.read_string(text)
    return cfg


def test_config_nondim_section():
    p, warn = params_from_config(_cfg("""
[nondim]
rayleigh = 100
prandtl = 2
delta0 = 1
r0 = 0.5
"""))
    assert p.rayleigh == 100.0 and p.prandtl == 2.0 and p.r0 == 0.5
    assert warn == []


def test_config_nondim_wins_over_physical():
    p, warn = params_from_config(_cfg("""
[physical]
nu = 0.01
kappa = 0.005
alpha_T = 2e-4
g = 9.8

[nondim]
rayleigh = 50
prandtl = 3
"""))
    assert p.rayleigh == 50.0
    assert len(warn) == 1 and "nondim" in warn[0]


@pytest.mark.parametrize("text", [
    "[grid]\nnx = 16\n",                       # no parameter section at all
    "[nondim]\nprandtl = 1\n",                 # rayleigh missing
    "[nondim]\nrayleigh = 1\nprandtl = 1\nbogus = 2\n",
    "[nondim]\nrayleigh = abc\nprandtl = 1\n",
    "[physical]\nnu = 0.01\n",                 # incomplete physical set
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        params_from_config(_cfg(text))


def test_read_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config(str(tmp_path / "nope.ini"))
