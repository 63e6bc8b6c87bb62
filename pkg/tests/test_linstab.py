import numpy as np
import pytest

from walkercell.field import Grid, inner, norm, shift_zonal
from walkercell.linstab import (CLASSICAL_ALPHA, CLASSICAL_RAYLEIGH,
                                block_generator, block_rates,
                                continuous_minimum, critical_eigenpair,
                                critical_rayleigh, crossing_rayleigh,
                                eigen_spectrum, marginal_curve, marginal_mode,
                                marginal_rayleigh, verify_pes)
from walkercell.params import NondimParams, buoyancy_weight

BASE = NondimParams(prandtl=1.0, rayleigh=1.0, r0=1.0, delta0=1.0, delta1=1.0)


def test_classical_minimum_frictionless():
    a = np.linspace(0.5, 5.0, 2001)
    curve = marginal_curve(a, 1, 0.0, 0.0)
    imin = int(np.argmin(curve))
    assert a[imin] == pytest.approx(CLASSICAL_ALPHA, abs=5e-3)
    assert float(marginal_curve(CLASSICAL_ALPHA, 1, 0.0, 0.0)) == \
        pytest.approx(CLASSICAL_RAYLEIGH, rel=1e-14)


@pytest.mark.parametrize("r0,d0,d1", [(1.0, 0.0, 0.0), (0.5, 1.0, 0.0), (2.0, 0.3, 0.7)])
def test_continuous_minimum_is_stationary(r0, d0, d1):
    p = NondimParams(rayleigh=1.0, prandtl=1.0, delta0=d0, delta1=d1, r0=r0)
    a_star, r_star = continuous_minimum(p)
    assert float(marginal_curve(a_star, 1, p.delta0p, p.delta1p)) == pytest.approx(r_star)
    h = 1e-4
    for a in (a_star - h, a_star + h):
        assert float(marginal_curve(a, 1, p.delta0p, p.delta1p)) >= r_star


def test_marginal_rayleigh_rejects_bad_modes():
    with pytest.raises(ValueError):
        marginal_rayleigh(BASE, 0, 1)
    with pytest.raises(ValueError):
        marginal_rayleigh(BASE, 1, 0)


def test_higher_vertical_modes_are_harder_to_excite():
    assert marginal_rayleigh(BASE, 2, 2) > marginal_rayleigh(BASE, 2, 1)


def test_block_rate_vanishes_on_marginal_curve():
    Rm = marginal_rayleigh(BASE, 2, 1)
    hi = block_rates(BASE, 2, 1, Rm)[0]
    assert abs(hi) < 1e-10
    assert block_rates(BASE, 2, 1, 0.99 * Rm)[0] < 0
    assert block_rates(BASE, 2, 1, 1.01 * Rm)[0] > 0


@pytest.mark.parametrize("omega", [0.0, 3.0, 50.0])
def test_rotation_is_a_spectator(omega):
    p = BASE.replace(omega=omega, rayleigh=500.0)
    ref = BASE.replace(rayleigh=500.0)
    assert np.allclose(block_generator(p, 1, 1), block_generator(ref, 1, 1))
    got = [e.rate for e in eigen_spectrum(p, nev=8)]
    want = [e.rate for e in eigen_spectrum(ref, nev=8)]
    assert got == want


def test_eigen_spectrum_sorted_with_roll_multiplicity():
    spec = eigen_spectrum(BASE, 811.0, nev=None, kband=4, jband=4)
    rates = [e.rate for e in spec]
    assert rates == sorted(rates, reverse=True)
    assert all(e.multiplicity == 2 for e in spec if e.kind == "roll")
    assert all(e.multiplicity == 1 for e in spec if e.kind != "roll")
    assert all(abs(e.beta.imag) == 0 for e in spec)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_closed_form_matches_eigensolver(k):
    closed = marginal_rayleigh(BASE, k, 1)
    eig = crossing_rayleigh(BASE, k, nz=24)
    assert eig == pytest.approx(closed, rel=1e-10)


def test_critical_point_reference_configuration():
    cp = critical_rayleigh(BASE)
    assert cp.kc == 2 and cp.jc == 1
    assert cp.Rc == pytest.approx(811.2842689909436, rel=1e-12)
    assert cp.multiplicity == 2 and not cp.degenerate
    assert cp.rival_k == 3
    assert 0.05 < cp.rival_gap < 0.09


def test_critical_point_methods_agree():
    a = critical_rayleigh(BASE, method="closed")
    b = critical_rayleigh(BASE, method="eigen", nz=24)
    assert b.kc == a.kc
    assert b.Rc == pytest.approx(a.Rc, rel=1e-9)


def test_critical_rayleigh_scan_edge_raises():
    # minimum sits at k = 2, so a window capped there must refuse
    with pytest.raises(RuntimeError):
        critical_rayleigh(BASE, kmax=2)


def test_verify_pes_reference_configuration():
    rep = verify_pes(BASE)
    cp = critical_rayleigh(BASE)
    assert rep.n_marginal == 2
    assert rep.third_rate < -0.1
    assert rep.slope > 0
    assert rep.crossing == pytest.approx(cp.Rc, rel=1e-6)


def test_marginal_mode_normalization_and_neutrality():
    cp = critical_rayleigh(BASE)
    g = Grid(BASE.r0, 16, 8)
    m = marginal_mode(BASE, g)
    w = buoyancy_weight(BASE.replace(rayleigh=cp.Rc))
    assert norm(m, w) == pytest.approx(1.0, rel=1e-12)
    # the coefficient pair is a null vector of the critical 2x2 block
    G = block_generator(BASE, cp.kc, cp.jc, cp.Rc)
    v = np.array([m.psi[cp.kc, cp.jc - 1], m.theta[cp.kc, cp.jc - 1]])
    assert np.max(np.abs(G @ v)) < 1e-12


def test_quarter_wavelength_partner_is_orthogonal():
    cp = critical_rayleigh(BASE)
    g = Grid(BASE.r0, 16, 8)
    m = marginal_mode(BASE, g)
    partner = shift_zonal(m, np.pi * BASE.r0 / (2 * cp.kc))
    w = buoyancy_weight(BASE.replace(rayleigh=cp.Rc))
    assert abs(inner(m, partner, w)) < 1e-12
    assert norm(partner, w) == pytest.approx(1.0, rel=1e-12)


def test_critical_eigenpair_attaches_state():
    g = Grid(BASE.r0, 16, 8)
    ep = critical_eigenpair(BASE, g)
    assert ep.kind == "roll" and ep.k == 2 and ep.j == 1
    assert ep.state is not None
    assert ep.state.psi[2, 0] != 0
