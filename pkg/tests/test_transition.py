import numpy as np
import pytest

from walkercell.dynamics import advect
from walkercell.field import Grid, inner, norm
from walkercell.linstab import critical_rayleigh
from walkercell.params import NondimParams
from walkercell.transition import (ReducedModel, UnclassifiableError,
                                   center_manifold_leading, classify,
                                   critical_pair, default_grid,
                                   normal_form_oracle, predict_branch,
                                   reduced_model, transition_number)

BASE = NondimParams(prandtl=1.0, rayleigh=1.0, r0=1.0, delta0=1.0, delta1=1.0)


@pytest.fixture(scope="module")
def base_rm():
    return reduced_model(BASE)


def test_slaved_field_structure():
    cp = critical_rayleigh(BASE)
    pc = BASE.replace(rayleigh=cp.Rc)
    grid = default_grid(BASE, cp.kc)
    pair, partner = critical_pair(pc, grid)
    cm = center_manifold_leading(pc, pair)
    assert cm.residual < 1e-12
    w = pc.prandtl * cp.Rc
    assert abs(inner(cm.Psi, pair.state, w)) < 1e-12
    assert abs(inner(cm.Psi, partner, w)) < 1e-12
    # a quadratic product of wavenumber kc only populates k = 0 and 2 kc
    scale = max(np.max(np.abs(cm.Psi.psi)), np.max(np.abs(cm.Psi.theta)))
    live = {k for k in range(grid.kmax + 1)
            if max(np.max(np.abs(cm.Psi.psi[k])),
                   np.max(np.abs(cm.Psi.theta[k]))) > 1e-10 * scale}
    assert live == {0, 2 * cp.kc}
    # the zonal-mean part of the correction is a temperature rectification
    assert np.max(np.abs(cm.Psi.theta[0])) > 0.1 * scale


def test_transition_number_routes_agree():
    a_proj = transition_number(BASE, route="projection")
    a_en = transition_number(BASE, route="energy")
    assert a_proj < 0 and a_en < 0
    assert a_proj == pytest.approx(a_en, rel=1e-10)


def test_transition_number_gauge_behavior():
    a1 = transition_number(BASE)
    # eigenvector scale c multiplies the cubic coefficient by c**2
    assert transition_number(BASE, scale=2.0) == pytest.approx(4.0 * a1, rel=1e-10)
    # zonal phase of the eigenvector must not matter
    assert transition_number(BASE, phase=0.7) == pytest.approx(a1, rel=1e-10)


def test_transition_number_unknown_route():
    with pytest.raises(ValueError):
        transition_number(BASE, route="bogus")


def test_reduced_model_reference_configuration(base_rm):
    rm = base_rm
    assert rm.k_order == 3
    assert rm.lambda0 == pytest.approx(811.2842689909436, rel=1e-12)
    assert rm.beta1_slope == pytest.approx(9.382560e-03, rel=1e-5)
    assert rm.alpha_t == pytest.approx(-6.118148e-03, rel=1e-5)
    assert rm.e1 is not None and rm.e1star is rm.e1
    # sampled rates cross zero at the critical value
    lams, betas = rm.beta1[:, 0], rm.beta1[:, 1]
    assert betas[0] < 0 < betas[-1]
    assert np.interp(rm.lambda0, lams, betas) == pytest.approx(0.0, abs=1e-10)


def test_classify_reference_is_continuous(base_rm):
    rep = classify(base_rm)
    assert rep.type == "I"
    assert rep.k_order == 3
    up = [b for b in rep.branches if b.label == "upper"][0]
    sup = up.lambdas > rep.lambda0
    assert np.all(np.isfinite(up.amplitude[sup]))
    assert np.all(np.isnan(up.amplitude[~sup]))
    beta = base_rm.beta1_slope * (up.lambdas[sup] - rep.lambda0)
    want = np.sqrt(np.abs(beta / base_rm.alpha_t))
    assert np.allclose(up.amplitude[sup], want)
    assert all(b.stability == "attractor" for b in rep.branches)


def _scalar_rm(k: int, alpha: float, slope: float = 1.0) -> ReducedModel:
    lams = np.linspace(-0.5, 0.5, 5)
    return ReducedModel(lambda0=0.0, beta1=np.column_stack([lams, slope * lams]),
                        beta1_slope=slope, alpha_t=alpha, k_order=k)


@pytest.mark.parametrize("k,alpha,expected", [
    (3, -1.0, "I"), (3, 1.0, "II"), (5, -2.0, "I"), (5, 0.5, "II"),
    (2, 1.0, "III"), (2, -1.0, "III"), (4, 1.0, "III"),
])
def test_classify_table(k, alpha, expected):
    rep = classify(_scalar_rm(k, alpha))
    assert rep.type == expected


def test_classify_jump_branches_are_subcritical_saddles():
    rep = classify(_scalar_rm(3, 1.0))
    up = [b for b in rep.branches if b.label == "upper"][0]
    assert up.stability == "saddle"
    sub = up.lambdas < 0
    assert np.all(np.isfinite(up.amplitude[sub & (up.lambdas != 0)]))
    assert np.all(np.isnan(up.amplitude[~sub]))


def test_classify_mixed_attractor_side():
    rep = classify(_scalar_rm(2, 1.0))
    att = [b for b in rep.branches if b.stability == "attractor"][0]
    sup = att.lambdas > 0
    assert np.all(np.isfinite(att.signed[sup]))
    # signed branch sits opposite the sign of beta/alpha
    assert np.all(att.signed[sup] < 0)


def test_classify_degenerate_inputs():
    with pytest.raises(UnclassifiableError):
        classify(_scalar_rm(3, 0.0))
    with pytest.raises(UnclassifiableError):
        classify(_scalar_rm(1, 1.0))


@pytest.mark.parametrize("k,alpha,expected", [
    (3, -1.0, "I"), (3, 1.0, "II"), (2, 1.0, "III"), (2, -1.0, "III"),
])
def test_oracle_verdicts(k, alpha, expected):
    rep = normal_form_oracle(k, alpha, 1.0, [-0.4, -0.2, 0.2, 0.4])
    assert rep.verdict == expected
    for rec in rep.records:
        assert rec.zero_stable == (rec.beta1 < 0)
        for r in rec.attractors + rec.saddles:
            assert abs(r) == pytest.approx(abs(rec.beta1 / alpha) ** (1.0 / (k - 1)),
                                           rel=1e-6)


def test_oracle_continuous_case_never_escapes():
    rep = normal_form_oracle(3, -1.0, 1.0, [0.3])
    assert rep.records[0].escaped_fraction == 0.0
    assert len(rep.records[0].attractors) == 2


def test_predict_branch_amplitude(base_rm):
    rm = base_rm
    R = 1.02 * rm.lambda0
    s = predict_branch(BASE, R, rm=rm)
    beta = rm.beta1_slope * (R - rm.lambda0)
    want = np.sqrt(abs(beta / rm.alpha_t))
    w = BASE.prandtl * rm.lambda0
    assert norm(s, w) == pytest.approx(want, rel=1e-10)
    with pytest.raises(ValueError):
        predict_branch(BASE, 0.5 * rm.lambda0, rm=rm)


def test_quadratic_coefficient_vanishes():
    cp = critical_rayleigh(BASE)
    pc = BASE.replace(rayleigh=cp.Rc)
    pair, _ = critical_pair(pc)
    w = pc.prandtl * cp.Rc
    quad = inner(advect(pair.state, pair.state), pair.state, w)
    assert abs(quad) < 1e-12
