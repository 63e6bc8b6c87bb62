import numpy as np
import pytest

from walkercell.dynamics import (BlowUpError, RunConfig, Trajectory, advect,
                                 amplitude_of, fit_exponential_rate,
                                 integrate, linear_rate, random_state, step,
                                 tendency, weighted_amplitude)
from walkercell.field import (Grid, SpectralState, inner, norm, shift_zonal,
                              velocity_values)
from walkercell.linstab import critical_eigenpair, critical_rayleigh
from walkercell.params import NondimParams, buoyancy_weight

BASE = NondimParams(prandtl=1.0, rayleigh=1.0, r0=1.0, delta0=1.0, delta1=1.0)


def _grid():
    return Grid(1.0, 16, 8)


@pytest.mark.parametrize("w", [1.0, 811.0])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_advection_energy_identity(seed, w):
    # incompressibility + free-slip walls make transport skew: <N(a,b), b>_w = 0
    g = _grid()
    a = random_state(g, seed, kband=5, amplitude=1.0)
    b = random_state(g, seed + 100, kband=5, amplitude=1.0)
    n = advect(a, b)
    assert abs(inner(n, b, w)) < 1e-12 * norm(a, w) * norm(b, w) ** 2


def test_net_transport_row_is_the_metric_term():
    # pure advection moves no net momentum; what remains in the j = 0 row
    # is exactly the domain mean of the curvature term u1*u2/r0
    g = _grid()
    s = random_state(g, 3, kband=5, amplitude=2.0)
    # Gauss-Legendre in the vertical: the collocation grid's midpoint rule
    # is not exact for the product's high sine harmonics
    nodes, weights = np.polynomial.legendre.leggauss(96)
    sv = 0.5 * (nodes + 1.0)
    x = np.linspace(0.0, 2.0 * np.pi * g.r0, 64, endpoint=False)
    X, Z = np.meshgrid(x, g.r0 + sv, indexing="ij")
    u1, u2 = velocity_values(s, X, Z)
    want = float(np.mean(u1 * u2, axis=0) @ (0.5 * weights)) / g.r0
    assert advect(s, s).mean[0] == pytest.approx(want, rel=1e-11)


def test_roll_plus_uniform_flow_conserves_net_transport():
    # separable single-harmonic cell with a uniform through-flow: the
    # metric mean vanishes, so only friction can change the net transport
    g = _grid()
    s = SpectralState.zero(g)
    s.psi[2, 0] = 0.3 + 0.7j
    s.mean[0] = 0.9
    s = SpectralState(g, s.psi, s.mean, s.theta)
    assert abs(advect(s, s).mean[0]) < 1e-14


def test_advection_is_bilinear():
    g = _grid()
    a = random_state(g, 4, amplitude=1.0)
    b = random_state(g, 5, amplitude=1.0)
    c = random_state(g, 6, amplitude=1.0)
    lhs = advect(a, 2.0 * b + c)
    rhs = 2.0 * advect(a, b) + advect(a, c)
    assert np.max(np.abs(lhs.psi - rhs.psi)) < 1e-12
    assert np.max(np.abs(lhs.theta - rhs.theta)) < 1e-12
    assert np.max(np.abs(lhs.mean - rhs.mean)) < 1e-12


def test_conduction_state_is_an_equilibrium():
    g = _grid()
    z = SpectralState.zero(g)
    t = tendency(BASE.replace(rayleigh=500.0), z)
    assert norm(t, 1.0) == 0.0


def test_tendency_linearizes_to_linear_rate():
    g = _grid()
    p = BASE.replace(rayleigh=700.0)
    base_dir = random_state(g, 7, amplitude=1.0)
    errs = []
    for eps in (1e-4, 1e-5):
        s = eps * base_dir
        resid = tendency(p, s) - linear_rate(p, s)
        errs.append(norm(resid, 1.0))
    # the residual is the quadratic term, so it scales with eps**2
    assert errs[0] / errs[1] == pytest.approx(100.0, rel=0.05)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        RunConfig(t_end=1.0, dt=0.0)
    with pytest.raises(ValueError):
        RunConfig(t_end=1.0, steady_tol=0.0)


def test_net_transport_decays_at_exact_friction_rate():
    g = _grid()
    s = SpectralState.zero(g)
    s.mean[0] = 1.0
    traj = integrate(BASE, s, RunConfig(t_end=1.0, dt=1e-3, record_interval=0.01,
                                        steady_tol=1e-300))
    rate, amp0 = fit_exponential_rate(traj.times, traj.mean0)
    assert rate == pytest.approx(-BASE.prandtl * BASE.delta0p, rel=1e-5)
    assert amp0 == pytest.approx(1.0, rel=1e-4)


def test_step_is_second_order():
    # smooth data keeps the coarsest step inside the asymptotic regime
    g = Grid(1.0, 12, 6)
    p = BASE.replace(rayleigh=400.0)
    s0 = random_state(g, 8, kband=2, jband=2, amplitude=0.5)

    def march(dt, t_end=0.08):
        s = s0
        for _ in range(int(round(t_end / dt))):
            s = step(p, s, dt)
        return s

    ref = march(0.08 / 256)
    e = [norm(march(0.08 / n) - ref, 1.0) for n in (4, 8, 16)]
    assert e[0] / e[1] == pytest.approx(4.0, rel=0.1)
    assert e[1] / e[2] == pytest.approx(4.0, rel=0.1)


def test_subcritical_perturbation_decays_to_steady():
    g = Grid(1.0, 12, 6)
    cp = critical_rayleigh(BASE)
    p = BASE.replace(rayleigh=0.9 * cp.Rc)
    s0 = random_state(g, 9, amplitude=1e-3)
    traj = integrate(p, s0, RunConfig(t_end=60.0, dt=2e-3, record_interval=0.1,
                                      steady_tol=1e-9))
    assert traj.verdict == "steady"
    assert norm(traj.final, buoyancy_weight(p)) < 1e-7
    assert traj.amplitude[-1] < traj.amplitude[0]


def test_supercritical_eigenmode_grows():
    g = _grid()
    cp = critical_rayleigh(BASE)
    p = BASE.replace(rayleigh=1.05 * cp.Rc)
    pair = critical_eigenpair(BASE, g)
    s0 = 1e-3 * pair.state
    traj = integrate(p, s0, RunConfig(t_end=2.0, dt=1e-3, record_interval=0.05))
    assert traj.verdict == "max_time"
    assert traj.amplitude[-1] > 2.0 * traj.amplitude[0]
    assert np.all(np.diff(traj.times) > 0)


def test_blowup_raises():
    g = _grid()
    cp = critical_rayleigh(BASE)
    p = BASE.replace(rayleigh=2.0 * cp.Rc)
    pair = critical_eigenpair(BASE, g)
    with pytest.raises(BlowUpError):
        integrate(p, 1.0 * pair.state,
                  RunConfig(t_end=50.0, dt=1e-3, blowup=10.0, steady_tol=1e-300))


def test_cfl_warning_fires_on_coarse_step():
    g = _grid()
    s0 = random_state(g, 10, amplitude=300.0)
    with pytest.warns(UserWarning, match="advective stability"):
        integrate(BASE, s0, RunConfig(t_end=0.02, dt=2e-3, steady_tol=1e-300),
                  cfl_check_every=1)


def test_snapshots_recorded_at_interval():
    g = Grid(1.0, 12, 6)
    s0 = random_state(g, 11, amplitude=1e-3)
    traj = integrate(BASE, s0, RunConfig(t_end=0.1, dt=1e-3, record_interval=0.01,
                                         snapshot_interval=0.02, steady_tol=1e-300))
    assert len(traj.snapshots) >= 5
    tt = [s.time for s in traj.snapshots]
    assert tt == sorted(tt)


def test_amplitude_of_recovers_plane_coordinates():
    g = _grid()
    pair = critical_eigenpair(BASE, g)
    partner = shift_zonal(pair.state, np.pi * g.r0 / (2 * pair.k))
    s = 0.3 * pair.state + 0.4 * partner
    amp, phase = amplitude_of(BASE, s, pair)
    assert amp == pytest.approx(0.5, rel=1e-12)
    assert phase == pytest.approx(np.arctan2(0.4, 0.3), abs=1e-12)


def test_weighted_amplitude_uses_buoyancy_weight():
    g = _grid()
    s = random_state(g, 12, amplitude=1.0)
    p = BASE.replace(rayleigh=200.0)
    assert weighted_amplitude(p, s) == norm(s, buoyancy_weight(p))


def test_random_state_normalization_and_reproducibility():
    g = _grid()
    a = random_state(g, 13, amplitude=0.02)
    b = random_state(g, 13, amplitude=0.02)
    c = random_state(g, 14, amplitude=0.02)
    assert norm(a, 1.0) == pytest.approx(0.02, rel=1e-12)
    assert np.array_equal(a.psi, b.psi) and np.array_equal(a.mean, b.mean)
    assert not np.array_equal(a.psi, c.psi)


def test_fit_exponential_rate_exact_and_windowed():
    t = np.linspace(0.0, 5.0, 101)
    v = 2.5 * np.exp(-0.7 * t)
    rate, amp = fit_exponential_rate(t, v)
    assert rate == pytest.approx(-0.7, rel=1e-12)
    assert amp == pytest.approx(2.5, rel=1e-12)
    rate, _ = fit_exponential_rate(t, v, tmin=1.0, tmax=4.0)
    assert rate == pytest.approx(-0.7, rel=1e-12)
    with pytest.raises(ValueError):
        fit_exponential_rate(t, v, tmin=10.0)
