import numpy as np
import pytest

from walkercell.field import (Grid, GridMismatchError, PhysicalFields,
                              RepresentationError, SpectralState, inner,
                              load_coeffs_json, norm, quadrature_inner,
                              save_coeffs_json, shift_zonal, state_from_dict,
                              state_to_dict, stream_values,
                              temperature_values, to_physical, to_spectral,
                              velocity_values, vertical_integral_u1)


def random_state(grid: Grid, seed: int) -> SpectralState:
    rng = np.random.default_rng(seed)
    s = SpectralState.zero(grid)
    s.psi[1:-1] = rng.normal(size=s.psi[1:-1].shape) + 1j * rng.normal(size=s.psi[1:-1].shape)
    s.theta[:-1] = rng.normal(size=s.theta[:-1].shape) + 1j * rng.normal(size=s.theta[:-1].shape)
    s.mean[:] = rng.normal(size=s.mean.shape)
    return SpectralState(grid, s.psi, s.mean, s.theta)


@pytest.mark.parametrize("r0,nx,nz", [(1.0, 3, 4), (1.0, 2, 4), (1.0, 8, 1), (0.0, 8, 4)])
def test_grid_rejects_bad_resolution(r0, nx, nz):
    with pytest.raises(ValueError):
        Grid(r0, nx, nz)


def test_state_normalization():
    g = Grid(1.0, 8, 4)
    psi = np.ones(g.shape_sin, complex)
    theta = (1 + 2j) * np.ones(g.shape_sin, complex)
    s = SpectralState(g, psi, np.zeros(g.nz + 1), theta)
    # k = 0 stream column and Nyquist rows are forced to zero,
    # the zonal-mean temperature row is forced real
    assert np.all(s.psi[0] == 0) and np.all(s.psi[-1] == 0)
    assert np.all(s.theta[-1] == 0)
    assert np.all(s.theta[0].imag == 0)


def test_state_arithmetic_and_grid_check():
    g = Grid(1.0, 8, 4)
    a = random_state(g, 0)
    b = random_state(g, 1)
    c = a + 2.0 * b - b
    assert np.allclose(c.psi, a.psi + b.psi)
    assert np.allclose(c.mean, a.mean + b.mean)
    other = random_state(Grid(1.0, 8, 5), 2)
    with pytest.raises(GridMismatchError):
        a + other


def test_roundtrip_physical_spectral():
    g = Grid(1.3, 12, 5)
    s = random_state(g, 3)
    back = to_spectral(to_physical(s), g)
    assert np.max(np.abs(back.psi - s.psi)) < 1e-12
    assert np.max(np.abs(back.mean - s.mean)) < 1e-12
    assert np.max(np.abs(back.theta - s.theta)) < 1e-12


def test_to_spectral_rejects_divergent_data():
    g = Grid(1.0, 8, 4)
    f = to_physical(random_state(g, 4))
    f.u2 = f.u2 + 0.5 * np.cos(f.x1 / g.r0)[:, None] * np.sin(np.pi * (f.x2 - g.r0))[None, :]
    with pytest.raises(RepresentationError):
        to_spectral(f, g)


def test_to_spectral_rejects_wall_violating_data():
    g = Grid(1.0, 8, 4)
    f = to_physical(random_state(g, 5))
    f.T = f.T + np.ones_like(f.T)  # constant T has no sine expansion
    with pytest.raises(RepresentationError):
        to_spectral(f, g)


@pytest.mark.parametrize("w", [1.0, 37.5])
def test_inner_matches_collocation_quadrature(w):
    g = Grid(0.8, 12, 5)
    a = random_state(g, 6)
    b = random_state(g, 7)
    fa, fb = to_physical(a), to_physical(b)
    assert inner(a, b, w) == pytest.approx(quadrature_inner(fa, fb, g, w), rel=1e-12)


def test_norm_positive_and_zero():
    g = Grid(1.0, 8, 4)
    assert norm(SpectralState.zero(g)) == 0.0
    assert norm(random_state(g, 8)) > 0.0


def test_shift_zonal_is_isometric_translation():
    g = Grid(1.0, 16, 4)
    s = random_state(g, 9)
    dx = 2.0 * np.pi * g.r0 / g.nx
    t = shift_zonal(s, 3 * dx)
    assert norm(t, 2.0) == pytest.approx(norm(s, 2.0), rel=1e-13)
    f, ft = to_physical(s), to_physical(t)
    # translation by three grid cells is a roll of the collocation values
    assert np.max(np.abs(ft.u1 - np.roll(f.u1, 3, axis=0))) < 1e-12


def test_vertical_integral_is_mean_mode():
    g = Grid(1.0, 8, 4)
    s = random_state(g, 10)
    s.mean[0] = 0.37
    assert vertical_integral_u1(s) == 0.37


def test_stream_values_match_collocation():
    g = Grid(1.0, 8, 4)
    s = random_state(g, 11)
    f = to_physical(s)
    x1g, x2g = np.meshgrid(g.x1, g.x2, indexing="ij")
    assert np.max(np.abs(stream_values(s, x1g, x2g) - f.psi)) < 1e-12
    u1, u2 = velocity_values(s, x1g, x2g)
    assert np.max(np.abs(u1 - f.u1)) < 1e-12
    assert np.max(np.abs(u2 - f.u2)) < 1e-12
    assert np.max(np.abs(temperature_values(s, x1g, x2g) - f.T)) < 1e-12


def test_velocity_is_derivative_of_stream():
    # centered difference of psi reproduces (u1, u2) = (dpsi/dx2, -dpsi/dx1)
    g = Grid(1.0, 8, 4)
    s = random_state(g, 12)
    x1, x2 = 1.1, g.r0 + 0.4
    h = 1e-6
    u1, u2 = velocity_values(s, x1, x2)
    d2 = (stream_values(s, x1, x2 + h) - stream_values(s, x1, x2 - h)) / (2 * h)
    d1 = (stream_values(s, x1 + h, x2) - stream_values(s, x1 - h, x2)) / (2 * h)
    assert float(u1) == pytest.approx(float(d2), abs=1e-6)
    assert float(u2) == pytest.approx(float(-d1), abs=1e-6)


def test_coeffs_json_roundtrip(tmp_path):
    g = Grid(1.0, 8, 4)
    s = random_state(g, 13)
    s.time = 2.5
    path = str(tmp_path / "state.json")
    save_coeffs_json(s, path)
    back = load_coeffs_json(path)
    assert back.grid.compatible(g)
    assert back.time == 2.5
    assert np.max(np.abs(back.psi - s.psi)) == 0.0
    assert np.max(np.abs(back.theta - s.theta)) == 0.0
    assert np.max(np.abs(back.mean - s.mean)) == 0.0


def test_state_dict_skips_zero_entries():
    g = Grid(1.0, 8, 4)
    s = SpectralState.zero(g)
    s.psi[1, 0] = 1.0 + 0.5j
    d = state_to_dict(s)
    assert list(d["psi"]) == ["1,1"]
    assert d["theta"] == {}
    back = state_from_dict(d)
    assert back.psi[1, 0] == 1.0 + 0.5j
