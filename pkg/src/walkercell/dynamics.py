"""Nonlinear tendency and time integration.

The quadratic terms are computed as exact Galerkin projections: zonal
products are dealiased by zero padding to at least 3*kmax + 1 points,
and vertical products of the trig basis stay inside the span of modes
up to 2*nz, whose coefficients the midpoint grid extracts exactly. Each
of the five product fields lies in a single vertical family (sine or
cosine), so cross-family content only arises through the closed-form
Gram matrices and never through quadrature error. Consequently the
discrete advection satisfies the energy identity

    <advect(a, b), b>_w = 0      (any weight w, any states a, b)

to machine precision, the same cancellation the continuous equations
enjoy from incompressibility and the free-slip walls.

Momentum advection is projected through the vorticity: testing against
a stream-function mode chi integrates by parts onto the curl, with no
boundary contribution because chi vanishes on the walls. The zonal-mean
u1 equation is tested against its cosine modes; zonal-mean content of
the vertical momentum equation has no test direction (the basis has no
mean u2) and drops, which is the hydrostatic adjustment.

Time stepping is CNAB2: Crank-Nicolson on the diagonal dissipation,
two-step Adams-Bashforth on advection and buoyancy coupling, with a
second-order half-step bootstrap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import Grid, SpectralState, inner, norm, shift_zonal, \
    velocity_coefficients, zonal_analysis, zonal_synthesis, _check_grids
from .params import NondimParams, buoyancy_weight


class BlowUpError(RuntimeError):
    """Trajectory left the resolvable regime (non-finite or huge)."""


@dataclass
class RunConfig:
    """Integration controls.

    steady_tol is a threshold on the weighted norm of the full tendency;
    convergence_tol additionally stops on relative state change per unit
    time when positive. snapshot_interval and record_interval are in
    time units (0 disables snapshots).
    """

    t_end: float
    dt: float = 1e-3
    steady_tol: float = 1e-9
    convergence_tol: float = 0.0
    record_interval: float = 0.01
    snapshot_interval: float = 0.0
    blowup: float = 1e8

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.steady_tol <= 0:
            raise ValueError("steady_tol must be positive")


# ---------------------------------------------------------------------------
# quadratic terms

def advect(a: SpectralState, b: SpectralState) -> SpectralState:
    """Galerkin projection of transport of state b by state a's velocity.

    Includes the metric terms u1a*u2b/r0 in the zonal momentum slot and
    -u1a*u1b/r0 in the vertical momentum slot. The result is packed as
    a state-space tangent: psi slot carries curl(N)_{k,n}/lam (the
    negative of its tendency contribution), mean and theta slots carry
    the projected products directly.
    """
    _check_grids(a, b)
    g = a.grid
    nz = g.nz
    ksin = g.ksin

    u1a, u2a = velocity_coefficients(a)
    u1b, u2b = velocity_coefficients(b)
    ia = 1j * g.alpha[:, None]

    def syn_cos(c):
        return zonal_synthesis(c @ g._cosv[:, : nz + 1].T, g.npad)

    def syn_sin(c):
        return zonal_synthesis(c @ g._sinv[:, :nz].T, g.npad)

    A1 = syn_cos(u1a)
    A2 = syn_sin(u2a)
    B_u1 = syn_cos(u1b)
    B_u2 = syn_sin(u2b)
    B_u1x = syn_cos(ia * u1b)
    B_u1s = syn_sin(-ksin[None, :] * u1b[:, 1:])
    B_u2x = syn_sin(ia * u2b)
    B_u2s = syn_cos(np.concatenate(
        [np.zeros((g.kmax + 1, 1)), ksin[None, :] * u2b], axis=1))
    B_tx = syn_sin(ia * b.theta)
    B_ts = syn_cos(np.concatenate(
        [np.zeros((g.kmax + 1, 1)), ksin[None, :] * b.theta], axis=1))

    pN1c = A1 * B_u1x + A2 * B_u1s
    pN1s = A1 * B_u2 / g.r0
    pN2s = A1 * B_u2x + A2 * B_u2s
    pN2c = -A1 * B_u1 / g.r0
    pNTs = A1 * B_tx + A2 * B_ts

    def ana(vals, ext):
        return zonal_analysis(vals, g.kmax + 1) @ ext.T

    N1c = ana(pN1c, g._cos_ext)            # cos modes 0..2nz
    N1s = ana(pN1s, g._sin_ext)            # sin modes 1..2nz
    N2s = ana(pN2s, g._sin_ext)
    N2c = ana(pN2c, g._cos_ext)
    NTs = ana(pNTs, g._sin_ext)[:, :nz]

    # curl projection onto sine mode n: the sine-family content lands
    # directly, the cosine-family content (including modes above nz)
    # arrives through the cross Gram
    mpi = np.pi * np.arange(1, 2 * nz + 1)
    cross_src = ia * N2c
    cross_src[:, 1:] -= mpi[None, :] * N1s
    fhat = ia * N2s[:, :nz] + ksin[None, :] * N1c[:, 1 : nz + 1]
    fhat += cross_src @ g._c2s.T

    mean_slot = N1c[0, : nz + 1].real + g._s2c @ N1s[0].real

    return SpectralState(g, fhat / g.lam, mean_slot, NTs, time=b.time)


def linear_rate(p: NondimParams, s: SpectralState) -> SpectralState:
    """Linearized tendency about the conduction state."""
    g = s.grid
    al = g.alpha[:, None]
    Q = g.lam**2 + p.delta1p * al**2 + p.delta0p * g.ksin[None, :] ** 2
    dpsi = (p.prandtl / g.lam) * (-Q * s.psi + 1j * p.rayleigh * al * s.theta)
    dtheta = -g.lam * s.theta - 1j * al * s.psi
    dmean = -p.prandtl * (g.kcos**2 + p.delta0p) * s.mean
    return SpectralState(g, dpsi, dmean, dtheta, time=s.time)


def tendency(p: NondimParams, s: SpectralState, extra=None) -> SpectralState:
    """Full state tendency; extra(state) -> state adds forcing terms."""
    out = linear_rate(p, s) - advect(s, s)
    if extra is not None:
        out = out + extra(s)
    return out


# ---------------------------------------------------------------------------
# time integration

@dataclass
class Trajectory:
    """Recorded time series of one integration."""

    times: np.ndarray
    amplitude: np.ndarray       # weighted norm at the recorded times
    mean0: np.ndarray           # net-transport coefficient time series
    final: SpectralState
    verdict: str                # "steady", "max_time", or "stopped"
    steps: int
    dt: float
    snapshots: list = dc_field(default_factory=list)


def _decay_arrays(p: NondimParams, g: Grid):
    al = g.alpha[:, None]
    Q = g.lam**2 + p.delta1p * al**2 + p.delta0p * g.ksin[None, :] ** 2
    d_psi = -(p.prandtl / g.lam) * Q
    d_theta = -g.lam.copy()
    d_mean = -p.prandtl * (g.kcos**2 + p.delta0p)
    return d_psi, d_mean, d_theta


def _wnorm(psi, mean, theta, g: Grid, w: float) -> float:
    roll = float(np.sum(g.lam[1:] * (psi[1:] * psi[1:].conj()).real))
    meanp = mean[0] ** 2 + 0.5 * float(np.dot(mean[1:], mean[1:]))
    temp = 0.5 * float(np.dot(theta[0].real, theta[0].real))
    temp += float(np.sum((theta[1:] * theta[1:].conj()).real))
    return float(np.sqrt(max(2.0 * np.pi * g.r0 * (roll + meanp + w * temp), 0.0)))


def _explicit(p: NondimParams, s: SpectralState, extra):
    """Non-stiff tendency terms: buoyancy coupling, advection, forcing."""
    g = s.grid
    al = g.alpha[:, None]
    adv = advect(s, s)
    e_psi = (p.prandtl * p.rayleigh / g.lam) * (1j * al * s.theta) - adv.psi
    e_theta = -1j * al * s.psi - adv.theta
    e_mean = -adv.mean
    if extra is not None:
        ex = extra(s)
        e_psi = e_psi + ex.psi
        e_theta = e_theta + ex.theta
        e_mean = e_mean + ex.mean
    return e_psi, e_mean, e_theta


def _cfl_estimate(s: SpectralState) -> float:
    """Coefficient-sum bound on max |u| over the domain."""
    g = s.grid
    u1c, u2s = velocity_coefficients(s)
    u1max = 2.0 * float(np.sum(np.abs(u1c[1:]))) + float(np.sum(np.abs(u1c[0])))
    u2max = 2.0 * float(np.sum(np.abs(u2s)))
    dx = 2.0 * np.pi * g.r0 / (3 * g.kmax + 1)
    ds = 1.0 / (2 * g.nz + 2)
    return u1max / dx + u2max / ds


def step(p: NondimParams, s: SpectralState, dt: float, extra=None) -> SpectralState:
    """One second-order IMEX step without history.

    Crank-Nicolson on the diagonal dissipation combined with a midpoint
    evaluation of the explicit terms (the same bootstrap integrate uses
    for its first step).
    """
    g = s.grid
    d_psi, d_mean, d_theta = _decay_arrays(p, g)
    e0 = _explicit(p, s, extra)
    h = 0.5 * dt
    psi_h = ((1 + 0.5 * h * d_psi) * s.psi + h * e0[0]) / (1 - 0.5 * h * d_psi)
    mean_h = ((1 + 0.5 * h * d_mean) * s.mean + h * e0[1]) / (1 - 0.5 * h * d_mean)
    theta_h = ((1 + 0.5 * h * d_theta) * s.theta + h * e0[2]) / (1 - 0.5 * h * d_theta)
    em = _explicit(p, SpectralState(g, psi_h, mean_h, theta_h, s.time + h), extra)
    psi = ((1 + 0.5 * dt * d_psi) * s.psi + dt * em[0]) / (1 - 0.5 * dt * d_psi)
    mean = ((1 + 0.5 * dt * d_mean) * s.mean + dt * em[1]) / (1 - 0.5 * dt * d_mean)
    theta = ((1 + 0.5 * dt * d_theta) * s.theta + dt * em[2]) / (1 - 0.5 * dt * d_theta)
    out = SpectralState(g, psi, mean, theta, s.time + dt)
    if not out.is_finite():
        raise BlowUpError(f"non-finite state at t = {out.time:.6g}")
    return out


def integrate(p: NondimParams, s0: SpectralState, cfg: RunConfig,
              extra=None, cfl_check_every: int = 50) -> Trajectory:
    """March the state to cfg.t_end or to a steady balance.

    extra(state) -> state adds explicit forcing (used by the forced
    problem). Stops with verdict "steady" when the weighted residual
    norm of the full tendency drops below cfg.steady_tol, or when the
    relative state change per unit time falls below cfg.convergence_tol
    (if positive). Raises BlowUpError on non-finite or runaway
    amplitudes.
    """
    g = s0.grid
    dt = cfg.dt
    w = buoyancy_weight(p)
    d_psi, d_mean, d_theta = _decay_arrays(p, g)

    nsteps = max(1, int(round(cfg.t_end / dt)))
    record_every = max(1, int(round(cfg.record_interval / dt)))
    snap_every = int(round(cfg.snapshot_interval / dt)) if cfg.snapshot_interval > 0 else 0
    psi, mean, theta = s0.psi.copy(), s0.mean.copy(), s0.theta.copy()
    t = s0.time

    times = [t]
    amps = [_wnorm(psi, mean, theta, g, w)]
    m0s = [float(mean[0])]
    snaps = []
    if snap_every:
        snaps.append(SpectralState(g, psi, mean, theta, t))

    def pack(tt):
        return SpectralState(g, psi, mean, theta, tt)

    # bootstrap: CN half step, then a midpoint-corrected full step
    e_prev = _explicit(p, pack(t), extra)
    h = 0.5 * dt
    psi_h = ((1 + 0.5 * h * d_psi) * psi + h * e_prev[0]) / (1 - 0.5 * h * d_psi)
    mean_h = ((1 + 0.5 * h * d_mean) * mean + h * e_prev[1]) / (1 - 0.5 * h * d_mean)
    theta_h = ((1 + 0.5 * h * d_theta) * theta + h * e_prev[2]) / (1 - 0.5 * h * d_theta)
    e_mid = _explicit(p, SpectralState(g, psi_h, mean_h, theta_h, t + h), extra)
    psi = ((1 + 0.5 * dt * d_psi) * psi + dt * e_mid[0]) / (1 - 0.5 * dt * d_psi)
    mean = ((1 + 0.5 * dt * d_mean) * mean + dt * e_mid[1]) / (1 - 0.5 * dt * d_mean)
    theta = ((1 + 0.5 * dt * d_theta) * theta + dt * e_mid[2]) / (1 - 0.5 * dt * d_theta)
    t += dt
    steps = 1
    verdict = "max_time"
    warned_cfl = False

    cp_psi = 1 + 0.5 * dt * d_psi
    cm_psi = 1.0 / (1 - 0.5 * dt * d_psi)
    cp_mean = 1 + 0.5 * dt * d_mean
    cm_mean = 1.0 / (1 - 0.5 * dt * d_mean)
    cp_theta = 1 + 0.5 * dt * d_theta
    cm_theta = 1.0 / (1 - 0.5 * dt * d_theta)

    prev_amp = amps[0]
    while steps < nsteps:
        state = pack(t)
        e_curr = _explicit(p, state, extra)

        res = _wnorm(d_psi * psi + e_curr[0], d_mean * mean + e_curr[1],
                     d_theta * theta + e_curr[2], g, w)
        if res < cfg.steady_tol:
            verdict = "steady"
            break

        psi = (cp_psi * psi + dt * (1.5 * e_curr[0] - 0.5 * e_prev[0])) * cm_psi
        mean = (cp_mean * mean + dt * (1.5 * e_curr[1] - 0.5 * e_prev[1])) * cm_mean
        theta = (cp_theta * theta + dt * (1.5 * e_curr[2] - 0.5 * e_prev[2])) * cm_theta
        e_prev = e_curr
        t += dt
        steps += 1

        amp = _wnorm(psi, mean, theta, g, w)
        if not np.isfinite(amp) or amp > cfg.blowup:
            raise BlowUpError(f"amplitude {amp:.3e} at t = {t:.6g}")
        if cfg.convergence_tol > 0 and amp > 0:
            if abs(amp - prev_amp) / (amp * dt) < cfg.convergence_tol:
                verdict = "steady"
                break
        prev_amp = amp
        if steps % record_every == 0 or steps == nsteps:
            times.append(t)
            amps.append(amp)
            m0s.append(float(mean[0]))
        if snap_every and steps % snap_every == 0:
            snaps.append(pack(t))
        if not warned_cfl and steps % cfl_check_every == 0:
            if dt * _cfl_estimate(pack(t)) > 1.0:
                warnings.warn("time step exceeds the advective stability "
                              "estimate; results may be inaccurate")
                warned_cfl = True

    final = pack(t)
    if times[-1] != t:
        times.append(t)
        amps.append(_wnorm(psi, mean, theta, g, w))
        m0s.append(float(mean[0]))
    return Trajectory(np.asarray(times), np.asarray(amps), np.asarray(m0s),
                      final, verdict, steps, dt, snaps)


# ---------------------------------------------------------------------------
# helpers

def amplitude_of(p: NondimParams, s: SpectralState, pair) -> tuple[float, float]:
    """Projection of s onto the critical plane as (amplitude, phase).

    pair is the critical EigenPair with its unit-norm eigenvector; the
    orthogonal partner is its quarter-wavelength zonal translate. Phase
    zero means pure alignment with the eigenvector itself.
    """
    psi1 = pair.state
    if psi1 is None:
        raise ValueError("eigenpair carries no eigenvector state")
    psi1t = shift_zonal(psi1, np.pi * psi1.grid.r0 / (2 * pair.k))
    w = p.prandtl * pair.R
    a = inner(s, psi1, w)
    b = inner(s, psi1t, w)
    return float(np.hypot(a, b)), float(np.arctan2(b, a))


def weighted_amplitude(p: NondimParams, s: SpectralState) -> float:
    """Weighted norm used as the scalar amplitude diagnostic."""
    return norm(s, buoyancy_weight(p))


def random_state(grid: Grid, seed: int, kband: int = 3, amplitude: float = 1e-3,
                 jband: int | None = None) -> SpectralState:
    """Reproducible random perturbation with unit-weight norm `amplitude`.

    Populates roll, temperature, and mean modes with |k| <= kband and
    j <= jband (defaults to all vertical modes).
    """
    rng = np.random.default_rng(seed)
    g = grid
    kb = min(kband, g.kmax - 1)
    jb = g.nz if jband is None else min(jband, g.nz)
    s = SpectralState.zero(g)
    s.psi[1 : kb + 1, :jb] = rng.standard_normal((kb, jb)) + 1j * rng.standard_normal((kb, jb))
    s.theta[: kb + 1, :jb] = rng.standard_normal((kb + 1, jb)) + 1j * rng.standard_normal((kb + 1, jb))
    s.theta[0] = s.theta[0].real
    s.mean[: jb + 1] = rng.standard_normal(jb + 1)
    s = SpectralState(g, s.psi, s.mean, s.theta)
    n = norm(s, 1.0)
    return s * (amplitude / n)


def fit_exponential_rate(times, values, tmin: float | None = None,
                         tmax: float | None = None) -> tuple[float, float]:
    """Least-squares fit of values ~ A*exp(rate*t); returns (rate, A).

    Only strictly positive magnitudes inside the window participate.
    """
    tt = np.asarray(times, float)
    vv = np.abs(np.asarray(values, float))
    mask = vv > 0
    if tmin is not None:
        mask &= tt >= tmin
    if tmax is not None:
        mask &= tt <= tmax
    if mask.sum() < 2:
        raise ValueError("not enough points for a rate fit")
    coef = np.polyfit(tt[mask], np.log(vv[mask]), 1)
    return float(coef[0]), float(np.exp(coef[1]))
