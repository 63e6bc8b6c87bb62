"""Forced steady states, their spectra, and pseudo-arclength continuation.

A nonuniform wall temperature phi(x1) on the inner boundary is absorbed
by the lifting profile phi(x1) * (1 - s), which leaves homogeneous
boundary conditions for the remaining temperature unknown. The price is
three extra terms in the tendency:

  * a constant source (diffusion and buoyancy acting on the lift),
  * a coupling term, linear in the state, from advection of the lift,
  * nothing in the mean-flow rows (the lift carries no momentum).

The forced tendency F(X; R) is affine in R and quadratic in X, so the
Jacobian is assembled exactly by applying the linearized map to unit
vectors, and dF/dR is an exact difference of two tendency evaluations.

The continuation engine is generic: it follows solution branches of any
finite-dimensional F(u, R) = 0 through folds by pseudo-arclength
stepping with a bordered Newton corrector, records fold points where
the tangent reverses in R, and tracks complex eigenvalue pairs for Hopf
crossings. Scalar oracle problems with known fold and Hopf data
exercise the same code paths as the channel problem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.fft import irfft, rfft

from .dynamics import advect, linear_rate, tendency
from .field import Grid, SpectralState, norm, velocity_coefficients
from .params import NondimParams


class ContinuationError(RuntimeError):
    """Corrector failed below the minimum arclength step."""


# ---------------------------------------------------------------------------
# forcing profiles and the lifted operator

@dataclass
class ForcingProfile:
    """Wall temperature perturbation plus volumetric heat source.

    phi[k] is the coefficient of exp(i k x1 / r0); the physical profile
    is phi[0] + 2 Re sum_k phi[k] E_k. The mean must vanish and the
    Nyquist band must be empty so products stay representable.

    Q[k, j-1] is the heat-source coefficient on E_k sin(j pi s), same
    half-spectrum convention; it enters the temperature tendency as a
    constant. amplitude is max |phi(x1)| on the zonal grid. epsilon is
    the measured size of the forced state, filled in once computed.
    """

    phi: np.ndarray
    grid: Grid
    Q: np.ndarray | None = None
    amplitude: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        g = self.grid
        self.phi = np.asarray(self.phi, complex)
        if self.phi.shape != (g.kmax + 1,):
            raise ValueError(f"phi must have {g.kmax + 1} zonal bands")
        if abs(self.phi[0]) > 1e-14:
            raise ValueError("forcing profile must have zero zonal mean")
        if abs(self.phi[g.kmax]) > 0:
            raise ValueError("forcing profile must leave the Nyquist band empty")
        if self.Q is None:
            self.Q = np.zeros((g.kmax + 1, g.nz), complex)
        else:
            self.Q = np.asarray(self.Q, complex)
            if self.Q.shape != (g.kmax + 1, g.nz):
                raise ValueError(f"Q must have shape {(g.kmax + 1, g.nz)}")
            if np.max(np.abs(self.Q[0].imag), initial=0.0) > 1e-14:
                raise ValueError("zonal-mean heat source must be real")
            if np.max(np.abs(self.Q[g.kmax]), initial=0.0) > 0:
                raise ValueError("heat source must leave the Nyquist band empty")
        vals = _zonal_values(self.phi, g.npad)
        self.amplitude = float(np.max(np.abs(vals)))

    def lift_norm(self, weight: float) -> float:
        """Weighted norm of the lift temperature phi(x1) (1 - s)."""
        g = self.grid
        total = 2.0 * float(np.sum(np.abs(self.phi[1:]) ** 2)) / 3.0
        return float(np.sqrt(weight * 2.0 * np.pi * g.r0 * total))


def cosine_forcing(grid: Grid, eps: float, k: int = 1) -> ForcingProfile:
    """phi(x1) = eps * cos(k x1 / r0)."""
    if not 1 <= k < grid.kmax:
        raise ValueError(f"forcing wavenumber {k} not resolvable on this grid")
    phi = np.zeros(grid.kmax + 1, complex)
    phi[k] = eps / 2.0
    return ForcingProfile(phi, grid)


def heat_source(grid: Grid, amplitude: float, k: int, j: int) -> np.ndarray:
    """Coefficients of Q = amplitude * cos(k x1 / r0) * sin(j pi s).

    The workhorse preset: one zonal harmonic times one vertical sine
    mode. k = 0 gives a zonally uniform source. Compose presets by
    adding the returned arrays.
    """
    if not 0 <= k < grid.kmax:
        raise ValueError(f"heat-source wavenumber {k} not resolvable on this grid")
    if not 1 <= j <= grid.nz:
        raise ValueError(f"heat-source vertical mode {j} out of range")
    Q = np.zeros((grid.kmax + 1, grid.nz), complex)
    Q[k, j - 1] = amplitude if k == 0 else amplitude / 2.0
    return Q


def forcing_from_function(grid: Grid, fn) -> ForcingProfile:
    """Sample a callable phi(x1) on the zonal grid and analyze it."""
    vals = np.asarray(fn(grid.x1), float)
    spec = rfft(vals) / grid.nx
    phi = np.zeros(grid.kmax + 1, complex)
    phi[:] = spec[: grid.kmax + 1]
    if abs(phi[0]) > 1e-12 * max(1.0, np.max(np.abs(vals))):
        raise ValueError("forcing profile must have zero zonal mean")
    phi[0] = 0.0
    phi[grid.kmax] = 0.0
    return ForcingProfile(phi, grid)


def _zonal_values(coeffs: np.ndarray, n: int) -> np.ndarray:
    spec = np.zeros(n // 2 + 1, complex)
    spec[: coeffs.shape[0]] = coeffs
    return irfft(spec * n, n=n)


def _zonal_multiply(cols: np.ndarray, profile_vals: np.ndarray, kmax: int) -> np.ndarray:
    """Multiply each column's zonal profile by pointwise values, exactly.

    cols has shape (kmax+1, m): half-spectra down axis 0. profile_vals
    holds the multiplier on the padded zonal grid, long enough that the
    product spectrum is alias-free.
    """
    n = profile_vals.shape[0]
    spec = np.zeros((n // 2 + 1, cols.shape[1]), complex)
    spec[: kmax + 1] = cols
    vals = irfft(spec * n, n=n, axis=0)
    prod = rfft(vals * profile_vals[:, None], axis=0) / n
    return prod[: kmax + 1]


def _lift_vertical_map(nz: int) -> np.ndarray:
    """Sine projection of (1 - s) * cos(m pi s): rows n = 1..nz, cols m = 0..nz."""
    n = np.arange(1, nz + 1)[:, None]
    m = np.arange(0, nz + 1)[None, :]
    out = 1.0 / ((n + m) * np.pi)
    diff = n - m
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(diff != 0, np.sign(diff) / (np.abs(diff) * np.pi), 0.0)
    out = out + off
    out[:, 0] = 2.0 / (n[:, 0] * np.pi)
    return out


def forcing_const(p: NondimParams, f: ForcingProfile) -> SpectralState:
    """Constant tendency: lift terms (diffusion + buoyancy) plus heat source."""
    g = f.grid
    out = SpectralState.zero(g)
    jj = np.pi * np.arange(1, g.nz + 1)
    proj = 2.0 / jj
    a = g.alpha
    out.theta[:, :] = (-(a**2) * f.phi)[:, None] * proj[None, :] + f.Q
    out.psi[:, :] = (p.prandtl * p.rayleigh * 1j * a * f.phi)[:, None] \
        * proj[None, :] / g.lam
    return SpectralState(g, out.psi, out.mean, out.theta)


def lift_terms(p: NondimParams, f: ForcingProfile, s: SpectralState) -> SpectralState:
    """Advection of the lift by the state: linear coupling, heat rows only.

    Contributes the projection of u2 phi - u1 phi'(x1) (1 - s) onto the
    homogeneous temperature modes. Exact: zonal products are dealiased
    on the padded grid and the vertical factor (1 - s) has a closed-form
    sine projection against each cosine mode.
    """
    g = s.grid
    if f.grid is not g and not f.grid.compatible(g):
        raise ValueError("forcing grid does not match the state grid")
    u1c, u2s = velocity_coefficients(s)
    phi_vals = _zonal_values(f.phi, g.npad)
    phip_vals = _zonal_values(1j * g.alpha * f.phi, g.npad)

    out = SpectralState.zero(g)
    out.theta[:, :] = _zonal_multiply(u2s, phi_vals, g.kmax)
    prod_cos = _zonal_multiply(u1c, phip_vals, g.kmax)
    out.theta[:, :] -= prod_cos @ _lift_vertical_map(g.nz).T
    return SpectralState(g, out.psi, out.mean, out.theta)


def forced_tendency(p: NondimParams, f: ForcingProfile, s: SpectralState) -> SpectralState:
    return tendency(p, s) + lift_terms(p, f, s) + forcing_const(p, f)


# ---------------------------------------------------------------------------
# real packing of spectral states

def dof_count(grid: Grid) -> int:
    return 4 * (grid.kmax - 1) * grid.nz + 2 * grid.nz + 1


def pack_state(s: SpectralState) -> np.ndarray:
    g = s.grid
    blocks = [
        s.psi[1: g.kmax].real.ravel(), s.psi[1: g.kmax].imag.ravel(),
        s.mean,
        s.theta[0].real,
        s.theta[1: g.kmax].real.ravel(), s.theta[1: g.kmax].imag.ravel(),
    ]
    return np.concatenate(blocks)


def unpack_state(vec: np.ndarray, grid: Grid, time: float = 0.0) -> SpectralState:
    g = grid
    nb = (g.kmax - 1) * g.nz
    psi = np.zeros((g.kmax + 1, g.nz), complex)
    theta = np.zeros((g.kmax + 1, g.nz), complex)
    i = 0
    psi[1: g.kmax] = vec[i: i + nb].reshape(g.kmax - 1, g.nz); i += nb
    psi[1: g.kmax] += 1j * vec[i: i + nb].reshape(g.kmax - 1, g.nz); i += nb
    mean = vec[i: i + g.nz + 1].copy(); i += g.nz + 1
    theta[0] = vec[i: i + g.nz]; i += g.nz
    theta[1: g.kmax] = vec[i: i + nb].reshape(g.kmax - 1, g.nz); i += nb
    theta[1: g.kmax] += 1j * vec[i: i + nb].reshape(g.kmax - 1, g.nz); i += nb
    return SpectralState(g, psi, mean, theta, time)


# ---------------------------------------------------------------------------
# basic (forced) states and their spectra

@dataclass
class BasicState:
    state: SpectralState
    forcing: ForcingProfile
    rayleigh: float
    residual: float
    iterations: int
    epsilon: float


def perturbation_operator(p: NondimParams, bs: SpectralState):
    """u -> -advect(bs, u) - advect(u, bs), the base-flow coupling."""
    def apply(u: SpectralState) -> SpectralState:
        return -advect(bs, u) - advect(u, bs)
    return apply


def lift_operator(p: NondimParams, f: ForcingProfile):
    """u -> lift_terms(p, f, u), the forcing-induced linear coupling."""
    def apply(u: SpectralState) -> SpectralState:
        return lift_terms(p, f, u)
    return apply


def _linear_matrix(apply_fn, grid: Grid) -> np.ndarray:
    n = dof_count(grid)
    J = np.empty((n, n))
    probe = np.zeros(n)
    for i in range(n):
        probe[i] = 1.0
        J[:, i] = pack_state(apply_fn(unpack_state(probe, grid)))
        probe[i] = 0.0
    return J


def _jacobian(p: NondimParams, f: ForcingProfile, X: SpectralState) -> np.ndarray:
    base = perturbation_operator(p, X)
    lift = lift_operator(p, f)

    def apply(u: SpectralState) -> SpectralState:
        return linear_rate(p, u) + lift(u) + base(u)
    return _linear_matrix(apply, X.grid)


def _measured_epsilon(p: NondimParams, f: ForcingProfile, X: SpectralState) -> float:
    """Smallness measure of the forced state: L2 norm of (V, J).

    The temperature includes the lift, so the lift's own norm enters.
    Unit temperature weight: the perturbative statements are about the
    plain L2 size of the state, not the energy norm.
    """
    return float(np.hypot(norm(X, 1.0), f.lift_norm(1.0)))


def _newton(p, f, g, X, tol, max_iter):
    w = p.prandtl * p.rayleigh
    fscale = norm(forcing_const(p, f), w)

    def resid(s):
        return norm(forced_tendency(p, f, s), w) / fscale

    r = resid(X)
    it = 0
    while r > tol and it < max_iter:
        J = _jacobian(p, f, X)
        rhs = -pack_state(forced_tendency(p, f, X))
        step = np.linalg.solve(J, rhs)
        lam = 1.0
        while lam > 1e-4:
            Xn = unpack_state(pack_state(X) + lam * step, g)
            rn = resid(Xn)
            if rn < r or rn < tol:
                X, r = Xn, rn
                break
            lam *= 0.5
        else:
            return X, r, it, False
        it += 1
    return X, r, it, r <= tol


def basic_state(p: NondimParams, f: ForcingProfile, grid: Grid | None = None,
                tol: float = 1e-10, max_iter: int = 40,
                start: SpectralState | None = None) -> BasicState:
    """Steady forced state by damped Newton from rest (or a warm start).

    The residual is the weighted norm of the tendency relative to the
    weighted norm of the constant forcing term. If the cold solve stalls
    (it can near the unforced critical point, where the linearization at
    rest is nearly singular), the solve is retried by marching up in
    Rayleigh number with warm starts, which follows the smooth forced
    branch instead. The measured smallness of the result is recorded and
    a warning issued when it exceeds 0.1.
    """
    g = grid if grid is not None else f.grid
    X0 = start.copy() if start is not None else SpectralState.zero(g)
    w = p.prandtl * p.rayleigh
    if norm(forcing_const(p, f), w) == 0.0:
        f.epsilon = 0.0
        return BasicState(SpectralState.zero(g), f, p.rayleigh, 0.0, 0, 0.0)

    X, r, it, ok = _newton(p, f, g, X0, tol, max_iter)
    if not ok and start is None:
        X = SpectralState.zero(g)
        total = 0
        for R in np.linspace(0.8 * p.rayleigh, p.rayleigh, 8):
            q = p.replace(rayleigh=float(R))
            X, r, it, ok = _newton(q, f, g, X, tol, max_iter)
            total += it
            if not ok:
                break
        it = total
    if not ok:
        raise ContinuationError(
            f"forced state did not converge: residual {r:.3e} after {it} iterations")
    eps = _measured_epsilon(p, f, X)
    if eps > 0.1:
        warnings.warn(
            f"forced state magnitude {eps:.3g} exceeds 0.1; perturbative "
            "statements about the forced regime may not apply", stacklevel=2)
    f.epsilon = eps
    return BasicState(X, f, p.rayleigh, float(r), it, eps)


def perturbed_spectrum(p: NondimParams, bs: BasicState, R: float | None = None,
                       nev: int = 10) -> np.ndarray:
    """Leading eigenvalues of the operator family R -> L_R + coupling(bs).

    The basic state is held fixed; R enters only the linear part. With
    R = None the spectrum is taken at the Rayleigh number the state was
    computed at. Eigenvalues may be complex; sorted by descending real
    part.
    """
    Rval = bs.rayleigh if R is None else float(R)
    q = p.replace(rayleigh=Rval)
    J = _jacobian(q, bs.forcing, bs.state)
    ev = np.linalg.eigvals(J)
    order = np.argsort(-ev.real)
    return ev[order][:nev]


def critical_rayleigh_forced(p: NondimParams, bs: BasicState,
                             Rlo: float, Rhi: float,
                             rtol: float = 1e-10, max_iter: int = 200) -> float:
    """Crossing Rayleigh number of the perturbed operator family.

    Bisects the leading real part of R -> L_R + coupling(bs) with the
    basic state held fixed: the forced analog of the unforced crossing
    search, so the two are directly comparable. The crossing sits within
    a basic-state-sized distance of the unforced critical value.
    """
    def leading(R):
        return float(perturbed_spectrum(p, bs, R=R, nev=1)[0].real)

    flo, fhi = leading(Rlo), leading(Rhi)
    if flo >= 0:
        raise ValueError(f"leading eigenvalue already positive at R = {Rlo}")
    if fhi <= 0:
        raise ValueError(f"leading eigenvalue still negative at R = {Rhi}")
    lo, hi = float(Rlo), float(Rhi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if leading(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < rtol * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# generic pseudo-arclength continuation

@dataclass
class BranchPoint:
    s: float
    R: float
    u: np.ndarray
    amplitude: float
    index: int
    leading: complex


@dataclass
class FoldPoint:
    s: float
    R: float
    u: np.ndarray
    min_abs_eig: float
    index_before: int
    index_after: int


@dataclass
class HopfPoint:
    R: float
    frequency: float
    pair: complex
    u: np.ndarray | None = None


@dataclass
class Branch:
    points: list[BranchPoint] = dc_field(default_factory=list)
    folds: list[FoldPoint] = dc_field(default_factory=list)
    hopf: list[HopfPoint] = dc_field(default_factory=list)
    stopped: str = "unknown"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points])


def _tangent(J: np.ndarray, FR: np.ndarray, prev: np.ndarray | None) -> np.ndarray:
    """Unit tangent (du, dR) of the solution curve, oriented like prev."""
    z = np.linalg.solve(J, -FR)
    t = np.concatenate([z, [1.0]])
    t /= np.linalg.norm(t)
    if prev is not None and t @ prev < 0:
        t = -t
    return t


def _corrector(Ffun, Jfun, u, R, t, ds, tol, max_iter=12):
    n = u.shape[0]
    up = u + ds * t[:n]
    Rp = R + ds * t[n]
    for _ in range(max_iter):
        F = Ffun(up, Rp)
        c = t[:n] @ (up - u) + t[n] * (Rp - R) - ds
        res = np.linalg.norm(F) + abs(c)
        if res < tol:
            return up, float(Rp), True
        J, FR = Jfun(up, Rp)
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = J
        M[:n, n] = FR
        M[n, :n] = t[:n]
        M[n, n] = t[n]
        step = np.linalg.solve(M, -np.concatenate([F, [c]]))
        up = up + step[:n]
        Rp = Rp + step[n]
    F = Ffun(up, Rp)
    c = t[:n] @ (up - u) + t[n] * (Rp - R) - ds
    return up, float(Rp), (np.linalg.norm(F) + abs(c)) < tol


def arclength_continue(Ffun, Jfun, u0: np.ndarray, R0: float, R_end: float,
                       ds: float, *, amplitude=None, newton_tol: float = 1e-11,
                       ds_min: float = 1e-9, max_steps: int = 2000,
                       u_max: float = 1e6) -> Branch:
    """Follow F(u, R) = 0 from (u0, R0) toward R_end through folds.

    Ffun(u, R) returns the residual vector; Jfun(u, R) returns the pair
    (J, dF/dR). Fold points are located where the tangent R-component
    changes sign and are refined by bisection on that component. The
    stability index is the count of eigenvalues with positive real part.
    """
    amp = amplitude if amplitude is not None else np.linalg.norm
    u, R = np.asarray(u0, float).copy(), float(R0)
    F0 = Ffun(u, R)
    if np.linalg.norm(F0) > 1e-8 * max(1.0, np.linalg.norm(u)):
        J, _ = Jfun(u, R)
        u = u - np.linalg.solve(J, F0)

    def point(u, R, s):
        J, _ = Jfun(u, R)
        ev = np.linalg.eigvals(J)
        lead = ev[np.argmax(ev.real)]
        return BranchPoint(s, R, u.copy(), float(amp(u)), int(np.sum(ev.real > 0)),
                           complex(lead)), ev

    br = Branch()
    s_arc = 0.0
    pt, ev = point(u, R, s_arc)
    br.points.append(pt)

    J, FR = Jfun(u, R)
    t = _tangent(J, FR, None)
    if (R_end - R0) * t[-1] < 0:
        t = -t
    hopf_prev = _leading_complex(ev)

    step = ds
    for _ in range(max_steps):
        ok = False
        while step >= ds_min:
            un, Rn, ok = _corrector(Ffun, Jfun, u, R, t, step, newton_tol)
            if ok and np.linalg.norm(un) < u_max:
                break
            step *= 0.5
        if not ok:
            raise ContinuationError(
                f"corrector failed below ds_min = {ds_min} at R = {R:.6g}")
        s_arc += step
        Jn, FRn = Jfun(un, Rn)
        tn = _tangent(Jn, FRn, t)

        if t[-1] * tn[-1] < 0:
            fold = _refine_fold(Ffun, Jfun, u, R, t, step, newton_tol)
            if fold is not None:
                fu, fR = fold
                Jf, _ = Jfun(fu, fR)
                evf = np.linalg.eigvals(Jf)
                idx_before = br.points[-1].index
                ptn_tmp, evn = point(un, Rn, s_arc)
                br.folds.append(FoldPoint(
                    s_arc, fR, fu, float(np.min(np.abs(evf))),
                    idx_before, ptn_tmp.index))
                pt = ptn_tmp
            else:
                pt, evn = point(un, Rn, s_arc)
        else:
            pt, evn = point(un, Rn, s_arc)
        br.points.append(pt)

        hopf_now = _leading_complex(evn)
        if hopf_prev is not None and hopf_now is not None \
                and hopf_prev.real < 0 <= hopf_now.real:
            br.hopf.append(HopfPoint(Rn, abs(hopf_now.imag), complex(hopf_now),
                                     un.copy()))
        hopf_prev = hopf_now

        u, R, t = un, Rn, tn
        if step < ds:
            step = min(ds, step * 2.0)
        if (R_end > R0 and R >= R_end) or (R_end < R0 and R <= R_end):
            br.stopped = "reached_end"
            break
    else:
        br.stopped = "max_steps"
    return br


def _leading_complex(ev: np.ndarray):
    mask = np.abs(ev.imag) > 1e-6
    if not np.any(mask):
        return None
    sub = ev[mask]
    return complex(sub[np.argmax(sub.real)])


def _refine_fold(Ffun, Jfun, u, R, t, ds, tol, iters=60):
    """Bisection on the tangent R-component between arclength 0 and ds."""
    def tangent_at(dsx):
        un, Rn, ok = _corrector(Ffun, Jfun, u, R, t, dsx, tol)
        if not ok:
            return None
        Jn, FRn = Jfun(un, Rn)
        return un, Rn, _tangent(Jn, FRn, t)

    lo, hi = 0.0, ds
    t_lo = t[-1]
    best = None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        got = tangent_at(mid) if mid > 0 else None
        if got is None:
            lo = mid
            continue
        un, Rn, tm = got
        best = (un, Rn)
        if t_lo * tm[-1] < 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-14 * max(ds, 1.0):
            break
    return best


# ---------------------------------------------------------------------------
# channel-problem wrappers

def continue_branch(p: NondimParams, f: ForcingProfile, R_start: float,
                    R_end: float, ds: float, grid: Grid | None = None,
                    max_steps: int = 2000) -> Branch:
    """Continue the forced steady branch in the Rayleigh number."""
    g = grid if grid is not None else f.grid

    def Ffun(u, R):
        q = p.replace(rayleigh=R)
        return pack_state(forced_tendency(q, f, unpack_state(u, g)))

    def Jfun(u, R):
        q = p.replace(rayleigh=R)
        X = unpack_state(u, g)
        J = _jacobian(q, f, X)
        FR = Ffun(u, R + 1.0) - Ffun(u, R)
        return J, FR

    bs = basic_state(p.replace(rayleigh=R_start), f, g)

    def amp(u):
        q = p.replace(rayleigh=R_start)
        return norm(unpack_state(u, g), q.prandtl * q.rayleigh)

    return arclength_continue(Ffun, Jfun, pack_state(bs.state), R_start, R_end,
                              ds, amplitude=amp, max_steps=max_steps)


def detect_hopf(p: NondimParams, f: ForcingProfile, R_window: tuple[float, float],
                nev: int = 10, samples: int = 25,
                rtol: float = 1e-10) -> HopfPoint | None:
    """Hopf crossing of the forced state in an R window, None if absent."""
    def pair_at(R):
        q = p.replace(rayleigh=R)
        bs = basic_state(q, f)
        return _leading_complex(perturbed_spectrum(q, bs, nev=nev))

    return hopf_from_spectrum(pair_at, R_window, samples=samples, rtol=rtol)


def hopf_from_spectrum(pair_fun, window: tuple[float, float], samples: int = 25,
                       rtol: float = 1e-10) -> HopfPoint | None:
    """Generic Hopf detector over a parameter window.

    pair_fun(mu) returns the leading complex eigenvalue (or None). The
    crossing is bracketed on a uniform sample and refined by bisection
    on its real part.
    """
    lo, hi = float(window[0]), float(window[1])
    mus = np.linspace(lo, hi, samples)
    pairs = [pair_fun(m) for m in mus]
    bracket = None
    for i in range(samples - 1):
        a, b = pairs[i], pairs[i + 1]
        if a is None or b is None:
            continue
        if a.real < 0 <= b.real:
            bracket = (mus[i], mus[i + 1])
            break
    if bracket is None:
        return None
    a, b = bracket
    pb = pair_fun(b)
    span = max(abs(hi), abs(lo), 1.0)
    while b - a > rtol * span:
        m = 0.5 * (a + b)
        pm = pair_fun(m)
        if pm is None or pm.real < 0:
            a = m
        else:
            b, pb = m, pm
    return HopfPoint(0.5 * (a + b), abs(pb.imag), complex(pb))


@dataclass
class AmplitudeFit:
    exponent: float
    prefactor: float
    r2: float
    linear_r2: float


def periodic_amplitude_fit(mus, amps, r2_min: float = 0.99) -> AmplitudeFit:
    """Power-law fit amplitude ~ C (mu - mu_c)^p by log-log least squares.

    mus must already be distances above the crossing. The R^2 gate
    rejects data that is not power-law; the linear_r2 field reports how
    well a straight line through the origin would do instead, for
    comparison against the square-root law.
    """
    mus = np.asarray(mus, float)
    amps = np.asarray(amps, float)
    if np.any(mus <= 0) or np.any(amps <= 0):
        raise ValueError("amplitude fit needs positive distances and amplitudes")
    lx, ly = np.log(mus), np.log(amps)
    pfit = np.polyfit(lx, ly, 1)
    pred = np.polyval(pfit, lx)
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if r2 < r2_min:
        raise ValueError(f"log-log fit R^2 = {r2:.4f} below the {r2_min} gate")
    c = float(mus @ amps / (mus @ mus))
    lin_pred = c * mus
    ss_res_l = float(np.sum((amps - lin_pred) ** 2))
    ss_tot_l = float(np.sum((amps - amps.mean()) ** 2))
    lin_r2 = 1.0 - ss_res_l / ss_tot_l if ss_tot_l > 0 else 1.0
    return AmplitudeFit(float(pfit[0]), float(np.exp(pfit[1])), r2, lin_r2)


# ---------------------------------------------------------------------------
# branch output

def branch_to_csv(branch: Branch, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("s,R,amplitude,index,re_leading,im_leading\n")
        for pt in branch.points:
            fh.write(f"{pt.s!r},{pt.R!r},{pt.amplitude!r},{pt.index},"
                     f"{pt.leading.real!r},{pt.leading.imag!r}\n")


def branch_events(branch: Branch) -> dict:
    return {
        "folds": [
            {"R": f.R, "min_abs_eig": f.min_abs_eig,
             "index_before": f.index_before, "index_after": f.index_after}
            for f in branch.folds
        ],
        "hopf": [
            {"R": h.R, "frequency": h.frequency,
             "re": h.pair.real, "im": h.pair.imag}
            for h in branch.hopf
        ],
        "stopped": branch.stopped,
    }
