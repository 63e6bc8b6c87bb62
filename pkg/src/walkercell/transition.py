"""Center-manifold reduction at criticality and transition classification.

At the critical Rayleigh number the marginal plane is spanned by the
neutral eigenvector and its quarter-wavelength translate. The remaining
(stable) component is slaved: to leading order it is the solution of

    L Psi = advect(psi1, psi1)

on the orthogonal complement, which decouples into small blocks because
the quadratic product of a wavenumber-kc mode only populates zonal
wavenumbers 0 and 2 kc. The reduced dynamics on the plane is the
rotation-invariant scalar equation

    r' = beta1(R) r + alpha_t r**3 + O(r**5),

whose cubic coefficient alpha_t (the transition number) is computed two
deliberately different ways: by projecting the cross advection terms
onto the eigenvector, and through the energy identity as
<advect(psi1, psi1), Psi> = <L Psi, Psi>, which is negative whenever
Psi is nonzero because L is negative definite off the marginal plane.
The quadratic reduced coefficient vanishes identically (wavenumber
selection), so the leading order is always k = 3 for this system.

The classification kit is generic over scalar normal forms
x' = beta1(lambda) x + alpha x**k: odd k with alpha < 0 gives a
continuous transition (Type I), odd k with alpha > 0 a jump transition
(Type II), and even k a mixed one (Type III), with branch amplitudes
|beta1/alpha|**(1/(k-1)). A brute-force integration oracle validates
the table without using it.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import advect, linear_rate
from .field import Grid, SpectralState, inner, norm, shift_zonal
from .linstab import EigenPair, block_rates, critical_eigenpair, critical_rayleigh, \
    marginal_rayleigh
from .params import NondimParams


class ConditioningError(RuntimeError):
    """Slaved-block solve is near singular (degenerate extra eigenvalue)."""


class UnclassifiableError(ValueError):
    """Vanishing leading coefficient; higher-order reduction needed."""


@dataclass
class CenterManifoldField:
    Psi: SpectralState
    residual: float


@dataclass
class ReducedModel:
    """Scalar reduced equation data near the critical parameter.

    beta1 holds sampled (parameter, growth-rate) pairs; e1star equals e1
    because the linear operator is self-adjoint in the weighted inner
    product, so no separate adjoint solve is needed.
    """

    lambda0: float
    beta1: np.ndarray
    beta1_slope: float
    alpha_t: float
    k_order: int
    e1: SpectralState | None = None
    e1star: SpectralState | None = None


@dataclass
class BranchPrediction:
    """One predicted solution branch of the scalar normal form."""

    label: str                  # "upper" | "lower" | "single"
    stability: str              # "attractor" | "saddle"
    lambdas: np.ndarray
    amplitude: np.ndarray       # |x| along the branch (NaN where absent)
    signed: np.ndarray          # signed branch value for the scalar model


@dataclass
class TransitionReport:
    type: str                   # "I" | "II" | "III"
    lambda0: float
    alpha_t: float
    k_order: int
    branches: list[BranchPrediction]
    notes: list[str] = dc_field(default_factory=list)


def default_grid(p: NondimParams, kc: int, nz: int = 16) -> Grid:
    """Grid resolving the marginal mode and its first harmonic exactly."""
    nx = max(16, 4 * kc + 4)
    return Grid(p.r0, nx, nz)


def critical_pair(p: NondimParams, grid: Grid | None = None) -> tuple[EigenPair, SpectralState]:
    """Critical eigenpair and its quarter-wavelength partner."""
    if grid is None:
        cp = critical_rayleigh(p)
        grid = default_grid(p, cp.kc)
    pair = critical_eigenpair(p, grid)
    partner = shift_zonal(pair.state, np.pi * p.r0 / (2 * pair.k))
    return pair, partner


def _solve_slaved(p: NondimParams, rhs: SpectralState, skip: tuple[int, int],
                  cond_limit: float = 1e12) -> SpectralState:
    """Solve L Psi = rhs blockwise, excluding the marginal (k, j) slot."""
    g = rhs.grid
    out = SpectralState.zero(g)
    jj = np.pi * np.arange(1, g.nz + 1)
    out.mean[:] = rhs.mean / (-p.prandtl * (g.kcos**2 + p.delta0p))
    out.theta[0, :] = rhs.theta[0].real / (-(jj**2))
    for k in range(1, g.kmax):
        col_psi = rhs.psi[k]
        col_theta = rhs.theta[k]
        if not (np.any(col_psi) or np.any(col_theta)):
            continue
        a = k / p.r0
        lam = a * a + jj**2
        Q = lam**2 + p.delta1p * a * a + p.delta0p * jj**2
        for j in range(1, g.nz + 1):
            if k == skip[0] and j == skip[1]:
                continue
            G = np.array(
                [[-p.prandtl * Q[j - 1] / lam[j - 1],
                  1j * p.prandtl * p.rayleigh * a / lam[j - 1]],
                 [-1j * a, -lam[j - 1]]], complex)
            if np.linalg.cond(G) > cond_limit:
                raise ConditioningError(
                    f"slaved block (k={k}, j={j}) is near singular; a second "
                    f"mode is close to marginal at R = {p.rayleigh:.6g}")
            sol = np.linalg.solve(G, [col_psi[j - 1], col_theta[j - 1]])
            out.psi[k, j - 1] = sol[0]
            out.theta[k, j - 1] = sol[1]
    return SpectralState(g, out.psi, out.mean, out.theta)


def center_manifold_leading(p: NondimParams, pair: EigenPair) -> CenterManifoldField:
    """Leading-order slaved field Psi with -L Psi = -advect(psi1, psi1).

    p must carry the critical Rayleigh number (pair.R). The marginal
    slot is excluded from the solve; orthogonality to the critical
    plane then holds by wavenumber structure and is asserted.
    """
    psi1 = pair.state
    if psi1 is None:
        raise ValueError("eigenpair carries no eigenvector state")
    rhs = advect(psi1, psi1)
    Psi = _solve_slaved(p, rhs, (pair.k, pair.j))
    w = p.prandtl * pair.R
    res = linear_rate(p, Psi) - rhs
    rhs_norm = norm(rhs, w)
    residual = norm(res, w) / rhs_norm if rhs_norm > 0 else 0.0
    partner = shift_zonal(psi1, np.pi * p.r0 / (2 * pair.k))
    ortho = max(abs(inner(Psi, psi1, w)), abs(inner(Psi, partner, w)))
    if ortho > 1e-10:
        raise RuntimeError(f"slaved field leaks onto the marginal plane: {ortho:.3e}")
    return CenterManifoldField(Psi, float(residual))


def transition_number(p: NondimParams, grid: Grid | None = None,
                      route: str = "projection", scale: float = 1.0,
                      phase: float = 0.0) -> float:
    """Cubic coefficient of the reduced equation at criticality.

    route "projection" evaluates the cross advection terms against the
    eigenvector; route "energy" uses <advect(psi1, psi1), Psi>, equal by
    the bilinear antisymmetry and manifestly negative. scale and phase
    re-gauge the eigenvector (amplitude c scales the coefficient by c**2,
    the phase must not change it) and exist for invariance checks.
    """
    cp = critical_rayleigh(p)
    pc = p.replace(rayleigh=cp.Rc)
    if grid is None:
        grid = default_grid(p, cp.kc)
    pair, partner = critical_pair(pc, grid)
    psi1 = pair.state
    if phase != 0.0:
        psi1 = float(np.cos(phase)) * psi1 + float(np.sin(phase)) * partner
    if scale != 1.0:
        psi1 = scale * psi1
    work = EigenPair(pair.beta, pair.k, pair.j, pair.kind, pair.multiplicity,
                     pair.R, psi1)
    Psi = center_manifold_leading(pc, work).Psi
    w = pc.prandtl * cp.Rc
    nrm2 = inner(psi1, psi1, w)
    if route == "projection":
        cross = advect(psi1, Psi) + advect(Psi, psi1)
        return float(-inner(cross, psi1, w) / nrm2)
    if route == "energy":
        return float(inner(advect(psi1, psi1), Psi, w) / nrm2)
    raise ValueError(f"unknown route {route!r}")


def reduced_model(p: NondimParams, grid: Grid | None = None,
                  nsample: int = 5, window: float = 0.02) -> ReducedModel:
    """Sampled reduced-equation data for the convection problem.

    The quadratic reduced coefficient is asserted to vanish (wavenumber
    selection), fixing k_order = 3.
    """
    cp = critical_rayleigh(p)
    pc = p.replace(rayleigh=cp.Rc)
    if grid is None:
        grid = default_grid(p, cp.kc)
    pair, partner = critical_pair(pc, grid)
    w = pc.prandtl * cp.Rc

    quad = inner(advect(pair.state, pair.state), pair.state, w)
    if abs(quad) > 1e-10:
        raise RuntimeError(f"quadratic reduced coefficient unexpectedly {quad:.3e}")

    Rs = np.linspace((1 - window) * cp.Rc, (1 + window) * cp.Rc, nsample)
    betas = np.array([block_rates(p, cp.kc, cp.jc, R)[0] for R in Rs])
    slope = float(np.polyfit(Rs - cp.Rc, betas, 1)[0])
    alpha_t = transition_number(p, grid)
    return ReducedModel(
        lambda0=float(cp.Rc), beta1=np.column_stack([Rs, betas]),
        beta1_slope=slope, alpha_t=alpha_t, k_order=3,
        e1=pair.state, e1star=pair.state,
    )


# ---------------------------------------------------------------------------
# scalar normal-form kit

def _branch_grid(rm: ReducedModel) -> np.ndarray:
    lams = rm.beta1[:, 0]
    lo, hi = float(np.min(lams)), float(np.max(lams))
    if lo == hi:
        lo, hi = rm.lambda0 - 1.0, rm.lambda0 + 1.0
    return np.linspace(lo, hi, 41)


def classify(rm: ReducedModel) -> TransitionReport:
    """Transition type and predicted branches from (k_order, sign alpha).

    Odd k with alpha < 0: continuous transition, attracting branches on
    the unstable side. Odd k with alpha > 0: jump transition, saddle
    branches on the stable side. Even k: mixed transition, one signed
    branch crossing both sides, attracting where beta1 > 0.
    """
    if rm.alpha_t == 0:
        raise UnclassifiableError("leading coefficient is zero")
    k, a = rm.k_order, rm.alpha_t
    if k < 2:
        raise UnclassifiableError(f"k_order must be >= 2, got {k}")
    lam = _branch_grid(rm)
    beta = rm.beta1_slope * (lam - rm.lambda0)
    amp = np.abs(beta / a) ** (1.0 / (k - 1))
    notes = [f"branch amplitude law |beta1/alpha|**(1/{k - 1})"]
    branches: list[BranchPrediction] = []

    if k % 2 == 1:
        unstable = beta > 0
        if a < 0:
            ttype = "I"
            side = unstable
            stab = "attractor"
            notes.append("supercritical branches attract; zero loses stability")
        else:
            ttype = "II"
            side = ~unstable & (beta != 0)
            stab = "saddle"
            notes.append("subcritical saddles; trajectories jump past them")
        for label, sgn in (("upper", 1.0), ("lower", -1.0)):
            vals = np.where(side, amp, np.nan)
            branches.append(BranchPrediction(label, stab, lam, vals, sgn * vals))
    else:
        ttype = "III"
        ratio = beta / a
        signed = -np.sign(ratio) * np.abs(ratio) ** (1.0 / (k - 1))
        vals = np.abs(signed)
        stab_side = beta > 0
        branches.append(BranchPrediction(
            "single", "attractor", lam, np.where(stab_side, vals, np.nan),
            np.where(stab_side, signed, np.nan)))
        branches.append(BranchPrediction(
            "single", "saddle", lam, np.where(~stab_side & (beta != 0), vals, np.nan),
            np.where(~stab_side & (beta != 0), signed, np.nan)))
        notes.append("one-sided attractor where beta1 > 0, saddle elsewhere")
    return TransitionReport(ttype, rm.lambda0, a, k, branches, notes)


@dataclass
class OracleRecord:
    lam: float
    beta1: float
    attractors: list[float]
    saddles: list[float]
    escaped_fraction: float
    zero_stable: bool


@dataclass
class OracleReport:
    k_order: int
    alpha_t: float
    records: list[OracleRecord]
    verdict: str


def _scalar_roots(beta: float, alpha: float, k: int, xmax: float):
    """Roots of beta*x + alpha*x**k in (-xmax, xmax) by dense sign scan."""
    f = lambda x: beta * x + alpha * x**k
    xs = np.linspace(-xmax, xmax, 4001)
    vals = f(xs)
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0 and abs(xs[i]) > 1e-12:
            roots.append(xs[i])
        if vals[i] * vals[i + 1] < 0:
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-300, rtol=8.9e-16))
    out = []
    for r in roots:
        if abs(r) < 1e-12:
            continue
        if all(abs(r - q) > 1e-9 * max(1.0, xmax) for q in out):
            out.append(float(r))
    return sorted(out)


def normal_form_oracle(k_order: int, alpha_t: float, beta1_slope: float,
                       lambdas, lambda0: float = 0.0) -> OracleReport:
    """Brute-force behavior of x' = beta1(lam)*x + alpha*x**k.

    Integrates fans of initial conditions at each parameter value,
    collects reached attractors, locates unstable roots by sign scan,
    and issues a transition verdict purely from the observed basins:
    no escape on the unstable side means continuous, full escape means
    jump, a split means mixed.
    """
    lambdas = np.asarray(lambdas, float)
    k, a = int(k_order), float(alpha_t)
    betas = beta1_slope * (lambdas - lambda0)
    with np.errstate(divide="ignore"):
        scales = np.abs(betas / a) ** (1.0 / (k - 1))
    s0 = float(np.max(scales)) if np.any(scales > 0) else 1.0
    x_esc = 4.0 * s0
    fan = np.array([-1.6, -0.8, -0.3, -0.05, 0.05, 0.3, 0.8, 1.6]) * s0

    records = []
    esc_fracs = []
    for lam, beta in zip(lambdas, betas):
        fs = lambda x, beta=beta: beta * x + a * x**k
        f = lambda t, x, beta=beta: beta * x + a * x**k
        esc_event = lambda t, x: abs(x[0]) - x_esc
        esc_event.terminal = True
        rate_floor = max(abs(beta), 1e-3)
        t_end = min(80.0 / rate_floor, 1e5)
        attractors: list[float] = []
        escaped = 0
        for x0 in fan:
            sol = solve_ivp(f, (0.0, t_end), [x0], rtol=1e-10, atol=1e-14,
                            events=esc_event, dense_output=False)
            xf = float(sol.y[0, -1])
            if sol.status == 1 or abs(xf) >= 0.999 * x_esc:
                escaped += 1
                continue
            if abs(fs(xf)) < 1e-8 * max(1.0, abs(beta) * s0):
                if abs(xf) > 1e-6 * max(s0, 1.0):
                    lo_b, hi_b = xf - 0.2 * max(abs(xf), s0), xf + 0.2 * max(abs(xf), s0)
                    if fs(lo_b) * fs(hi_b) < 0:
                        xf = brentq(fs, lo_b, hi_b, xtol=1e-300, rtol=8.9e-16)
                    if all(abs(xf - q) > 1e-9 * max(1.0, s0) for q in attractors):
                        attractors.append(float(xf))
        roots = _scalar_roots(beta, a, k, x_esc)
        fprime = lambda x: beta + k * a * x ** (k - 1)
        saddles = [r for r in roots if fprime(r) > 0]
        rec = OracleRecord(float(lam), float(beta), sorted(attractors), saddles,
                           escaped / len(fan), beta < 0)
        records.append(rec)
        if beta > 0:
            esc_fracs.append(rec.escaped_fraction)

    if not esc_fracs:
        verdict = "undetermined"
    else:
        mean_esc = float(np.mean(esc_fracs))
        if mean_esc < 0.05:
            verdict = "I"
        elif mean_esc > 0.95:
            verdict = "II"
        else:
            verdict = "III"
    return OracleReport(k, a, records, verdict)


def predict_branch(p: NondimParams, R: float, theta: float = 0.0,
                   grid: Grid | None = None,
                   rm: ReducedModel | None = None) -> SpectralState:
    """Leading-order bifurcated steady state at Rayleigh number R > Rc.

    Amplitude r = |beta1(R)/alpha_t|**(1/2) from the fitted growth-rate
    slope, direction cos(theta) psi1 + sin(theta) partner.
    """
    if rm is None:
        rm = reduced_model(p, grid)
    if R <= rm.lambda0:
        raise ValueError(f"R = {R} is not above the critical value {rm.lambda0}")
    beta = rm.beta1_slope * (R - rm.lambda0)
    r = float(np.sqrt(abs(beta / rm.alpha_t)))
    psi1 = rm.e1
    cp = critical_rayleigh(p)
    partner = shift_zonal(psi1, np.pi * p.r0 / (2 * cp.kc))
    return r * (float(np.cos(theta)) * psi1 + float(np.sin(theta)) * partner)
