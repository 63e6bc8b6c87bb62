"""Linear stability of the conduction state.

The linearization about the motionless conducting profile decouples in
the spectral basis: each roll pair (k >= 1, j) couples one stream mode
to one temperature mode, the zonal-mean u1 modes decay at fixed rates,
and the k = 0 temperature modes decay diffusively. Rotation enters the
momentum balance only through gradient terms that the pressure absorbs,
so no block depends on the rotation number.

With the weight w = Pr * R on the temperature component the generator
is self-adjoint, so all growth rates are real and the leading one
crosses zero exactly on the marginal curve

    R(alpha, j) = lam * (lam**2 + d1p*alpha**2 + d0p*(j*pi)**2) / alpha**2,
    lam = alpha**2 + (j*pi)**2,

which at d0p = d1p = 0 has the classical minimum 27*pi**4/4 at
alpha = pi/sqrt(2). Two routes to the critical Rayleigh number are kept
deliberately separate: the closed form above, and a root search on the
leading eigenvalue of dense assembled wavenumber blocks. Time scaling
note: the dense blocks are generators (d/dt = G), equivalent to the
generalized formulation carrying 1/Pr on the velocity rows; eigenvalue
zero crossings agree between the two, which is all criticality uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .field import Grid, SpectralState
from .params import NondimParams

CLASSICAL_RAYLEIGH = 27.0 * np.pi**4 / 4.0
CLASSICAL_ALPHA = np.pi / np.sqrt(2.0)


@dataclass(frozen=True)
class EigenPair:
    """One growth rate with its mode labels.

    kind is "roll" (coupled stream/temperature pair, two rates per
    (k, j)), "mean" (zonal-mean u1 cosine mode), or "temp" (k = 0
    temperature mode). multiplicity counts the real dimension carried
    by the zonal pair +-k. beta is real for the idealized problem but
    typed complex because the forced problem reuses this record. state,
    when attached, is the unit-norm eigenvector.
    """

    beta: complex
    k: int
    j: int
    kind: str
    multiplicity: int
    R: float
    state: SpectralState | None = None

    @property
    def rate(self) -> float:
        return float(np.real(self.beta))


@dataclass(frozen=True)
class CriticalPoint0:
    """Onset of instability over the integer zonal lattice.

    multiplicity is 2 for a simple critical wavenumber (the +-kc pair)
    and 4 when a rival wavenumber ties within tie_rtol (degenerate).
    """

    Rc: float
    kc: int
    multiplicity: int
    degenerate: bool
    jc: int = 1
    alpha: float = 0.0
    rival_k: int = 0
    rival_gap: float = np.inf


def marginal_curve(alpha, j: int = 1, d0p: float = 0.0, d1p: float = 0.0):
    """Rayleigh number where the (alpha, j) roll is neutrally stable.

    Vectorized over alpha. d0p, d1p are the effective friction
    coefficients (curvature term included), not the raw ones.
    """
    alpha = np.asarray(alpha, float)
    kj = (j * np.pi) ** 2
    lam = alpha**2 + kj
    return lam * (lam**2 + d1p * alpha**2 + d0p * kj) / alpha**2


def marginal_rayleigh(p: NondimParams, k: int, j: int = 1) -> float:
    """Closed-form marginal Rayleigh number of the integer mode (k, j)."""
    if k < 1 or j < 1:
        raise ValueError("roll modes require k >= 1 and j >= 1")
    return float(marginal_curve(k / p.r0, j, p.delta0p, p.delta1p))


def continuous_minimum(p: NondimParams, j: int = 1) -> tuple[float, float]:
    """(alpha_star, R_star) minimizing the marginal curve over real alpha.

    The curve is unimodal in alpha**2 (its derivative times alpha**4 is
    a strictly increasing cubic), so a bounded scalar minimization on a
    bracket spanning the sign change of that cubic is reliable.
    """
    kj = (j * np.pi) ** 2

    def dcubic(u):
        return 2.0 * u**3 + (3.0 * kj + p.delta1p) * u**2 - kj**3 - p.delta0p * kj**2

    hi = max(kj, 1.0)
    while dcubic(hi) <= 0.0:
        hi *= 2.0
    lo = min(kj / 8.0, hi / 16.0)
    while dcubic(lo) >= 0.0:
        lo /= 2.0
    u_star = brentq(dcubic, lo, hi, xtol=1e-14, rtol=8.9e-16)
    res = minimize_scalar(
        lambda a: float(marginal_curve(a, j, p.delta0p, p.delta1p)),
        bounds=(0.8 * np.sqrt(u_star), 1.25 * np.sqrt(u_star)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(res.fun)


# ---------------------------------------------------------------------------
# generator blocks

def block_generator(p: NondimParams, k: int, j: int, rayleigh: float | None = None) -> np.ndarray:
    """2x2 generator of the (k, j) stream/temperature pair, k >= 1.

    State ordering (psi_kj, theta_kj). Independent of the rotation
    number by construction.
    """
    R = p.rayleigh if rayleigh is None else rayleigh
    a = k / p.r0
    kj = (j * np.pi) ** 2
    lam = a * a + kj
    Q = lam * lam + p.delta1p * a * a + p.delta0p * kj
    return np.array(
        [[-p.prandtl * Q / lam, 1j * p.prandtl * R * a / lam],
         [-1j * a, -lam]],
        complex,
    )


def block_rates(p: NondimParams, k: int, j: int, rayleigh: float | None = None) -> np.ndarray:
    """Growth rates of one (k, j) roll block, descending.

    For R > 0 the block is self-adjoint under diag(lam, Pr*R), so the
    rates come from a Hermitian eigenproblem; otherwise fall back to a
    general eigensolver (rates may then form a conjugate pair, of which
    the real part is returned).
    """
    R = p.rayleigh if rayleigh is None else rayleigh
    G = block_generator(p, k, j, R)
    w = p.prandtl * R
    if w > 0.0:
        a = k / p.r0
        lam = a * a + (j * np.pi) ** 2
        d = np.sqrt([lam, w])
        H = (d[:, None] / d[None, :]) * G
        vals = np.linalg.eigvalsh(H)
    else:
        vals = np.linalg.eigvals(G).real
    return np.sort(vals)[::-1]


def mean_rate(p: NondimParams, j: int) -> float:
    """Decay rate of the zonal-mean u1 cosine mode j (j = 0 allowed)."""
    return -p.prandtl * ((j * np.pi) ** 2 + p.delta0p)


def temp0_rate(j: int) -> float:
    """Decay rate of the k = 0 temperature sine mode j."""
    return -((j * np.pi) ** 2)


def assemble_linear_block(p: NondimParams, R: float, k: int, nz: int = 32):
    """Dense generator matrix of zonal wavenumber k on nz vertical modes.

    k >= 1: complex matrix over [psi_1..psi_nz, theta_1..theta_nz];
    returns (G, Wdiag) where Wdiag makes G self-adjoint, i.e. W @ G is
    Hermitian. k = 0: real diagonal matrix over
    [mean_0..mean_nz, theta_1..theta_nz] with unit weights.
    """
    if k == 0:
        mean_d = np.array([mean_rate(p, j) for j in range(nz + 1)])
        temp_d = np.array([temp0_rate(j) for j in range(1, nz + 1)])
        G = np.diag(np.concatenate([mean_d, temp_d]))
        return G, np.ones(2 * nz + 1)
    a = k / p.r0
    jj = np.pi * np.arange(1, nz + 1)
    lam = a * a + jj**2
    Q = lam**2 + p.delta1p * a * a + p.delta0p * jj**2
    G = np.zeros((2 * nz, 2 * nz), complex)
    G[np.arange(nz), np.arange(nz)] = -p.prandtl * Q / lam
    G[np.arange(nz), nz + np.arange(nz)] = 1j * p.prandtl * R * a / lam
    G[nz + np.arange(nz), np.arange(nz)] = -1j * a
    G[nz + np.arange(nz), nz + np.arange(nz)] = -lam
    w = p.prandtl * R
    W = np.concatenate([lam, np.full(nz, w)])
    return G, W


def _block_leading(p: NondimParams, R: float, k: int, nz: int) -> float:
    """Largest real growth rate of the assembled k-block at R."""
    G, W = assemble_linear_block(p, R, k, nz)
    if k == 0:
        return float(np.max(np.diag(G).real))
    if np.all(W > 0):
        d = np.sqrt(W)
        H = (d[:, None] / d[None, :]) * G
        return float(np.max(np.linalg.eigvalsh(H)))
    return float(np.max(np.linalg.eigvals(G).real))


def eigen_spectrum(p: NondimParams, rayleigh: float | None = None, nev: int | None = 12,
                   kband: int = 8, jband: int = 8) -> list[EigenPair]:
    """Leading growth rates over all linear modes, descending.

    Roll rates carry multiplicity 2 (the +-k pair); nev limits the
    returned list, None returns every scanned mode. All rates are real
    here; the forced problem's complex spectra live in the
    continuation module.
    """
    R = p.rayleigh if rayleigh is None else rayleigh
    pairs = []
    for j in range(jband + 1):
        pairs.append(EigenPair(complex(mean_rate(p, j)), 0, j, "mean", 1, R))
    for j in range(1, jband + 1):
        pairs.append(EigenPair(complex(temp0_rate(j)), 0, j, "temp", 1, R))
    for k in range(1, kband + 1):
        for j in range(1, jband + 1):
            hi, lo = block_rates(p, k, j, R)
            pairs.append(EigenPair(complex(hi), k, j, "roll", 2, R))
            pairs.append(EigenPair(complex(lo), k, j, "roll", 2, R))
    pairs.sort(key=lambda e: (-e.rate, e.k, e.j))
    return pairs if nev is None else pairs[:nev]


def crossing_rayleigh(p: NondimParams, k: int, nz: int = 32, rtol: float = 1e-12) -> float:
    """Rayleigh number where wavenumber k first loses stability.

    Pure eigensolver route: brackets the sign change of the leading
    eigenvalue of the dense assembled block and refines the root. Kept
    free of the closed-form curve so the two can cross-check.
    """
    if k < 1:
        raise ValueError("instability requires k >= 1")

    def leading(R):
        return _block_leading(p, R, k, nz)

    lo, hi = 1.0, 64.0
    while leading(lo) >= 0.0:
        lo /= 8.0
        if lo < 1e-12:
            raise RuntimeError("unstable at vanishing Rayleigh number")
    while leading(hi) <= 0.0:
        hi *= 4.0
        if hi > 1e18:
            raise RuntimeError("no instability found below R = 1e18")
    return float(brentq(leading, lo, hi, rtol=rtol, xtol=1e-300, maxiter=200))


def critical_rayleigh(p: NondimParams, kmax: int | None = None, jband: int = 3,
                      method: str = "closed", nz: int = 32,
                      tie_rtol: float = 1e-12, kcap: int = 10000) -> CriticalPoint0:
    """Minimum marginal Rayleigh number over the integer mode lattice.

    With kmax given, scans k = 1..kmax and raises when the minimum sits
    on the window edge; with kmax None the scan extends itself past the
    minimum (the marginal curve is unimodal in alpha). method "closed"
    uses the marginal curve; "eigen" root-finds on dense assembled
    blocks with nz vertical modes (j resolution comes from nz then).
    degenerate flags a rival wavenumber within tie_rtol, where the
    marginal subspace doubles to multiplicity 4; downstream reductions
    use the smaller wavenumber.
    """
    if method == "closed":
        rfun = lambda k: min(marginal_rayleigh(p, k, j) for j in range(1, jband + 1))
    elif method == "eigen":
        rfun = lambda k: crossing_rayleigh(p, k, nz)
    else:
        raise ValueError(f"unknown method {method!r}")

    table: dict[int, float] = {}
    best_k, best_r = 0, np.inf
    k = 0
    hard_cap = kmax if kmax is not None else kcap
    while True:
        k += 1
        if k > hard_cap:
            if kmax is not None:
                break
            raise RuntimeError(f"no marginal minimum below k = {kcap}")
        r = rfun(k)
        table[k] = r
        if r < best_r:
            best_k, best_r = k, r
        if kmax is None and k >= best_k + 2 and r > best_r:
            break
    if kmax is not None and best_k == kmax:
        raise RuntimeError(
            f"marginal minimum sits at the scan edge k = {kmax}; enlarge kmax")

    rival_k, rival_r = 0, np.inf
    for kk, r in table.items():
        if kk != best_k and r < rival_r:
            rival_k, rival_r = kk, r
    gap = (rival_r - best_r) / best_r if np.isfinite(rival_r) else np.inf
    degenerate = bool(gap < tie_rtol)
    jc = 1
    if method == "closed":
        jc = min(range(1, jband + 1), key=lambda j: marginal_rayleigh(p, best_k, j))
    return CriticalPoint0(
        Rc=float(best_r), kc=best_k, multiplicity=4 if degenerate else 2,
        degenerate=degenerate, jc=jc, alpha=best_k / p.r0,
        rival_k=rival_k, rival_gap=float(gap),
    )


@dataclass(frozen=True)
class PESReport:
    """Exchange-of-stability diagnostics at the instability onset."""

    crossing: float             # bisected zero of the leading rate
    n_marginal: int             # eigenvalues with |beta| < marginal_tol there
    third_rate: float           # largest rate outside the marginal set
    slope: float                # d(leading rate)/dR at the crossing
    marginal_tol: float
    iterations: int


def verify_pes(p: NondimParams, Rlo: float | None = None, Rhi: float | None = None,
               kband: int = 8, jband: int = 8, rel_tol: float = 1e-10,
               marginal_tol: float = 1e-8) -> PESReport:
    """Bisect the leading growth rate's zero crossing and inspect it.

    Confirms how many eigenvalues sit on the imaginary axis at the
    crossing (counting the +-k multiplicity) and reports the gap to the
    next one plus the transversality slope.
    """

    def leading(R):
        return eigen_spectrum(p, R, nev=1, kband=kband, jband=jband)[0].rate

    if Rlo is None:
        Rlo = 64.0
        while leading(Rlo) >= 0.0:
            Rlo /= 8.0
            if Rlo < 1e-12:
                raise RuntimeError("unstable at vanishing Rayleigh number")
    if Rhi is None:
        Rhi = max(4.0 * Rlo, 256.0)
        while leading(Rhi) <= 0.0:
            Rhi *= 4.0
            if Rhi > 1e18:
                raise RuntimeError("no crossing found below R = 1e18")
    flo, fhi = leading(Rlo), leading(Rhi)
    if flo >= 0 or fhi <= 0:
        raise ValueError(f"window [{Rlo}, {Rhi}] does not bracket the crossing")
    it = 0
    while (Rhi - Rlo) > rel_tol * Rhi:
        it += 1
        mid = 0.5 * (Rlo + Rhi)
        if leading(mid) < 0.0:
            Rlo = mid
        else:
            Rhi = mid
        if it > 200:
            break
    crossing = 0.5 * (Rlo + Rhi)

    spec = eigen_spectrum(p, crossing, nev=None, kband=kband, jband=jband)
    rates = []
    for e in spec:
        rates.extend([e.rate] * e.multiplicity)
    rates.sort(reverse=True)
    n_marg = sum(1 for r in rates if abs(r) < marginal_tol)
    third = max((r for r in rates if abs(r) >= marginal_tol), default=-np.inf)
    dR = 1e-5 * crossing
    slope = (leading(crossing + dR) - leading(crossing - dR)) / (2 * dR)
    return PESReport(float(crossing), n_marg, float(third), float(slope),
                     marginal_tol, it)


# ---------------------------------------------------------------------------
# marginal eigenvector

def marginal_mode(p: NondimParams, grid: Grid, k: int | None = None,
                  j: int | None = None, rayleigh: float | None = None) -> SpectralState:
    """Normalized neutral eigenvector at the critical point.

    Phase convention: the temperature coefficient is real and positive,
    which puts the stream coefficient on the positive imaginary axis.
    The norm is unity in the weighted inner product with w = Pr * R at
    the critical Rayleigh number. Quarter-wavelength translation
    (field.shift_zonal by pi*r0/(2k)) yields the orthogonal partner
    spanning the rest of the marginal plane.
    """
    if k is None or j is None:
        cp = critical_rayleigh(p)
        k = cp.kc if k is None else k
        j = cp.jc if j is None else j
        Rc = cp.Rc if rayleigh is None else rayleigh
    else:
        Rc = marginal_rayleigh(p, k, j) if rayleigh is None else rayleigh
    if k > grid.kmax - 1 or j > grid.nz:
        raise ValueError(f"grid too small for marginal mode k={k}, j={j}")
    a = k / p.r0
    lam = a * a + (j * np.pi) ** 2
    w = p.prandtl * Rc
    c = 1.0 / np.sqrt(2.0 * np.pi * p.r0 * (lam + w * (a / lam) ** 2))
    s = SpectralState.zero(grid)
    s.psi[k, j - 1] = 1j * c
    s.theta[k, j - 1] = a * c / lam
    return s


def critical_eigenpair(p: NondimParams, grid: Grid) -> EigenPair:
    """Critical EigenPair with the unit-norm eigenvector attached."""
    cp = critical_rayleigh(p)
    state = marginal_mode(p, grid, cp.kc, cp.jc, cp.Rc)
    return EigenPair(0j, cp.kc, cp.jc, "roll", cp.multiplicity, cp.Rc, state)
