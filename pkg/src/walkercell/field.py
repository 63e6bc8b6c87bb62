"""Spectral representation of divergence-free velocity + temperature fields.

Domain: periodic channel (0, 2*pi*r0) x (r0, r0+1), coordinates (x1, x2)
with depth coordinate s = x2 - r0 in (0, 1).

Basis
-----
Zonal direction: Fourier modes exp(i*k*x1/r0), stored as a half spectrum
k = 0..nx//2 with the convention  f = c_0 + 2*Re sum_{k>=1} c_k E_k.
Vertical direction: free-slip modes,
  stream function / temperature: sin(j*pi*s), j = 1..nz,
  zonal-mean flow u1:            cos(j*pi*s), j = 0..nz.
Velocity derives from the stream function, u1 = d(psi)/dx2 and
u2 = -d(psi)/dx1, so every state is divergence-free by construction and
satisfies the free-slip wall conditions u2 = 0, d(u1)/dx2 = 0 exactly.

Quadratic products of band-limited fields are again finite trig
polynomials, so the midpoint vertical grid of nv = 2*nz + 2 points
extracts their coefficients exactly (discrete sine/cosine orthogonality
holds up to the alias frequency 2*nv, above the 3*nz needed). Projections
that cross the sine/cosine families use the closed-form Gram matrices
below; nothing in the tendency pipeline relies on approximate quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.fft import next_fast_len


class GridMismatchError(ValueError):
    """Binary operation on states with different grids."""


class RepresentationError(ValueError):
    """Physical data is not representable in the divergence-free basis."""


class Grid:
    """Spectral resolution and cached transform operators.

    Parameters
    ----------
    r0 : channel radius over layer height
    nx : zonal collocation points (even, >= 4); wavenumbers |k| <= nx/2
    nz : vertical sine/cosine modes (>= 2)
    """

    def __init__(self, r0: float, nx: int, nz: int):
        if nx < 4 or nx % 2:
            raise ValueError(f"nx must be even and >= 4, got {nx}")
        if nz < 2:
            raise ValueError(f"nz must be >= 2, got {nz}")
        if r0 <= 0:
            raise ValueError(f"r0 must be positive, got {r0}")
        self.r0 = float(r0)
        self.nx = int(nx)
        self.nz = int(nz)
        self.kmax = nx // 2
        # zonal wavenumbers alpha_k = k / r0; the Nyquist column is carried
        # but held at zero so the 2*Re half-spectrum convention stays exact
        self.kk = np.arange(self.kmax + 1)
        self.alpha = self.kk / self.r0
        self.ksin = np.pi * np.arange(1, nz + 1)       # sine modes j*pi
        self.kcos = np.pi * np.arange(0, nz + 1)       # cosine modes j*pi
        self.lam = self.alpha[:, None] ** 2 + self.ksin[None, :] ** 2
        # physical grids
        self.nv = 2 * nz + 2
        self.svert = (np.arange(self.nv) + 0.5) / self.nv
        self.x1 = np.arange(nx) * (2.0 * np.pi * self.r0 / nx)
        self.x2 = self.r0 + self.svert
        # zonal padding for alias-free quadratic products
        self.npad = next_fast_len(3 * self.kmax + 1)
        # vertical basis values on the midpoint grid, modes up to 2*nz
        m2 = 2 * nz
        self._sinv = np.sin(np.pi * np.outer(self.svert, np.arange(1, m2 + 1)))
        self._cosv = np.cos(np.pi * np.outer(self.svert, np.arange(0, m2 + 1)))
        self._sin_ext = (2.0 / self.nv) * self._sinv.T
        self._cos_ext = (2.0 / self.nv) * self._cosv.T
        self._cos_ext[0] *= 0.5
        self._c2s = _cos_to_sin_gram(nz, m2)
        self._s2c = _sin_to_cos_gram(nz, m2)

    @property
    def shape_sin(self) -> tuple[int, int]:
        return (self.kmax + 1, self.nz)

    @property
    def shape_cos(self) -> tuple[int, int]:
        return (self.kmax + 1, self.nz + 1)

    def compatible(self, other: "Grid") -> bool:
        return (self.r0, self.nx, self.nz) == (other.r0, other.nx, other.nz)

    def __repr__(self):
        return f"Grid(r0={self.r0}, nx={self.nx}, nz={self.nz})"


def _cos_to_sin_gram(nz: int, m2: int) -> np.ndarray:
    """Sine-projection coefficients of cosine modes.

    c2s[n-1, m] is the coefficient of sin(n*pi*s) in the projection of
    cos(m*pi*s): 2*integral cos(m pi s) sin(n pi s) ds = 4n/(pi(n^2-m^2))
    when n+m is odd, else 0.
    """
    n = np.arange(1, nz + 1)[:, None].astype(float)
    m = np.arange(0, m2 + 1)[None, :].astype(float)
    odd = ((n + m) % 2) == 1
    out = np.zeros((nz, m2 + 1))
    denom = n**2 - m**2
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (4.0 / np.pi) * (n / denom)
    out[odd] = vals[odd]
    return out


def _sin_to_cos_gram(nz: int, m2: int) -> np.ndarray:
    """Cosine-projection coefficients of sine modes.

    s2c[n, m-1] projects sin(m*pi*s) onto cos(n*pi*s); for n = 0 the
    coefficient is integral sin(m pi s) ds = 2/(m pi) for odd m.
    """
    n = np.arange(0, nz + 1)[:, None].astype(float)
    m = np.arange(1, m2 + 1)[None, :].astype(float)
    odd = ((n + m) % 2) == 1
    out = np.zeros((nz + 1, m2))
    denom = m**2 - n**2
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (4.0 / np.pi) * (m / denom)
    out[odd] = vals[odd]
    out[0, :] = 0.0
    modd = (np.arange(1, m2 + 1) % 2) == 1
    out[0, modd] = 2.0 / (np.pi * np.arange(1, m2 + 1)[modd])
    return out


class SpectralState:
    """Coefficients of one (velocity, temperature) state.

    psi   complex (kmax+1, nz): stream-function sine modes, k >= 1
          (column k = 0 is identically zero; the zonal mean lives in `mean`)
    mean  float (nz+1,): zonal-mean u1 cosine modes, j = 0..nz
    theta complex (kmax+1, nz): temperature sine modes (row k = 0 real)
    """

    __slots__ = ("grid", "psi", "mean", "theta", "time")

    def __init__(self, grid: Grid, psi=None, mean=None, theta=None, time: float = 0.0):
        self.grid = grid
        # copies guard the caller's arrays from the normalization below
        self.psi = np.zeros(grid.shape_sin, complex) if psi is None else np.array(psi, complex)
        self.mean = np.zeros(grid.nz + 1) if mean is None else np.array(mean, float)
        self.theta = np.zeros(grid.shape_sin, complex) if theta is None else np.array(theta, complex)
        self.time = float(time)
        if self.psi.shape != grid.shape_sin or self.theta.shape != grid.shape_sin:
            raise ValueError("psi/theta shape must be (kmax+1, nz)")
        if self.mean.shape != (grid.nz + 1,):
            raise ValueError("mean shape must be (nz+1,)")
        self.psi[0, :] = 0.0
        self.psi[-1, :] = 0.0
        self.theta[-1, :] = 0.0
        self.theta[0, :] = self.theta[0, :].real

    @classmethod
    def zero(cls, grid: Grid) -> "SpectralState":
        return cls(grid)

    def copy(self) -> "SpectralState":
        return SpectralState(self.grid, self.psi.copy(), self.mean.copy(), self.theta.copy(), self.time)

    def __add__(self, other: "SpectralState") -> "SpectralState":
        _check_grids(self, other)
        return SpectralState(self.grid, self.psi + other.psi, self.mean + other.mean,
                             self.theta + other.theta, self.time)

    def __sub__(self, other: "SpectralState") -> "SpectralState":
        _check_grids(self, other)
        return SpectralState(self.grid, self.psi - other.psi, self.mean - other.mean,
                             self.theta - other.theta, self.time)

    def __mul__(self, c: float) -> "SpectralState":
        return SpectralState(self.grid, self.psi * c, self.mean * c, self.theta * c, self.time)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralState":
        return self * (-1.0)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.psi)) and np.all(np.isfinite(self.mean))
                    and np.all(np.isfinite(self.theta)))


def _check_grids(a: SpectralState, b: SpectralState):
    if not a.grid.compatible(b.grid):
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


@dataclass
class PhysicalFields:
    """Collocation values on the nx x nv grid (zonal index first)."""

    u1: np.ndarray
    u2: np.ndarray
    T: np.ndarray
    psi: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    time: float = 0.0
    meta: dict = dc_field(default_factory=dict)


# ---------------------------------------------------------------------------
# transforms

def zonal_synthesis(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Half-spectrum coefficients (kbands, m) -> real values (n, m)."""
    nb = coeffs.shape[0]
    spec = np.zeros((n // 2 + 1,) + coeffs.shape[1:], complex)
    spec[:nb] = coeffs
    return np.fft.irfft(spec * n, n=n, axis=0)


def zonal_analysis(values: np.ndarray, kbands: int) -> np.ndarray:
    """Real values (n, m) -> half-spectrum coefficients (kbands, m)."""
    n = values.shape[0]
    return np.fft.rfft(values, axis=0)[:kbands] / n


def velocity_coefficients(s: SpectralState):
    """Cosine modes of u1 (incl. mean) and sine modes of u2."""
    g = s.grid
    u1c = np.zeros(g.shape_cos, complex)
    u1c[:, 1:] = g.ksin[None, :] * s.psi
    u1c[0, :] = s.mean
    u2s = (-1j) * g.alpha[:, None] * s.psi
    return u1c, u2s


def to_physical(s: SpectralState) -> PhysicalFields:
    """Evaluate the state on the natural nx x nv collocation grid."""
    g = s.grid
    u1c, u2s = velocity_coefficients(s)
    sinb = g._sinv[:, : g.nz]
    cosb = g._cosv[:, : g.nz + 1]
    u1 = zonal_synthesis(u1c @ cosb.T, g.nx)
    u2 = zonal_synthesis(u2s @ sinb.T, g.nx)
    T = zonal_synthesis(s.theta @ sinb.T, g.nx)
    # total stream function with psi = 0 on the bottom wall
    psi = zonal_synthesis(s.psi @ sinb.T, g.nx)
    mean_stream = s.mean[0] * g.svert + (s.mean[1:] / g.ksin) @ sinb.T
    psi = psi + mean_stream[None, :]
    return PhysicalFields(u1=u1, u2=u2, T=T, psi=psi, x1=g.x1.copy(), x2=g.x2.copy(), time=s.time)


def to_spectral(f: PhysicalFields, grid: Grid, div_tol: float = 1e-8,
                rep_tol: float = 1e-8) -> SpectralState:
    """Project collocation data back onto the divergence-free basis.

    Raises RepresentationError when the data carries divergence or
    content outside the basis (wall-condition violations, unresolved
    vertical structure) above the tolerances, measured relative to the
    field magnitude.
    """
    g = grid
    for name in ("u1", "u2", "T"):
        if getattr(f, name).shape != (g.nx, g.nv):
            raise RepresentationError(f"{name} must have shape ({g.nx}, {g.nv})")
    scale = max(float(np.max(np.abs(f.u1))), float(np.max(np.abs(f.u2))),
                float(np.max(np.abs(f.T))), 1e-300)

    u1k = zonal_analysis(f.u1, g.kmax + 1)
    u2k = zonal_analysis(f.u2, g.kmax + 1)
    tk = zonal_analysis(f.T, g.kmax + 1)

    u1c_full = u1k @ g._cos_ext.T          # modes 0..2nz
    u2s_full = u2k @ g._sin_ext.T          # modes 1..2nz
    ts_full = tk @ g._sin_ext.T

    # representability: reconstruct from the in-band modes and compare
    rec_u1 = u1c_full[:, : g.nz + 1] @ g._cosv[:, : g.nz + 1].T
    rec_u2 = u2s_full[:, : g.nz] @ g._sinv[:, : g.nz].T
    rec_t = ts_full[:, : g.nz] @ g._sinv[:, : g.nz].T
    rep_err = max(float(np.max(np.abs(rec_u1 - u1k))), float(np.max(np.abs(rec_u2 - u2k))),
                  float(np.max(np.abs(rec_t - tk))))
    if rep_err > rep_tol * scale:
        raise RepresentationError(
            f"data not representable in the free-slip basis: residual {rep_err:.3e} "
            f"(relative {rep_err / scale:.3e}) exceeds tolerance"
        )

    psi = np.zeros(g.shape_sin, complex)
    psi[1:, :] = u1c_full[1:, 1 : g.nz + 1] / g.ksin[None, :]
    mean = u1c_full[0, : g.nz + 1].real
    div_err = float(np.max(np.abs(u2s_full[:, : g.nz] - (-1j) * g.alpha[:, None] * psi)))
    div_err = max(div_err, float(np.max(np.abs(u1c_full[0].imag))))
    if div_err > div_tol * scale:
        raise RepresentationError(
            f"velocity data is not divergence-free: residual {div_err:.3e} "
            f"(relative {div_err / scale:.3e}) exceeds tolerance"
        )
    return SpectralState(grid, psi, mean, ts_full[:, : g.nz], time=f.time)


# ---------------------------------------------------------------------------
# inner products and diagnostics

def inner(a: SpectralState, b: SpectralState, w: float = 1.0) -> float:
    """L2 inner product of (u, T) pairs with weight w on the temperature.

    The weight w = Pr*R (see params.buoyancy_weight) makes the linearized
    operator self-adjoint; w = 1 gives the plain energy pairing.
    """
    _check_grids(a, b)
    g = a.grid
    roll = float(np.sum(g.lam[1:] * (a.psi[1:] * b.psi[1:].conj()).real))
    meanp = a.mean[0] * b.mean[0] + 0.5 * float(np.dot(a.mean[1:], b.mean[1:]))
    temp = 0.5 * float(np.dot(a.theta[0].real, b.theta[0].real))
    temp += float(np.sum((a.theta[1:] * b.theta[1:].conj()).real))
    return 2.0 * np.pi * g.r0 * (roll + meanp + w * temp)


def norm(a: SpectralState, w: float = 1.0) -> float:
    return float(np.sqrt(max(inner(a, a, w), 0.0)))


def vertical_integral_u1(s: SpectralState) -> float:
    """Depth integral of u1, independent of x1.

    Every cosine mode j >= 1 and every roll contribution integrates to
    zero over the depth, so the integral is exactly the j = 0 mean
    coefficient. Membership in the zero-net-transport class E is
    |vertical_integral_u1| < 1e-8.
    """
    return float(s.mean[0])


IN_E_TOL = 1e-8


def shift_zonal(s: SpectralState, delta: float) -> SpectralState:
    """Translate the state by +delta in x1."""
    phase = np.exp(-1j * s.grid.alpha * delta)[:, None]
    return SpectralState(s.grid, s.psi * phase, s.mean.copy(), s.theta * phase, s.time)


def quadrature_inner(fa: PhysicalFields, fb: PhysicalFields, grid: Grid, w: float = 1.0) -> float:
    """Physical-space version of `inner` on the collocation grid.

    Exact for band-limited states: products of basis functions have only
    cosine vertical content, which the midpoint rule integrates exactly.
    """
    g = grid
    cell = (2.0 * np.pi * g.r0 / g.nx) * (1.0 / g.nv)
    tot = np.sum(fa.u1 * fb.u1 + fa.u2 * fb.u2 + w * (fa.T * fb.T))
    return float(cell * tot)


# ---------------------------------------------------------------------------
# pointwise evaluation (topology, rendering)

def stream_values(s: SpectralState, x1, x2, dx1: int = 0, ds: int = 0) -> np.ndarray:
    """Evaluate d^(dx1+ds) psi / dx1^dx1 dx2^ds at arbitrary points.

    x1, x2 broadcast together; x2 is the absolute coordinate r0 + s.
    """
    g = s.grid
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    sv = x2 - g.r0
    out_shape = np.broadcast(x1, sv).shape
    x1f = np.broadcast_to(x1, out_shape).ravel()
    svf = np.broadcast_to(sv, out_shape).ravel()

    # roll part
    phase = np.exp(1j * np.outer(x1f, g.alpha))            # (npts, k)
    zf = (1j * g.alpha[None, :]) ** dx1 * phase if dx1 else phase
    arg = np.outer(svf, g.ksin)
    if ds % 4 == 0:
        vert = np.sin(arg)
    elif ds % 4 == 1:
        vert = np.cos(arg)
    elif ds % 4 == 2:
        vert = -np.sin(arg)
    else:
        vert = -np.cos(arg)
    vert = vert * g.ksin[None, :] ** ds
    vals = 2.0 * np.einsum("pk,kj,pj->p", zf, s.psi, vert).real

    # zonal-mean part (depends on s only)
    if dx1 == 0:
        if ds == 0:
            mv = s.mean[0] * svf + np.sin(np.outer(svf, g.ksin)) @ (s.mean[1:] / g.ksin)
        else:
            d = ds - 1
            argm = np.outer(svf, g.kcos[1:])
            if d % 4 == 0:
                vm = np.cos(argm)
            elif d % 4 == 1:
                vm = -np.sin(argm)
            elif d % 4 == 2:
                vm = -np.cos(argm)
            else:
                vm = np.sin(argm)
            mv = vm @ (s.mean[1:] * g.kcos[1:] ** d)
            if ds == 1:
                mv = mv + s.mean[0]
        vals = vals + mv
    return vals.reshape(out_shape)


def velocity_values(s: SpectralState, x1, x2):
    """(u1, u2) at arbitrary points."""
    return stream_values(s, x1, x2, 0, 1), -stream_values(s, x1, x2, 1, 0)


def temperature_values(s: SpectralState, x1, x2) -> np.ndarray:
    g = s.grid
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    sv = x2 - g.r0
    out_shape = np.broadcast(x1, sv).shape
    x1f = np.broadcast_to(x1, out_shape).ravel()
    svf = np.broadcast_to(sv, out_shape).ravel()
    phase = np.exp(1j * np.outer(x1f, g.alpha))
    vert = np.sin(np.outer(svf, g.ksin))
    # half-spectrum convention counts k = 0 once, k >= 1 with 2*Re
    vals = 2.0 * np.einsum("pk,kj,pj->p", phase, s.theta, vert).real
    vals -= vert @ s.theta[0].real
    return vals.reshape(out_shape)


# ---------------------------------------------------------------------------
# serialization

def save_snapshot_csv(f: PhysicalFields, path: str) -> None:
    """Write collocation values as CSV with columns x1, x2, u1, u2, T, psi."""
    nx, nv = f.u1.shape
    with open(path, "w") as fh:
        fh.write("x1,x2,u1,u2,T,psi\n")
        for i in range(nx):
            for j in range(nv):
                fh.write(f"{f.x1[i]!r},{f.x2[j]!r},{f.u1[i, j]!r},{f.u2[i, j]!r},"
                         f"{f.T[i, j]!r},{f.psi[i, j]!r}\n")


def state_to_dict(s: SpectralState) -> dict:
    """JSON-serializable coefficient table keyed by 'k,j'."""
    g = s.grid
    psi = {}
    theta = {}
    for k in range(g.kmax + 1):
        for j in range(g.nz):
            if s.psi[k, j] != 0:
                psi[f"{k},{j + 1}"] = [s.psi[k, j].real, s.psi[k, j].imag]
            if s.theta[k, j] != 0:
                theta[f"{k},{j + 1}"] = [s.theta[k, j].real, s.theta[k, j].imag]
    return {
        "grid": {"r0": g.r0, "nx": g.nx, "nz": g.nz},
        "time": s.time,
        "psi": psi,
        "mean": [float(v) for v in s.mean],
        "theta": theta,
    }


def save_coeffs_json(s: SpectralState, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(s), fh, sort_keys=True, indent=1)
        fh.write("\n")


def state_from_dict(d: dict) -> SpectralState:
    g = Grid(d["grid"]["r0"], d["grid"]["nx"], d["grid"]["nz"])
    s = SpectralState.zero(g)
    s.time = float(d.get("time", 0.0))
    for key, (re, im) in d.get("psi", {}).items():
        k, j = (int(v) for v in key.split(","))
        s.psi[k, j - 1] = re + 1j * im
    for key, (re, im) in d.get("theta", {}).items():
        k, j = (int(v) for v in key.split(","))
        s.theta[k, j - 1] = re + 1j * im
    s.mean[:] = d.get("mean", s.mean)
    return SpectralState(g, s.psi, s.mean, s.theta, s.time)


def load_coeffs_json(path: str) -> SpectralState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
