"""Topological classification of channel flow patterns.

A two-dimensional incompressible field is read off its stream function:
interior stagnation points are classified by the Hessian determinant
(positive means center, negative means saddle), wall stagnation points
are zonal zeros of u1 on either boundary. The census of these points,
together with the vertically integrated zonal flow, separates the
archetypes: closed convection rolls (zero mean flow, an even ring of
cells), eastbound or westbound cross-channel flow (nonzero mean flow
with a level of unidirectional through-flow), and everything else.

Structural stability is checked with computable criteria: regularity
(no degenerate stagnation points), absence of streamline connections
between the two walls (which requires equal wall stream levels, so a
nonzero mean flow rules them out immediately), and self-connection of
interior saddle separatrices. In the zero-total-momentum subspace the
stability criterion reduces to regularity plus interior saddle
self-connection; in the full space the wall-to-wall connections of the
pure roll pattern break structural stability.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .field import IN_E_TOL, SpectralState, stream_values, vertical_integral_u1


@dataclass
class CriticalPointInfo:
    x1: float
    x2: float                    # absolute wall-normal coordinate, r0 + s
    kind: str                    # "center" | "saddle" | "degenerate"
    on_boundary: bool
    stream: float


@dataclass
class PatternReport:
    kind: str                    # "Rolls" | "CrossChannelEast" | "CrossChannelWest" | "Degenerate"
    cell_count: int
    mean_flow: float
    in_E: bool
    critical_points: list[CriticalPointInfo]
    structurally_stable_in_htilde: bool


@dataclass
class StabilityReport:
    regular: bool
    wall_to_wall_connections: bool
    interior_saddles_self_connected: bool
    in_htilde: bool
    stable_in_h: bool
    stable_in_htilde: bool
    notes: list[str] = dc_field(default_factory=list)


def _stream(s: SpectralState, x1, x2, dx1=0, ds=0):
    return stream_values(s, np.asarray(x1, float), np.asarray(x2, float),
                         dx1=dx1, ds=ds)


def _field_scale(s: SpectralState) -> float:
    g = s.grid
    x = np.linspace(0.0, 2 * np.pi * g.r0, 4 * g.nx, endpoint=False)
    z = g.r0 + np.linspace(0.05, 0.95, 19)
    X, Z = np.meshgrid(x, z, indexing="ij")
    return float(np.max(np.abs(_stream(s, X, Z))))


def find_critical_points(s: SpectralState, nseed_x: int | None = None,
                         nseed_s: int | None = None,
                         tol: float = 1e-12) -> list[CriticalPointInfo]:
    """All stagnation points: Newton on the stream gradient from grid seeds.

    Interior points are classified by the Hessian determinant of the
    stream function; degenerate Hessians are flagged, not fatal. Wall
    stagnation points are bracketed zeros of u1 along each boundary.
    """
    g = s.grid
    period = 2 * np.pi * g.r0
    scale = _field_scale(s)
    if scale == 0.0:
        return []
    nsx = nseed_x if nseed_x is not None else max(4 * g.nx, 32)
    nss = nseed_s if nseed_s is not None else max(4 * g.nz, 16)

    xs = np.linspace(0.0, period, nsx, endpoint=False)
    zs = g.r0 + np.linspace(0.5 / nss, 1.0 - 0.5 / nss, nss)
    X, Z = [a.ravel() for a in np.meshgrid(xs, zs, indexing="ij")]

    for _ in range(60):
        gx = _stream(s, X, Z, dx1=1)
        gz = _stream(s, X, Z, ds=1)
        hxx = _stream(s, X, Z, dx1=2)
        hxz = _stream(s, X, Z, dx1=1, ds=1)
        hzz = _stream(s, X, Z, ds=2)
        det = hxx * hzz - hxz * hxz
        bad = np.abs(det) < 1e-14 * scale * scale
        det_safe = np.where(bad, 1.0, det)
        dx = (gx * hzz - gz * hxz) / det_safe
        dz = (gz * hxx - gx * hxz) / det_safe
        dx = np.where(bad, 0.0, dx)
        dz = np.where(bad, 0.0, dz)
        lim = 0.25
        dx = np.clip(dx, -lim * period, lim * period)
        dz = np.clip(dz, -lim, lim)
        X = X - dx
        Z = Z - dz
        if max(np.max(np.abs(dx)), np.max(np.abs(dz))) < 1e-15:
            break

    gx = _stream(s, X, Z, dx1=1)
    gz = _stream(s, X, Z, ds=1)
    grad = np.hypot(gx, gz)
    ok = (grad < tol * max(scale, 1e-30)) & (Z > g.r0 + 1e-6) & (Z < g.r0 + 1 - 1e-6)
    X, Z = X[ok] % period, Z[ok]

    points: list[CriticalPointInfo] = []
    taken: list[tuple[float, float]] = []
    order = np.lexsort((Z, X))
    for i in order:
        x, z = float(X[i]), float(Z[i])
        dup = False
        for (xa, za) in taken:
            ddx = abs(x - xa)
            ddx = min(ddx, period - ddx)
            if np.hypot(ddx, z - za) < 1e-6 * max(period, 1.0):
                dup = True
                break
        if dup:
            continue
        taken.append((x, z))
        hxx = float(_stream(s, x, z, dx1=2))
        hxz = float(_stream(s, x, z, dx1=1, ds=1))
        hzz = float(_stream(s, x, z, ds=2))
        det = hxx * hzz - hxz * hxz
        hscale = max(abs(hxx), abs(hxz), abs(hzz))
        if abs(det) < 1e-8 * max(hscale * hscale, 1e-30):
            kind = "degenerate"
        elif det > 0:
            kind = "center"
        else:
            kind = "saddle"
        points.append(CriticalPointInfo(x, z, kind, False,
                                        float(_stream(s, x, z))))

    for wall_s, x2w in ((0.0, g.r0), (1.0, g.r0 + 1.0)):
        points.extend(_wall_points(s, x2w, scale))
    return points


def _wall_points(s: SpectralState, x2w: float, scale: float) -> list[CriticalPointInfo]:
    """Zonal zeros of u1 along one wall (u2 vanishes there identically)."""
    g = s.grid
    period = 2 * np.pi * g.r0
    n = max(16 * g.nx, 128)
    xs = np.linspace(0.0, period, n + 1)
    u1 = _stream(s, xs, np.full(n + 1, x2w), ds=1)
    umax = float(np.max(np.abs(u1)))
    if umax < 1e-9 * max(scale, 1e-30):
        return []
    # samples landing on a zero (within roundoff) are roots themselves;
    # brentq only gets decisively signed endpoints, so the bracket holds
    tiny = 1e-11 * umax
    out = []
    f = lambda x: float(_stream(s, x, x2w, ds=1))
    for i in range(n):
        a, b = xs[i], xs[i + 1]
        fa, fb = u1[i], u1[i + 1]
        if abs(fa) <= tiny:
            root = float(a)
        elif abs(fb) <= tiny:
            continue
        elif fa * fb < 0:
            root = brentq(f, a, b, xtol=1e-14)
        else:
            continue
        slope = float(_stream(s, root, x2w, dx1=1, ds=1))
        kind = "degenerate" if abs(slope) < 1e-8 * max(scale, 1e-30) else "saddle"
        out.append(CriticalPointInfo(root % period, x2w, kind, True,
                                     float(_stream(s, root, x2w))))
    return out


def census(points: list[CriticalPointInfo]) -> dict:
    c = {"centers": 0, "interior_saddles": 0, "boundary_saddles": 0,
         "degenerate": 0}
    for pt in points:
        if pt.kind == "degenerate":
            c["degenerate"] += 1
        elif pt.on_boundary:
            c["boundary_saddles"] += 1
        elif pt.kind == "center":
            c["centers"] += 1
        else:
            c["interior_saddles"] += 1
    return c


def _wall_split(points, r0):
    bottom = sum(1 for pt in points if pt.on_boundary and pt.x2 < r0 + 0.5)
    top = sum(1 for pt in points if pt.on_boundary and pt.x2 >= r0 + 0.5)
    return bottom, top


def _has_through_flow(s: SpectralState, nlevels: int = 33, nx: int = 128) -> bool:
    """Is there a depth at which u1 keeps one sign all the way around?"""
    g = s.grid
    period = 2 * np.pi * g.r0
    xs = np.linspace(0.0, period, nx, endpoint=False)
    for sv in np.linspace(0.03, 0.97, nlevels):
        u1 = _stream(s, xs, np.full(nx, g.r0 + sv), ds=1)
        if np.min(u1) > 0 or np.max(u1) < 0:
            return True
    return False


def classify_pattern(s: SpectralState) -> PatternReport:
    """Pattern archetype from the stagnation census and the mean flow.

    Rolls requires membership in E (zero vertical integral of u1) and
    the closed-cell census: an even ring of interior centers matched by
    as many stagnation points on each wall, no interior saddles. A
    nonzero mean flow with a level of unidirectional through-flow is a
    cross-channel pattern, east or west by the sign. Everything else,
    including any degenerate stagnation point, is reported Degenerate.
    """
    mean_flow = vertical_integral_u1(s)
    in_E = abs(mean_flow) < IN_E_TOL
    points = find_critical_points(s)
    cn = census(points)
    stab = structural_stability_check(s, points)

    kind = "Degenerate"
    cells = cn["centers"]
    if cn["degenerate"] == 0:
        bottom, top = _wall_split(points, s.grid.r0)
        if in_E:
            rolls = (cells >= 2 and cells % 2 == 0
                     and cn["interior_saddles"] == 0
                     and bottom == cells and top == cells)
            if rolls:
                kind = "Rolls"
        else:
            if _has_through_flow(s):
                kind = "CrossChannelEast" if mean_flow > 0 else "CrossChannelWest"
    return PatternReport(kind, cells, float(mean_flow), bool(in_E), points,
                         stab.stable_in_htilde)


# ---------------------------------------------------------------------------
# streamline machinery and structural stability

def _velocity(s, x, z):
    u1 = _stream(s, x, z, ds=1)
    u2 = -_stream(s, x, z, dx1=1)
    return u1, u2


def follow_streamline(s: SpectralState, x0: float, z0: float, h: float,
                      max_len: float, stop,
                      scale: float | None = None) -> tuple[str, float, float, list]:
    """Arclength RK4 along the unit velocity direction with level holding.

    After each step the point is projected back onto the starting
    stream level along the gradient. stop(x, z, arclen) may return a
    verdict string to end the walk; returns (verdict, x, z, trace) with
    verdict "max_len" when the length budget runs out and "stagnant"
    if the speed underflows.
    """
    g = s.grid
    level = float(_stream(s, x0, z0))
    x, z = float(x0), float(z0)
    trace = [(x, z)]
    arclen = 0.0
    if scale is None:
        scale = _field_scale(s)
    floor = 1e-13 * max(scale, 1e-30)

    def direction(xa, za):
        u1, u2 = _velocity(s, xa, za)
        sp = np.hypot(u1, u2)
        if sp < floor:
            return None
        return u1 / sp, u2 / sp

    while arclen < max_len:
        d0 = direction(x, z)
        if d0 is None:
            return "stagnant", x, z, trace
        k1 = d0
        d = direction(x + 0.5 * h * k1[0], z + 0.5 * h * k1[1])
        if d is None:
            return "stagnant", x, z, trace
        k2 = d
        d = direction(x + 0.5 * h * k2[0], z + 0.5 * h * k2[1])
        if d is None:
            return "stagnant", x, z, trace
        k3 = d
        d = direction(x + h * k3[0], z + h * k3[1])
        if d is None:
            return "stagnant", x, z, trace
        k4 = d
        x += h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        z += h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        z = min(max(z, g.r0), g.r0 + 1.0)
        for _ in range(2):
            gx = float(_stream(s, x, z, dx1=1))
            gz = float(_stream(s, x, z, ds=1))
            g2 = gx * gx + gz * gz
            if g2 < floor * floor:
                break
            err = float(_stream(s, x, z)) - level
            x -= err * gx / g2
            z -= err * gz / g2
        z = min(max(z, g.r0), g.r0 + 1.0)
        arclen += h
        trace.append((x, z))
        verdict = stop(x, z, arclen)
        if verdict:
            return verdict, x, z, trace
    return "max_len", x, z, trace


def _zonal_dist(a: float, b: float, period: float) -> float:
    d = abs(a - b) % period
    return min(d, period - d)


def _wall_to_wall(s: SpectralState, points,
                  scale: float | None = None) -> tuple[bool, list[str]]:
    """Does any separatrix run from one wall to the other?

    Streamline connections preserve the stream value, and each wall is
    a single level set, so unequal wall levels (nonzero mean flow)
    exclude connections outright. Otherwise each wall stagnation point
    launches a walk into the interior that either reaches the far wall
    or comes back.
    """
    g = s.grid
    notes: list[str] = []
    bottom_level = 0.0
    top_level = float(_stream(s, 0.0, g.r0 + 1.0))
    if abs(top_level - bottom_level) > 1e-8:
        notes.append("wall stream levels differ; connections impossible")
        return False, notes
    if scale is None:
        scale = _field_scale(s)
    max_len = 8.0 * (2 * np.pi * g.r0 + 1.0)
    h = 2e-3
    for pt in points:
        if not pt.on_boundary or pt.kind != "saddle":
            continue
        from_bottom = pt.x2 < g.r0 + 0.5
        z_start = g.r0 + (2 * h if from_bottom else 1.0 - 2 * h)

        def stop(x, z, ln):
            if from_bottom and z >= g.r0 + 1.0 - 3 * h:
                return "far_wall"
            if not from_bottom and z <= g.r0 + 3 * h:
                return "far_wall"
            if ln > 4 * h and (z <= g.r0 + 1e-4 if from_bottom
                               else z >= g.r0 + 1.0 - 1e-4):
                return "returned"
            return ""

        verdict, xf, zf, _ = follow_streamline(s, pt.x1, z_start, h, max_len,
                                               stop, scale=scale)
        # velocity vanishes on the wall itself, so a walk that stagnates
        # within reach of the far wall has arrived there
        reached = (zf >= g.r0 + 1.0 - 3 * h) if from_bottom else (zf <= g.r0 + 3 * h)
        if verdict == "far_wall" or (verdict == "stagnant" and reached):
            notes.append(f"wall saddle at x1={pt.x1:.6f} connects to the far wall")
            return True, notes
    return False, notes


def _saddle_directions(s: SpectralState, x: float, z: float):
    """Unit eigenvectors of the velocity Jacobian at a stagnation point."""
    a11 = float(_stream(s, x, z, dx1=1, ds=1))
    a12 = float(_stream(s, x, z, ds=2))
    a21 = -float(_stream(s, x, z, dx1=2))
    a22 = -float(_stream(s, x, z, dx1=1, ds=1))
    A = np.array([[a11, a12], [a21, a22]])
    w, v = np.linalg.eig(A)
    dirs = []
    for i in range(2):
        if abs(w[i].imag) > 1e-10:
            continue
        vec = v[:, i].real
        nv = np.linalg.norm(vec)
        if nv > 0:
            dirs.append(vec / nv)
    return dirs


def _self_connected(s: SpectralState, pt: CriticalPointInfo,
                    scale: float | None = None) -> bool:
    """Both separatrix branches of an interior saddle return to it."""
    g = s.grid
    period = 2 * np.pi * g.r0
    max_len = 8.0 * (period + 1.0)
    h = 2e-3
    offset = 5e-3
    if scale is None:
        scale = _field_scale(s)
    dirs = _saddle_directions(s, pt.x1, pt.x2)
    if not dirs:
        return False
    branches = [sgn * d for d in dirs[:1] for sgn in (1.0, -1.0)]
    for d in branches:
        x0 = pt.x1 + offset * d[0]
        z0 = min(max(pt.x2 + offset * d[1], g.r0 + 1e-4), g.r0 + 1 - 1e-4)

        def stop(x, z, ln):
            if ln > 4 * offset and _zonal_dist(x, pt.x1, period) < 1e-4 \
                    and abs(z - pt.x2) < 1e-4:
                return "closed"
            return ""

        verdict, xf, zf, _ = follow_streamline(s, x0, z0, h, max_len, stop,
                                               scale=scale)
        if verdict != "closed":
            near = _zonal_dist(xf, pt.x1, period) < 1e-3 and abs(zf - pt.x2) < 1e-3
            if verdict == "stagnant" and near:
                continue
            return False
    return True


def structural_stability_check(s: SpectralState,
                               points: list[CriticalPointInfo] | None = None) -> StabilityReport:
    """Computable structural-stability criteria for the velocity field.

    Reports regularity, wall-to-wall saddle connections, interior
    saddle self-connection, and zero-total-momentum membership. In the
    restricted space the field is structurally stable iff regular with
    all interior saddles self-connected; in the full space wall-to-wall
    connections must also be absent.
    """
    if points is None:
        points = find_critical_points(s)
    notes: list[str] = []
    regular = all(pt.kind != "degenerate" for pt in points)
    if not regular:
        notes.append("degenerate stagnation point present")

    momentum = 2 * np.pi * s.grid.r0 * vertical_integral_u1(s)
    in_htilde = abs(momentum) < IN_E_TOL

    scale = _field_scale(s)
    w2w, w_notes = _wall_to_wall(s, points, scale)
    notes.extend(w_notes)

    interior = [pt for pt in points if not pt.on_boundary and pt.kind == "saddle"]
    self_conn = True
    for pt in interior:
        if not _self_connected(s, pt, scale):
            self_conn = False
            notes.append(f"interior saddle at ({pt.x1:.6f}, {pt.x2:.6f}) "
                         "is not self-connected")

    stable_htilde = regular and self_conn
    stable_h = stable_htilde and not w2w
    return StabilityReport(regular, w2w, self_conn, in_htilde,
                           stable_h, stable_htilde, notes)


# ---------------------------------------------------------------------------
# rendering

def render_pattern(s: SpectralState, path: str, nx: int = 181, nz: int = 61,
                   title: str | None = None) -> None:
    """Streamline plot with stagnation-point markers, written as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    g = s.grid
    period = 2 * np.pi * g.r0
    x = np.linspace(0.0, period, nx)
    z = g.r0 + np.linspace(0.0, 1.0, nz)
    X, Z = np.meshgrid(x, z, indexing="xy")
    psi = _stream(s, X, Z)
    u1 = _stream(s, X, Z, ds=1)
    u2 = -_stream(s, X, Z, dx1=1)

    fig, ax = plt.subplots(figsize=(8.0, max(2.0, 8.0 / period)))
    ax.contour(X, Z, psi, levels=21, linewidths=0.6, colors="steelblue")
    ax.streamplot(x, z, u1, u2, density=1.2, linewidth=0.5, color="lightgray",
                  arrowsize=0.7)
    marks = {"center": ("o", "crimson"), "saddle": ("x", "black"),
             "degenerate": ("s", "orange")}
    for pt in find_critical_points(s):
        m, c = marks[pt.kind]
        ax.plot([pt.x1], [pt.x2], marker=m, color=c, markersize=5,
                linestyle="none")
    ax.set_xlim(0, period)
    ax.set_ylim(g.r0, g.r0 + 1)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
