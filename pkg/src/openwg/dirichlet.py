"""
Dirichlet waveguides, open arcs, and junctions assembled from them.

Dirichlet guide (walls ``x2 = center +- d``)
    The walls split the plane into three regions and the Green's function
    vanishes across them.  Above or below the guide it is the free kernel
    minus the image in the nearer wall.  Inside, both first images are
    subtracted and the remainder is a double layer on the (complexified)
    walls,

        G = G_k(x; y) - G_k(x; y_t) - G_k(x; y_b) + D_k[rho](x),
        (-1/2 + D_k) rho = -(G_k - G_k(.; y_t) - G_k(.; y_b))   on the walls,

    whose data is smooth because the images cancel the source on the nearer
    wall.

Open arcs
    ``G = G_k + S_k[rho]`` with ``S_k[rho] = -G_k`` on straight segments.  The
    density has inverse square-root end singularities; with ``t = cos u`` the
    scaled density ``rho sqrt(1 - t^2)`` is smooth in ``u`` and the equation
    is discretized on Gauss-Legendre panels in ``u`` (first kind, so the
    condition number is monitored).

Junctions
    Regions ordered along ``x1`` are separated by complexified vertical lines.
    The field of region ``r`` is ``S_r[tau] + D_r[sigma]`` over its bounding
    lines (``D`` with source normal ``(1, 0)``), and continuity of the field
    and of ``d/dx1`` on every line gives a second-kind system.  All regions
    share one wavenumber, so the free parts cancel on each line and only
    differences of the smooth outgoing parts appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import geometry as geo
from . import quadrature as quad
from .kernels import HelmholtzKernel, layer_matrix
from .transmission import condition_estimate

__all__ = [
    "DirichletError",
    "DirichletGuide",
    "OpenArc",
    "ArcSolution",
    "ArcDomain",
    "DirichletJunction",
    "JunctionSolution",
    "dirichlet_guide",
    "greens_dirichlet_guide",
    "wall_trace",
    "open_arc_problem",
    "solve_open_arc",
    "arc_residual",
    "terminated_guide",
    "guide_pair",
    "point_source_incoming",
    "COND_LIMIT",
]

COND_LIMIT = 1e6
_FREE = {(0, 0): "S", (1, 0): "Sg1", (0, 1): "Sy1", (1, 1): "Sg1y1"}
_ZN = np.zeros((2, 1, 1))


class DirichletError(RuntimeError):
    """Invalid Dirichlet evaluation or an ill-conditioned arc system."""


def _pts(x):
    return np.asarray(x, dtype=complex).reshape(2, -1)


def _free(k, x, y, deriv=(0, 0)):
    """Free kernel matrix ``(nx, ny)`` for derivative selector ``(ax, ay)``."""
    kern = HelmholtzKernel((_FREE[tuple(deriv)],), k)
    with np.errstate(divide="ignore", invalid="ignore"):
        return kern(x[:, :, None], _ZN, y[:, None, :], _ZN)[0]


def _default_panels(T, k, per_piece=1):
    h = min(math.pi / k, 2.0) / 1.5
    return per_piece * max(2, int(math.ceil(2 * T / h)))


# ---------------------------------------------------------------------------
# Dirichlet guide


@dataclass
class DirichletGuide:
    """Bi-infinite guide with Dirichlet walls; interior remainder factored."""

    k: float
    d: float
    center: float
    contour: geo.Contour
    lu: tuple
    rcond: float
    meta: dict = field(default_factory=dict)

    @property
    def cond(self) -> float:
        return 1.0 / self.rcond if self.rcond > 0 else np.inf

    def region(self, x) -> np.ndarray:
        """``+1`` above, ``0`` inside, ``-1`` below (by ``Re x2``)."""
        y = np.real(_pts(x)[1]) - self.center
        if np.any(np.abs(np.abs(y) - self.d) <= 1e-13 * max(1.0, self.d)):
            raise DirichletError("point on a Dirichlet wall")
        return np.where(y > self.d, 1, np.where(y < -self.d, -1, 0))

    def mirror(self, y, wall: int):
        """Reflection of ``y`` in the top (``wall=+1``) or bottom (``-1``) wall."""
        w = self.center + wall * self.d
        return np.stack([y[0], 2 * w - y[1]])

    def _remainder_density(self, y, ay: int):
        c = self.contour
        top = np.real(c.x[1]) > self.center
        z = c.x
        rhs = np.empty((c.n_nodes, y.shape[1]), dtype=complex)
        # images cancel the source on the nearer wall: what is left is the far image
        rhs[top] = _free(self.k, z[:, top], self.mirror(y, -1), (0, ay))
        rhs[~top] = _free(self.k, z[:, ~top], self.mirror(y, 1), (0, ay))
        return sla.lu_solve(self.lu, rhs)

    def remainder(self, x, y, deriv=(0, 0)):
        """``D_k[rho_y](x)`` for interior ``x`` and ``y``; ``(nx, ny)``."""
        x, y = _pts(x), _pts(y)
        ax, ay = deriv
        rho = self._remainder_density(y, ay)
        m = layer_matrix(HelmholtzKernel(("Dg1" if ax else "D",), self.k), self.contour, x)[0]
        return m @ rho

    def _build(self, x, y, deriv, free: bool):
        x, y = _pts(x), _pts(y)
        rx, ry = self.region(x), self.region(y)
        out = np.zeros((x.shape[1], y.shape[1]), dtype=complex)
        same = rx[:, None] == ry[None, :]
        if not free and not same.all():
            # across a wall G vanishes, so G - G_k = -G_k
            out = np.where(same, 0.0, -_free(self.k, x, y, deriv))
        for s in (1, 0, -1):
            ix, iy = np.nonzero(rx == s)[0], np.nonzero(ry == s)[0]
            if not (ix.size and iy.size):
                continue
            xs, ys = x[:, ix], y[:, iy]
            v = _free(self.k, xs, ys, deriv) if free else np.zeros((ix.size, iy.size), dtype=complex)
            if s:
                v -= _free(self.k, xs, self.mirror(ys, s), deriv)
            else:
                v -= _free(self.k, xs, self.mirror(ys, 1), deriv)
                v -= _free(self.k, xs, self.mirror(ys, -1), deriv)
                v += self.remainder(xs, ys, deriv)
            out[np.ix_(ix, iy)] = v
        return out

    def matrix(self, x, y, deriv=(0, 0)):
        """Full Green's function ``(nx, ny)`` with derivative selector ``(ax, ay)``."""
        return self._build(x, y, deriv, True)

    def out_matrix(self, x, y, deriv=(0, 0)):
        """``G - G_k``; finite at coincident points."""
        return self._build(x, y, deriv, False)

    def free_regions(self, x, y) -> np.ndarray:
        """Mask of pairs whose Green's function contains the free kernel."""
        return self.region(x)[:, None] == self.region(y)[None, :]


def dirichlet_guide(k: float, d: float, L: float = 10.0, n_panels: int | None = None, center: float = 0.0,
                    truncation: float | None = None) -> DirichletGuide:
    """Factor the interior remainder equation of a Dirichlet guide.

    Walls carry the same complexification as the other guides; the default
    panel count keeps panels shorter than ``min(pi/k, 2)``.
    """
    if k <= 0 or d <= 0:
        raise ValueError("k and d must be positive")
    cplx = geo.Complexification(L=L)
    T = cplx.truncation(k) if truncation is None else float(truncation)
    n = _default_panels(T, k, 2) if n_panels is None else int(n_panels)
    c = geo.waveguide_edges(d, L, n, k=k, truncation=T, cplx=cplx, offset=center, tags=("top", "bottom"))
    a = layer_matrix(HelmholtzKernel(("D",), k), c, c.x, c.normal, c.panel_of_node, c.node_s)[0]
    a -= 0.5 * np.eye(c.n_nodes)
    anorm = np.abs(a).sum(axis=0).max()
    lu = sla.lu_factor(a, overwrite_a=True, check_finite=False)
    rc = condition_estimate(anorm, lu)
    return DirichletGuide(float(k), float(d), float(center), c, lu, rc, {"L": L, "n_panels": n, "truncation": T})


def greens_dirichlet_guide(guide: DirichletGuide, x, y, deriv=(0, 0)):
    """Dirichlet guide Green's function ``G(x; y)``.

    Scalar for single points, ``(nx, ny)`` matrix for point arrays.
    """
    xa, ya = _pts(x), _pts(y)
    if xa.shape[1] == 1 and ya.shape[1] == 1:
        d1, d2 = xa[:, 0] - ya[:, 0]
        if d1 * d1 + d2 * d2 == 0:
            raise ValueError("coincident points")
        return complex(guide.matrix(xa, ya, deriv)[0, 0])
    return guide.matrix(xa, ya, deriv)


def wall_trace(guide: DirichletGuide, x1, y, wall: int = 1):
    """Interior limit of ``G(.; y)`` on a wall at abscissae ``x1`` (off the nodes).

    Uses the jump relation ``-rho/2 + D_k[rho]`` with ``rho`` interpolated on
    its panel; should vanish to discretization accuracy.
    """
    c = guide.contour
    y = _pts(y)
    x1 = np.asarray(x1, dtype=float).ravel()
    w = guide.center + wall * guide.d
    x = np.stack([x1 + 0j, np.full(x1.shape, w, dtype=complex)])
    tag = "top" if wall > 0 else "bottom"
    mask = np.array([c.pieces[p].tag == tag for p in c.panel_piece])
    pan = np.nonzero(mask)[0]
    ta, tb = c.panel_t[pan, 0], c.panel_t[pan, 1]
    idx = np.searchsorted(tb, x1)
    if np.any(idx >= pan.size) or np.any(x1 < ta[0]):
        raise ValueError("abscissa outside the truncated wall")
    tp = pan[idx]
    s0 = (2 * x1 - ta[idx] - tb[idx]) / (tb[idx] - ta[idx])
    rho = guide._remainder_density(y, 0)
    dm = layer_matrix(HelmholtzKernel(("D",), guide.k), c, x, np.tile([[0.0], [float(wall)]], (1, x1.size)),
                      tp, s0)[0]
    lag = quad.interp_matrix(s0)
    rho_x = np.einsum("tj,tjc->tc", lag, rho[(tp[:, None] * 16 + np.arange(16))])
    free = _free(guide.k, x, y) - _free(guide.k, x, guide.mirror(y, 1)) - _free(guide.k, x, guide.mirror(y, -1))
    return free - 0.5 * rho_x + dm @ rho


# ---------------------------------------------------------------------------
# open arcs


def _arc_matrix(kernel, contour, x, tpanel=None, ts0=None):
    """Layer matrix on an open-arc contour; on-arc targets integrated by split adaptivity."""
    x = _pts(x)
    nt = x.shape[1]
    m = layer_matrix(kernel, contour, x, None, tpanel, ts0)
    if tpanel is None:
        return m
    tpanel = np.asarray(tpanel, dtype=int)
    ts0 = np.asarray(ts0, dtype=float)
    on = np.nonzero(tpanel >= 0)[0]
    if on.size:
        cols = tpanel[on][:, None] * 16 + np.arange(16)[None, :]
        acc = np.zeros((m.shape[0], on.size, 16), dtype=complex)
        # the target splits its panel; a target at a panel end leaves one empty piece
        for a, b in ((-np.ones(on.size), ts0[on]), (ts0[on], np.ones(on.size))):
            live = b - a > 1e-14
            if live.any():
                sel = on[live]
                acc[:, live] += quad.adaptive_panel_weights(kernel, x[:, sel], np.zeros((2, sel.size)), contour,
                                                           tpanel[sel], lo=a[live], hi=b[live])
        m[:, on[:, None], cols] = acc
    return m


@dataclass
class OpenArc:
    """Straight Dirichlet segments with the factored first-kind system."""

    k: float
    segments: list
    contour: geo.Contour
    lu: tuple
    cond: float
    meta: dict = field(default_factory=dict)


@dataclass
class ArcSolution:
    """Scaled density on an open-arc contour (``rho sqrt(1 - t^2)`` at the nodes)."""

    arc: OpenArc
    rho: np.ndarray

    def evaluate(self, x, deriv: str = "value"):
        """``S_k[rho]`` (or ``d/dx1``, ``grad``) at targets off the arcs."""
        kinds = {"value": ("S",), "x1": ("Sg1",), "grad": ("S", "Sg1", "Sg2")}[deriv]
        m = layer_matrix(HelmholtzKernel(kinds, self.arc.k), self.arc.contour, _pts(x))
        v = np.einsum("mtn,n...->mt...", m, self.rho)
        return v if deriv == "grad" else v[0]


def open_arc_problem(segments, k: float, n_panels: int = 4, refine_at=(), levels: int = 0,
                     cond_limit: float = COND_LIMIT) -> OpenArc:
    """Discretize ``S_k[rho] = g`` on straight segments in the cosine variable.

    Raises :class:`DirichletError` when the 2-norm condition number of the
    discretized first-kind operator exceeds ``cond_limit``.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    segs = [(tuple(map(float, a)), tuple(map(float, b))) for a, b in segments]
    c = geo.open_arcs(segs, n_panels, refine_at, levels)
    a = _arc_matrix(HelmholtzKernel(("S",), k), c, c.x, c.panel_of_node, c.node_s)[0]
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > cond_limit:
        raise DirichletError(f"open-arc system condition number {cond:.3g} exceeds {cond_limit:.3g}")
    lu = sla.lu_factor(a, check_finite=False)
    return OpenArc(float(k), segs, c, lu, cond, {"n_panels": n_panels, "levels": levels})


def solve_open_arc(arc: OpenArc, incoming) -> ArcSolution:
    """Solve ``S_k[rho] = -u_in`` on the arcs.

    ``incoming`` is a callable on ``(2, n)`` points or an array of node values
    (one column per right-hand side allowed).
    """
    g = incoming(arc.contour.x) if callable(incoming) else np.asarray(incoming, dtype=complex)
    return ArcSolution(arc, sla.lu_solve(arc.lu, -g))


def arc_residual(sol: ArcSolution, u, incoming, piece: int = 0):
    """``u_in + S_k[rho]`` at parameters ``u`` (off the nodes) on one arc piece."""
    c = sol.arc.contour
    u = np.asarray(u, dtype=float).ravel()
    pan = np.nonzero(c.panel_piece == piece)[0]
    ta, tb = c.panel_t[pan, 0], c.panel_t[pan, 1]
    idx = np.clip(np.searchsorted(tb, u), 0, pan.size - 1)
    tp = pan[idx]
    s0 = (2 * u - ta[idx] - tb[idx]) / (tb[idx] - ta[idx])
    x1, x2 = c.pieces[piece].point(u)
    x = np.stack([x1, x2])
    m = _arc_matrix(HelmholtzKernel(("S",), sol.arc.k), c, x, tp, s0)[0]
    g = incoming(x) if callable(incoming) else incoming
    return g + m @ sol.rho


class ArcDomain:
    """Green's function of the plane with Dirichlet segments: ``G_k + S_k[rho_y]``."""

    def __init__(self, arc: OpenArc):
        self.arc = arc
        self.k = arc.k

    def densities(self, y, ay: int = 0):
        return sla.lu_solve(self.arc.lu, -_free(self.k, self.arc.contour.x, _pts(y), (0, ay)))

    def out_matrix(self, x, y, deriv=(0, 0)):
        ax, ay = deriv
        rho = self.densities(y, ay)
        m = layer_matrix(HelmholtzKernel(("Sg1" if ax else "S",), self.k), self.arc.contour, _pts(x))[0]
        return m @ rho

    def matrix(self, x, y, deriv=(0, 0)):
        x, y = _pts(x), _pts(y)
        return _free(self.k, x, y, deriv) + self.out_matrix(x, y, deriv)

    def free_regions(self, x, y) -> np.ndarray:
        return np.ones((_pts(x).shape[1], _pts(y).shape[1]), dtype=bool)


# ---------------------------------------------------------------------------
# junctions


@dataclass
class JunctionSolution:
    sigma: list
    tau: list
    residual: float = np.nan


@dataclass
class DirichletJunction:
    """Regions (Green's function objects) separated by vertical junction lines.

    ``regions[r]`` lies between ``lines[r-1]`` and ``lines[r]``.
    """

    k: float
    regions: list
    lines: list
    meta: dict = field(default_factory=dict)
    matrix: np.ndarray | None = None
    lu: tuple | None = None
    rcond: float = np.nan

    @property
    def cond(self) -> float:
        return 1.0 / self.rcond if self.rcond > 0 else np.inf

    @property
    def positions(self):
        return [float(c.meta.get("x1", 0.0)) for c in self.lines]

    def region_of(self, x) -> np.ndarray:
        x1 = np.real(_pts(x)[0])
        pos = np.array(self.positions)
        if np.any(np.isin(x1, pos)):
            raise ValueError("targets on a junction line")
        return np.searchsorted(pos, x1)

    def _blocks(self, region, xi, yj, w, deriv_pairs, part: str):
        g = region.out_matrix if part == "out" else region.matrix
        return {dp: g(xi, yj, dp) * w[None, :] for dp in deriv_pairs}

    def assemble(self):
        """Build and factor the block system on all lines."""
        nl = len(self.lines)
        sizes = [c.n_nodes for c in self.lines]
        off = np.concatenate([[0], np.cumsum([2 * s for s in sizes])])
        n = off[-1]
        a = np.zeros((n, n), dtype=complex)
        sel = ((0, 0), (0, 1), (1, 0), (1, 1))
        for i, ci in enumerate(self.lines):
            xi, mi = ci.x, ci.n_nodes
            r1 = slice(off[i], off[i] + mi)
            r2 = slice(off[i] + mi, off[i] + 2 * mi)
            for j, cj in enumerate(self.lines):
                if abs(i - j) > 1:
                    continue
                c_s = slice(off[j], off[j] + cj.n_nodes)
                c_t = slice(off[j] + cj.n_nodes, off[j] + 2 * cj.n_nodes)
                if i == j:
                    L, R = self.regions[i], self.regions[i + 1]
                    bl = self._blocks(L, xi, xi, ci.w, sel, "out")
                    br = self._blocks(R, xi, xi, ci.w, sel, "out")
                    a[r1, c_s] = np.eye(mi) + br[(0, 1)] - bl[(0, 1)]
                    a[r1, c_t] = br[(0, 0)] - bl[(0, 0)]
                    a[r2, c_s] = bl[(1, 1)] - br[(1, 1)]
                    a[r2, c_t] = np.eye(mi) + bl[(1, 0)] - br[(1, 0)]
                else:
                    # region between lines i and j sees line j's potentials at line i
                    reg = self.regions[max(i, j)]
                    sgn = 1.0 if j == i + 1 else -1.0
                    b = self._blocks(reg, xi, cj.x, cj.w, sel, "full")
                    a[r1, c_s] = sgn * b[(0, 1)]
                    a[r1, c_t] = sgn * b[(0, 0)]
                    a[r2, c_s] = -sgn * b[(1, 1)]
                    a[r2, c_t] = -sgn * b[(1, 0)]
        self.matrix = a
        anorm = np.abs(a).sum(axis=0).max()
        self.lu = sla.lu_factor(a, check_finite=False)
        self.rcond = condition_estimate(anorm, self.lu)
        return self

    def rhs(self, incoming):
        """Right-hand side for incoming fields ``incoming[r](x, ax)`` (``None`` = zero)."""
        parts = []
        for i, c in enumerate(self.lines):
            def val(r, ax):
                f = incoming[r] if incoming is not None else None
                return np.zeros(c.n_nodes, dtype=complex) if f is None else np.asarray(f(c.x, ax), dtype=complex)
            parts.append(val(i, 0) - val(i + 1, 0))
            parts.append(val(i + 1, 1) - val(i, 1))
        return np.concatenate(parts)

    def solve(self, incoming) -> JunctionSolution:
        if self.lu is None:
            self.assemble()
        b = self.rhs(incoming)
        s = sla.lu_solve(self.lu, b)
        res = np.linalg.norm(self.matrix @ s - b) / max(np.linalg.norm(b), 1e-300)
        sig, tau = [], []
        o = 0
        for c in self.lines:
            m = c.n_nodes
            sig.append(s[o:o + m])
            tau.append(s[o + m:o + 2 * m])
            o += 2 * m
        return JunctionSolution(sig, tau, float(res))

    def field(self, sol: JunctionSolution, x, incoming=None):
        """Outgoing field (plus ``incoming`` if given) at targets off the lines."""
        x = _pts(x)
        reg = self.region_of(x)
        out = np.zeros(x.shape[1], dtype=complex)
        for r in np.unique(reg):
            sel = reg == r
            g = self.regions[r]
            xs = x[:, sel]
            for j in (r - 1, r):
                if 0 <= j < len(self.lines):
                    c = self.lines[j]
                    ms = g.matrix(xs, c.x, (0, 0)) * c.w
                    md = g.matrix(xs, c.x, (0, 1)) * c.w
                    # near panels: swap the plain sum of the free part for adaptive quadrature
                    lm = layer_matrix(HelmholtzKernel(("S", "Sy1"), self.k), c, xs)
                    mask = g.free_regions(xs, c.x)
                    ms += np.where(mask, lm[0] - _free(self.k, xs, c.x) * c.w, 0.0)
                    md += np.where(mask, lm[1] - _free(self.k, xs, c.x, (0, 1)) * c.w, 0.0)
                    out[sel] += ms @ sol.tau[j] + md @ sol.sigma[j]
            if incoming is not None and incoming[r] is not None:
                out[sel] += incoming[r](x[:, sel], 0)
        return out


def point_source_incoming(green, x0, sign: float = 1.0):
    """Callable ``(x, ax) -> sign * d^ax/dx1^ax G(x; x0)`` for one region's Green's function."""
    y = _pts(x0)

    def f(x, ax):
        return sign * green.matrix(_pts(x), y, (ax, 0))[:, 0]

    return f


def _line(k, L, n_panels, x1, d, center, truncation):
    cplx = geo.Complexification(L=L)
    T = cplx.truncation(k) if truncation is None else float(truncation)
    n = _default_panels(T, k) if n_panels is None else int(n_panels)
    return geo.junction_line(L, n, k=k, truncation=T, cplx=cplx, fixed=(center - d, center + d), x1=x1)


def terminated_guide(k: float = 2.0, d: float = 2.0, L: float = 10.0, line_panels: int | None = None,
                     wall_panels: int | None = None, end: tuple = (-1.0, 1.0), arc_panels: int = 4,
                     arc_levels: int = 8, truncation: float | None = None) -> DirichletJunction:
    """Dirichlet guide for ``x1 < 0`` ending without a cap inside ``x1 > 0``.

    The right region is the plane with the segments ``[end0, end1] x {+-d}``;
    they overlap the junction line so the pipe-end corners sit at
    ``x1 = end1``, away from it.
    """
    left = dirichlet_guide(k, d, L, wall_panels, truncation=truncation)
    e0, e1 = map(float, end)
    if not e0 < 0.0 < e1:
        raise ValueError("the end segments must straddle the junction line")
    segs = [((e0, d), (e1, d)), ((e0, -d), (e1, -d))]
    arc = open_arc_problem(segs, k, arc_panels, refine_at=[(0.0, d), (0.0, -d)], levels=arc_levels)
    line = _line(k, L, line_panels, 0.0, d, 0.0, truncation)
    meta = {"scenario": "dirichlet-terminated", "k": k, "d": d, "L": L, "end": [e0, e1],
            "arc_cond": arc.cond, "wall_cond": left.cond}
    return DirichletJunction(k, [left, ArcDomain(arc)], [line], meta)


def guide_pair(k: float = 2.0, d: float = 2.0, gap: float = 6.0, L: float = 10.0, line_panels: int | None = None,
               wall_panels: int | None = None, overhang: float = 1.0, arc_panels: int = 4, arc_levels: int = 8,
               truncation: float | None = None) -> DirichletJunction:
    """Two Dirichlet guides end to end: ``x1 < 0`` and ``x1 > gap``.

    The middle region is the plane with four segments: each pipe end extends
    ``overhang`` past its junction line on both sides.
    """
    if gap <= 2 * overhang:
        raise ValueError("gap must exceed twice the overhang")
    left = dirichlet_guide(k, d, L, wall_panels, truncation=truncation)
    right = dirichlet_guide(k, d, L, wall_panels, truncation=truncation)
    o = float(overhang)
    segs = []
    for x0 in (0.0, gap):
        segs += [((x0 - o, d), (x0 + o, d)), ((x0 - o, -d), (x0 + o, -d))]
    cross = [(0.0, d), (0.0, -d), (gap, d), (gap, -d)]
    arc = open_arc_problem(segs, k, arc_panels, refine_at=cross, levels=arc_levels)
    lines = [_line(k, L, line_panels, 0.0, d, 0.0, truncation), _line(k, L, line_panels, gap, d, 0.0, truncation)]
    meta = {"scenario": "dirichlet-pair", "k": k, "d": d, "gap": gap, "L": L, "overhang": o,
            "arc_cond": arc.cond, "wall_cond": left.cond}
    return DirichletJunction(k, [left, ArcDomain(arc), _Shifted(right, gap)], lines, meta)


class _Shifted:
    """Green's function object translated by ``dx`` along ``x1``."""

    def __init__(self, green, dx: float):
        self.green = green
        self.dx = float(dx)
        self.k = green.k

    def _s(self, x):
        x = _pts(x).copy()
        x[0] -= self.dx
        return x

    def matrix(self, x, y, deriv=(0, 0)):
        return self.green.matrix(self._s(x), self._s(y), deriv)

    def out_matrix(self, x, y, deriv=(0, 0)):
        return self.green.out_matrix(self._s(x), self._s(y), deriv)

    def free_regions(self, x, y):
        return self.green.free_regions(self._s(x), self._s(y))
