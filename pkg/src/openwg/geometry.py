"""
Panelized, optionally complexified, contours.

Every contour is a union of *pieces*.  A piece is a smooth parametric curve
``t -> (x1(t), x2(t))`` (coordinates may be complex) with a fixed real
normal field.  Pieces are split into panels, each carrying the images of the
16-point Gauss-Legendre nodes, the complex arc-length weights and the normals.

Straight lines may be complexified along their direction through

    z(t) = t + i psi(t),
    psi(t) = A [erfc(-(t - c)/w) - erfc((t + c)/w)],

which vanishes (to machine precision) on [-L, L] when c = L + 30 and
saturates at +-2A far out.  The kernel ``exp(i k z)`` then decays like
``exp(-k |psi|)`` and the contour can be truncated where ``k |psi| > -log eps``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc

from .quadrature import gauss_legendre

__all__ = [
    "Complexification",
    "ContourWarning",
    "Piece",
    "Contour",
    "complexification_map",
    "line_piece",
    "circle_piece",
    "polygon_pieces",
    "build_contour",
    "waveguide_edges",
    "junction_line",
    "compact_loop",
    "open_arc",
    "open_arcs",
    "write_contour_csv",
]

NODES_PER_PANEL = 16


class ContourWarning(UserWarning):
    """Emitted for under-resolved contours."""


@dataclass(frozen=True)
class Complexification:
    """Parameters of the map ``t -> t + i psi(t)``.

    Parameters
    ----------
    L : float
        Half-width of the real window on which ``psi`` vanishes.
    amplitude : float
        ``A``; ``psi`` saturates at ``+-2A``.
    width : float
        ``w``, transition width of the erfc ramps.
    offset : float, optional
        ``c``; defaults to ``L + 30``.
    """

    L: float = 10.0
    amplitude: float = 20.0
    width: float = 5.0
    offset: float | None = None

    def __post_init__(self):
        if self.L <= 0 or self.width <= 0:
            raise ValueError("Complexification needs L > 0 and width > 0")

    @property
    def c(self) -> float:
        return self.L + 30.0 if self.offset is None else self.offset

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        a, c, w = self.amplitude, self.c, self.width
        return a * (erfc(-(t - c) / w) - erfc((t + c) / w))

    def dpsi(self, t):
        t = np.asarray(t, dtype=float)
        a, c, w = self.amplitude, self.c, self.width
        return a * (2.0 / math.sqrt(math.pi)) / w * (np.exp(-(((t - c) / w) ** 2)) + np.exp(-(((t + c) / w) ** 2)))

    def truncation(self, k: float, eps: float = 1e-17, minimum: float | None = None) -> float:
        """Smallest ``T >= L`` with ``k psi(T) >= -log(eps)``.

        The default ``minimum`` is ``L + 38``; the result is never smaller.
        """
        target = -math.log(eps) / k
        if 2.0 * self.amplitude <= target:
            raise ValueError("complexification amplitude too small for the requested decay")
        lo, hi = self.L, self.c + 10.0 * self.width
        while self.psi(hi) < target:
            hi += 10.0 * self.width
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.psi(mid) >= target:
                hi = mid
            else:
                lo = mid
        floor = self.L + 38.0 if minimum is None else minimum
        return max(hi, floor)


def complexification_map(t, params: Complexification):
    """Return ``t + i psi(t)``."""
    t = np.asarray(t, dtype=float)
    return t + 1j * params.psi(t)


@dataclass(frozen=True)
class Piece:
    """Smooth parametric curve with a real normal field.

    ``point(t)`` returns ``(x1, x2)``, ``deriv(t)`` returns ``(x1', x2')``
    and ``normal(t)`` returns ``(n1, n2)``; all accept arrays.
    """

    point: Callable
    deriv: Callable
    normal: Callable
    t0: float
    t1: float
    tag: str = ""
    complexified: bool = False
    closed: bool = False


def line_piece(origin, direction, t0, t1, normal=None, cplx: Complexification | None = None, tag=""):
    """Straight line ``origin + z(t) * direction``, with ``z = t + i psi(t)`` if complexified.

    ``direction`` is normalized; the default normal is ``direction`` rotated
    by -90 degrees (to the right of the direction of travel).
    """
    o = np.asarray(origin, dtype=float)
    e = np.asarray(direction, dtype=float)
    e = e / np.hypot(*e)
    nrm = np.array([e[1], -e[0]]) if normal is None else np.asarray(normal, dtype=float)

    if cplx is None:
        def point(t):
            t = np.asarray(t, dtype=float)
            return (o[0] + t * e[0]).astype(complex), (o[1] + t * e[1]).astype(complex)

        def deriv(t):
            t = np.asarray(t, dtype=float)
            one = np.ones_like(t, dtype=complex)
            return one * e[0], one * e[1]
    else:
        def point(t):
            z = complexification_map(t, cplx)
            return o[0] + z * e[0], o[1] + z * e[1]

        def deriv(t):
            dz = 1.0 + 1j * cplx.dpsi(t)
            return dz * e[0], dz * e[1]

    def normal(t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, nrm[0]), np.full(t.shape, nrm[1])

    return Piece(point, deriv, normal, float(t0), float(t1), tag, cplx is not None)


def circle_piece(center, radius, tag="", t0=0.0, t1=2.0 * math.pi):
    """Counter-clockwise circle (arc) with outward normal."""
    cx, cy = map(float, center)
    r = float(radius)

    def point(t):
        t = np.asarray(t, dtype=float)
        return (cx + r * np.cos(t)).astype(complex), (cy + r * np.sin(t)).astype(complex)

    def deriv(t):
        t = np.asarray(t, dtype=float)
        return (-r * np.sin(t)).astype(complex), (r * np.cos(t)).astype(complex)

    def normal(t):
        t = np.asarray(t, dtype=float)
        return np.cos(t), np.sin(t)

    closed = abs((t1 - t0) - 2.0 * math.pi) < 1e-14
    return Piece(point, deriv, normal, t0, t1, tag, False, closed)


def polygon_pieces(vertices, tag=""):
    """Counter-clockwise closed polygon as straight pieces with outward normals."""
    v = np.asarray(vertices, dtype=float)
    out = []
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        length = float(np.hypot(*(b - a)))
        out.append(line_piece(a, b - a, 0.0, length, tag=tag))
    return out


@dataclass
class Contour:
    """Panelized union of pieces.

    Attributes
    ----------
    pieces : tuple of Piece
    panel_piece : (P,) int
        Index of the piece owning each panel.
    panel_t : (P, 2) float
        Parameter interval of each panel.
    x : (2, N) complex
        Node coordinates (``N = 16 P``).
    normal : (2, N) float
        Unit normals (never complexified).
    speed : (N,) complex
        ``sqrt(x1'^2 + x2'^2)`` at the nodes (principal branch).
    w : (N,) complex
        Quadrature weights including the complex Jacobian.
    t : (N,) float
        Curve parameter of each node.
    cplx : Complexification or None
    truncation : float or None
        Bound on ``|Re t|`` for complexified pieces.
    """

    pieces: tuple
    panel_piece: np.ndarray
    panel_t: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    w: np.ndarray
    t: np.ndarray
    cplx: Complexification | None = None
    truncation: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_panels(self) -> int:
        return len(self.panel_piece)

    @property
    def n_nodes(self) -> int:
        return self.x.shape[1]

    def panel_slice(self, p: int) -> slice:
        return slice(NODES_PER_PANEL * p, NODES_PER_PANEL * (p + 1))

    @property
    def panel_of_node(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_panels), NODES_PER_PANEL)

    @property
    def panel_length(self) -> np.ndarray:
        """``sum |w|`` over each panel (length measured with ``|speed|``)."""
        return np.abs(self.w).reshape(self.n_panels, NODES_PER_PANEL).sum(axis=1)

    @property
    def node_s(self) -> np.ndarray:
        """Reference coordinate in [-1, 1] of each node inside its panel."""
        return np.tile(gauss_legendre(NODES_PER_PANEL).nodes, self.n_panels)

    def eval_ref(self, panels, s):
        """Geometry at reference coordinates ``s`` (broadcast against ``panels[:, None]``).

        Returns
        -------
        x : (2, M, q) complex
        normal : (2, M, q) float
        dw : (M, q) complex
            ``speed * dt/ds``, so that ``int_panel f = int_{-1}^{1} f dw ds``.
        """
        panels = np.asarray(panels, dtype=int)
        s = np.asarray(s, dtype=float)
        s = np.broadcast_to(s, (len(panels),) + s.shape[1:]) if s.ndim == 2 else np.broadcast_to(s, (len(panels), s.shape[-1]))
        a = self.panel_t[panels, 0][:, None]
        b = self.panel_t[panels, 1][:, None]
        tt = 0.5 * (a + b) + 0.5 * (b - a) * s
        x = np.empty((2,) + tt.shape, dtype=complex)
        nrm = np.empty((2,) + tt.shape, dtype=float)
        dw = np.empty(tt.shape, dtype=complex)
        pid = self.panel_piece[panels]
        for ip in np.unique(pid):
            sel = pid == ip
            pc = self.pieces[ip]
            ts = tt[sel]
            x1, x2 = pc.point(ts)
            d1, d2 = pc.deriv(ts)
            n1, n2 = pc.normal(ts)
            x[0][sel], x[1][sel] = x1, x2
            nrm[0][sel], nrm[1][sel] = n1, n2
            dw[sel] = np.sqrt(d1 * d1 + d2 * d2) * 0.5 * (b - a)[sel]
        return x, nrm, dw

    def nodes_on_pieces(self, tags: Sequence[str]) -> np.ndarray:
        """Boolean mask of nodes lying on pieces with the given tags."""
        ok = np.array([pc.tag in tags for pc in self.pieces])
        return np.repeat(ok[self.panel_piece], NODES_PER_PANEL)


def _assemble(pieces, breaks, cplx=None, truncation=None, meta=None) -> Contour:
    """Build a contour from pieces and per-piece panel breakpoints."""
    rule = gauss_legendre(NODES_PER_PANEL)
    pp, pt = [], []
    for ip, br in enumerate(breaks):
        br = np.asarray(br, dtype=float)
        for a, b in zip(br[:-1], br[1:]):
            pp.append(ip)
            pt.append((a, b))
    panel_piece = np.array(pp, dtype=int)
    panel_t = np.array(pt, dtype=float)
    a = panel_t[:, 0:1]
    b = panel_t[:, 1:2]
    tt = (0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[None, :]).ravel()
    n = tt.size
    x = np.empty((2, n), dtype=complex)
    nrm = np.empty((2, n))
    speed = np.empty(n, dtype=complex)
    pid = np.repeat(panel_piece, NODES_PER_PANEL)
    for ip, pc in enumerate(pieces):
        sel = pid == ip
        x1, x2 = pc.point(tt[sel])
        d1, d2 = pc.deriv(tt[sel])
        n1, n2 = pc.normal(tt[sel])
        x[0, sel], x[1, sel] = x1, x2
        nrm[0, sel], nrm[1, sel] = n1, n2
        speed[sel] = np.sqrt(d1 * d1 + d2 * d2)
    w = speed * (0.5 * (b - a) * rule.weights[None, :]).ravel()
    return Contour(tuple(pieces), panel_piece, panel_t, x, nrm, speed, w, tt, cplx, truncation, dict(meta or {}))


def _breakpoints(t0, t1, n_panels, fixed=(), refine_at=(), levels=0):
    """Uniform breakpoints on [t0, t1] with forced points and dyadic grading.

    ``fixed`` points are inserted exactly (the nearest uniform breakpoint is
    moved onto them).  Around each point of ``refine_at`` the two adjacent
    panels are bisected ``levels`` times toward that point.
    """
    br = np.linspace(t0, t1, n_panels + 1)
    for f in fixed:
        if t0 < f < t1:
            i = int(np.argmin(np.abs(br - f)))
            if i in (0, len(br) - 1):
                br = np.sort(np.append(br, f))
            else:
                br[i] = f
    br = np.unique(br)
    for f in refine_at:
        if not (t0 <= f <= t1):
            continue
        if not np.any(np.isclose(br, f, atol=1e-14)):
            br = np.sort(np.append(br, f))
        i = int(np.argmin(np.abs(br - f)))
        new = []
        if i > 0:
            h = br[i] - br[i - 1]
            new += [f - h / 2**j for j in range(1, levels + 1)]
        if i < len(br) - 1:
            h = br[i + 1] - br[i]
            new += [f + h / 2**j for j in range(1, levels + 1)]
        br = np.unique(np.concatenate([br, new]))
    return br


def waveguide_edges(d: float, L: float = 10.0, n_panels: int = 72, k: float = 1.0, eps: float = 1e-17,
                    truncation: float | None = None, cplx: Complexification | None = None,
                    fixed=(), refine_at=(), levels: int = 0, offset: float = 0.0, tags=("top", "bottom"),
                    warn_k: float | None = None) -> Contour:
    """Complexified guide edges ``x2 = offset +- d`` with outward normals ``(0, +-1)``.

    ``n_panels`` counts panels on both edges together (before grading).
    """
    if d <= 0:
        raise ValueError("half-width d must be positive")
    if n_panels < 2 or n_panels % 2:
        raise ValueError("n_panels must be an even integer >= 2")
    cplx = cplx or Complexification(L=L)
    T = cplx.truncation(k, eps) if truncation is None else float(truncation)
    top = line_piece((0.0, offset + d), (1.0, 0.0), -T, T, normal=(0.0, 1.0), cplx=cplx, tag=tags[0])
    bot = line_piece((0.0, offset - d), (1.0, 0.0), -T, T, normal=(0.0, -1.0), cplx=cplx, tag=tags[1])
    br = _breakpoints(-T, T, n_panels // 2, fixed=fixed, refine_at=refine_at, levels=levels)
    _resolution_check(br, warn_k if warn_k is not None else k)
    return _assemble([top, bot], [br, br], cplx, T, {"kind": "waveguide-edges", "d": d, "L": cplx.L})


def junction_line(L: float = 10.0, n_panels: int = 96, k: float = 1.0, eps: float = 1e-17,
                  truncation: float | None = None, cplx: Complexification | None = None,
                  fixed=(), refine_at=(), levels: int = 0, x1: float = 0.0) -> Contour:
    """Complexified line ``x1 = const``, ``x2 = t + i psi(t)``, normal ``(1, 0)``."""
    cplx = cplx or Complexification(L=L)
    T = cplx.truncation(k, eps) if truncation is None else float(truncation)
    pc = line_piece((float(x1), 0.0), (0.0, 1.0), -T, T, normal=(1.0, 0.0), cplx=cplx, tag="junction")
    br = _breakpoints(-T, T, n_panels, fixed=fixed, refine_at=refine_at, levels=levels)
    _resolution_check(br, k)
    return _assemble([pc], [br], cplx, T, {"kind": "junction-line", "L": cplx.L, "x1": float(x1)})


def compact_loop(pieces, n_panels_per_piece, k: float | None = None, refine_ends: int = 0) -> Contour:
    """Closed real contour from pieces (circle or polygon sides).

    ``refine_ends`` dyadically grades each piece toward both of its ends
    (useful at polygon corners).
    """
    if isinstance(n_panels_per_piece, int):
        n_panels_per_piece = [n_panels_per_piece] * len(pieces)
    breaks = []
    for pc, n in zip(pieces, n_panels_per_piece):
        br = _breakpoints(pc.t0, pc.t1, n, refine_at=(pc.t0, pc.t1) if refine_ends else (), levels=refine_ends)
        breaks.append(br)
        if k is not None:
            _resolution_check(br, k)
    return _assemble(list(pieces), breaks, None, None, {"kind": "compact-loop"})


def _arc_piece(a, b, tag="arc"):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = 0.5 * float(np.hypot(*(b - a)))
    if h <= 0:
        raise ValueError("degenerate arc")
    m = 0.5 * (a + b)
    e = (b - a) / (2 * h)
    nrm = np.array([e[1], -e[0]])

    def point(u):
        c = np.cos(np.asarray(u, dtype=float))
        return (m[0] + c * h * e[0]).astype(complex), (m[1] + c * h * e[1]).astype(complex)

    def deriv(u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape, h * e[0], dtype=complex), np.full(u.shape, h * e[1], dtype=complex)

    def normal(u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape, nrm[0]), np.full(u.shape, nrm[1])

    return Piece(point, deriv, normal, 0.0, math.pi, tag), m, h, e


def open_arcs(segments, n_panels: int = 4, refine_at=(), levels: int = 0) -> Contour:
    """Union of straight open arcs, each in its cosine variable.

    Each piece is parameterized by ``u in [0, pi]`` via
    ``x(u) = m + cos(u) h e`` (``m`` midpoint, ``h`` half-length, ``e`` unit
    direction from ``a`` to ``b``), so ``u = 0`` maps to ``b``.  The weights are ``h du``: they already absorb the ``1/sqrt(1 - t^2)``
    factor of the substitution ``t = cos u``, so densities on this contour are
    the scaled densities ``rho * sqrt(1 - t^2)``.

    ``refine_at`` lists physical points; each one lying on an arc gets
    ``levels`` dyadic refinements at its parameter.
    """
    pieces, breaks = [], []
    for i, (a, b) in enumerate(segments):
        pc, m, h, e = _arc_piece(a, b, f"arc{i}")
        us = []
        for p in refine_at:
            p = np.asarray(p, dtype=float)
            t = float(np.dot(p - m, e)) / h
            off = float(abs(e[0] * (p - m)[1] - e[1] * (p - m)[0]))
            if off < 1e-12 * h and -1.0 < t < 1.0:
                us.append(math.acos(t))
        pieces.append(pc)
        breaks.append(_breakpoints(0.0, math.pi, n_panels, fixed=us, refine_at=us if levels else (), levels=levels))
    meta = {"kind": "open-arc", "segments": [[list(map(float, a)), list(map(float, b))] for a, b in segments]}
    return _assemble(pieces, breaks, None, None, meta)


def open_arc(a, b, n_panels: int = 4, refine_at=(), levels: int = 0) -> Contour:
    """Single straight open arc from ``a`` to ``b`` (see :func:`open_arcs`)."""
    c = open_arcs([(a, b)], n_panels, refine_at, levels)
    c.meta.update({"a": list(map(float, a)), "b": list(map(float, b))})
    return c


def _resolution_check(br, k):
    if k is None or k <= 0:
        return
    h = np.max(np.diff(br))
    if h > math.pi / k:  # fewer than 2 panels per wavelength 2 pi / k
        warnings.warn("contour resolution below 2 panels per wavelength", ContourWarning, stacklevel=3)


def build_contour(kind: str, params: dict, panels_per_unit: float | None = None, **kw) -> Contour:
    """Front door dispatching on ``kind``.

    Parameters
    ----------
    kind : {'waveguide-edges', 'junction-line', 'compact-loop', 'open-arc', 'dirichlet-walls'}
    params : dict
        Geometry parameters: ``d``, ``L``, ``k`` for the line kinds,
        ``center``/``radius`` (circle) or ``vertices`` (polygon) for loops,
        ``a``/``b`` for arcs.
    panels_per_unit : float, optional
        Panel density along the real parameter; overrides ``n_panels``.
    """
    if kind in ("waveguide-edges", "dirichlet-walls"):
        d = float(params["d"])
        L = float(params.get("L", 10.0))
        k = float(params.get("k", 1.0))
        cplx = Complexification(L=L)
        T = params.get("truncation") or cplx.truncation(k, params.get("eps", 1e-17))
        n = params.get("n_panels", 72)
        if panels_per_unit is not None:
            n = 2 * max(1, int(math.ceil(2 * T * panels_per_unit)))
        c = waveguide_edges(d, L, n, k=k, truncation=T, cplx=cplx, **kw)
        c.meta["kind"] = kind
        return c
    if kind == "junction-line":
        L = float(params.get("L", 10.0))
        k = float(params.get("k", 1.0))
        cplx = Complexification(L=L)
        T = params.get("truncation") or cplx.truncation(k, params.get("eps", 1e-17))
        n = params.get("n_panels", 96)
        if panels_per_unit is not None:
            n = max(1, int(math.ceil(2 * T * panels_per_unit)))
        return junction_line(L, n, k=k, truncation=T, cplx=cplx, **kw)
    if kind == "compact-loop":
        if "radius" in params:
            pcs = [circle_piece(params.get("center", (0.0, 0.0)), params["radius"])]
            per = params.get("n_panels", 16)
            if panels_per_unit is not None:
                per = max(2, int(math.ceil(2 * math.pi * params["radius"] * panels_per_unit)))
        elif "vertices" in params:
            pcs = polygon_pieces(params["vertices"])
            per = params.get("n_panels", 4)
            if panels_per_unit is not None:
                per = [max(1, int(math.ceil((pc.t1 - pc.t0) * panels_per_unit))) for pc in pcs]
        else:
            raise ValueError("compact-loop needs 'radius' or 'vertices'")
        return compact_loop(pcs, per, k=params.get("k"), **kw)
    if kind == "open-arc":
        n = params.get("n_panels", 4)
        return open_arc(params["a"], params["b"], n)
    raise ValueError(f"unknown contour kind {kind!r}")


def write_contour_csv(contour: Contour, path) -> None:
    """Dump nodes as CSV ``panel,node,re_x1,im_x1,re_x2,im_x2,re_w,im_w,n1,n2``."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["panel", "node", "re_x1", "im_x1", "re_x2", "im_x2", "re_w", "im_w", "n1", "n2"])
        for i in range(contour.n_nodes):
            p, j = divmod(i, NODES_PER_PANEL)
            x1, x2, w = contour.x[0, i], contour.x[1, i], contour.w[i]
            wr.writerow([p, j] + [repr(float(v)) for v in
                                  (x1.real, x1.imag, x2.real, x2.imag, w.real, w.imag,
                                   contour.normal[0, i], contour.normal[1, i])])
