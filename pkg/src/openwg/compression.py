"""
Compressed evaluation of the outgoing part ``G_out`` of a bi-infinite
waveguide Green's function.

Points live on (or near) the line ``x1 = 0``.  The line splits into a *near
window* ``|x2 - c| <= d + 2 pi/k`` around the guide and two *far boxes*
``B+- = [-1, 1] x (d + 2 pi/k <= +-(x2 - c) <= 100)``.  Four regimes:

far-far
    ``G_out(x; y) = e(x)[J] . M . r(y)[I]`` with ``M = T K^-1 X``.  ``e`` is
    the row mapping densities to the field at ``x``, ``r`` the jump data of
    a point source at ``y``, ``J``/``T`` the outgoing skeleton (column ID of
    the field map on a proxy curve) and ``I``/``X`` the incoming skeleton
    (row ID of the jump data for proxy sources).
far source, near target
    piecewise Chebyshev tables of ``e(0, x2) K^-1 X`` contracted with ``r(y)[I]``.
near source, far target
    tables of ``T K^-1 r(0, y2)`` contracted with ``e(x)[J]``.
near-near
    tensor Chebyshev tables of ``G_out(0, x2; 0, y2)``.

Derivatives are selected by ``(ax, ay)``: number of ``d/dx1`` and ``d/dy1``.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as _cheb

from .kernels import HelmholtzKernel
from .transmission import (TransmissionSystem, WaveguideGreens, field_matrices, solve_transmission)

__all__ = [
    "SkeletonFactory",
    "CompressionError",
    "Skeleton",
    "ChebTable",
    "CompressedGreens",
    "proxy_boxes",
    "build_skeletons",
    "build_cheb_tables",
    "build_compressed",
    "compressed_eval",
    "window_partition",
    "save_compressed",
    "load_compressed",
    "cache_key",
    "CACHE_MAGIC",
]

CACHE_MAGIC = b"OWGC1"
_CACHE_VERSION = 1
BOX_TOP = 100.0
BOX_HALF_WIDTH = 1.0
DERIVS = ((0, 0), (1, 0), (0, 1), (1, 1))


class CompressionError(RuntimeError):
    """Skeleton or table construction failed, or a point is outside all regions."""


# ---------------------------------------------------------------------------
# geometry of the regions


def proxy_boxes(d: float, k: float, center: float = 0.0, n_per_segment: int = 300,
                top: float = BOX_TOP, half_width: float = BOX_HALF_WIDTH):
    """Gauss-Legendre points on the boundaries of the far boxes ``B+`` and ``B-``.

    Returns ``(points (2, P), outward normals (2, P))``.
    """
    lo = d + 2.0 * np.pi / k
    if top <= lo:
        raise CompressionError("far box is empty (guide too wide for the proxy geometry)")
    s, _ = np.polynomial.legendre.leggauss(n_per_segment)
    u = 0.5 * (s + 1.0)
    pts, nrm = [], []
    for sign in (1.0, -1.0):
        a, b = center + sign * lo, center + sign * top
        y0, y1 = min(a, b), max(a, b)
        corners = [(-half_width, y0), (half_width, y0), (half_width, y1), (-half_width, y1)]
        for i in range(4):
            p0 = np.array(corners[i])
            p1 = np.array(corners[(i + 1) % 4])
            seg = p0[:, None] + (p1 - p0)[:, None] * u[None, :]
            tang = (p1 - p0) / np.linalg.norm(p1 - p0)
            n = np.array([tang[1], -tang[0]])  # counter-clockwise loop: outward is right of tangent
            pts.append(seg)
            nrm.append(np.repeat(n[:, None], n_per_segment, axis=1))
    return np.concatenate(pts, axis=1), np.concatenate(nrm, axis=1)


def window_partition(d: float, k: float, k1: float, center: float = 0.0, max_phase: float = 8.0):
    """Breakpoints of the near window split at the guide edges.

    Each constant-``q`` region is cut into equal pieces so that
    ``k_local * length <= max_phase``.
    """
    lo = d + 2.0 * np.pi / k
    regions = [(-lo, -d, k), (-d, d, k1), (d, lo, k)]
    br = [center - lo]
    for a, b, kk in regions:
        m = max(1, int(np.ceil(kk * (b - a) / max_phase)))
        br.extend(center + a + (b - a) * np.arange(1, m + 1) / m)
    return np.array(br)


# ---------------------------------------------------------------------------
# skeletons


@dataclass
class Skeleton:
    """Interpolative decomposition of the far interactions.

    ``kind='outgoing'``: ``index`` selects columns ``J`` of the field map
    (``[mu; rho]`` ordering) and ``matrix`` is ``T`` (``|J| x 2n``).
    ``kind='incoming'``: ``index`` selects rows ``I`` of the jump data
    (``[value; normal derivative]`` ordering) and ``matrix`` is ``X``
    (``2n x |I|``).
    """

    kind: str
    index: np.ndarray
    matrix: np.ndarray
    tol: float
    proxy_error: float = np.nan

    @property
    def rank(self) -> int:
        return int(len(self.index))


@dataclass
class _PivotedID:
    """Pivoted QR of a sketch, truncatable at any tolerance."""

    r: np.ndarray
    piv: np.ndarray
    ncols: int

    def truncate(self, tol: float):
        diag = np.abs(np.diag(self.r))
        if diag.size == 0 or diag[0] == 0:
            return np.zeros(0, dtype=int), np.zeros((0, self.ncols), dtype=complex)
        rank = int(np.sum(diag > tol * diag[0]))
        r11 = self.r[:rank, :rank]
        r12 = self.r[:rank, rank:]
        t = sla.solve_triangular(r11, r12) if rank < self.ncols else np.zeros((rank, 0), complex)
        full = np.zeros((rank, self.ncols), dtype=complex)
        full[:, self.piv[:rank]] = np.eye(rank)
        full[:, self.piv[rank:]] = t
        return self.piv[:rank].copy(), full


def _column_id(make_blocks, ncols: int, tol_min: float, seed: int = 0, size: int = 288) -> _PivotedID:
    """Column ID of the row-stacked blocks yielded by ``make_blocks()``.

    A Gaussian sketch ``Omega A`` is accumulated block by block; its size
    grows until the detected rank at ``tol_min`` leaves a margin.
    """
    rng = np.random.default_rng(seed)
    size = min(size, ncols)
    while True:
        y = np.zeros((size, ncols), dtype=complex)
        nrows = 0
        for blk in make_blocks():
            om = rng.standard_normal((size, blk.shape[0])) + 1j * rng.standard_normal((size, blk.shape[0]))
            y += om @ blk
            nrows += blk.shape[0]
        _, r, piv = sla.qr(y, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > tol_min * diag[0])) if diag.size and diag[0] > 0 else 0
        if rank + 24 <= size or size >= min(nrows, ncols):
            return _PivotedID(r, piv, ncols)
        size = min(2 * size, nrows, ncols)


def _outgoing_blocks(system: TransmissionSystem, pts, nrm, chunk: int = 600):
    """Field map (value and scaled normal derivative rows) on the proxy curve."""
    c = system.problem.contour
    k = system.problem.k
    kern = HelmholtzKernel(("D", "S", "Dp", "Sp"), k)
    for i0 in range(0, pts.shape[1], chunk):
        p = pts[:, i0:i0 + chunk].astype(complex)
        v = kern(p[:, :, None], nrm[:, i0:i0 + chunk, None], c.x[:, None, :], c.normal[:, None, :]) * c.w
        yield np.block([[v[0], v[1]], [v[2] / k, v[3] / k]])


def _incoming_blocks(system: TransmissionSystem, pts, nrm, chunk: int = 600):
    """Transposed jump-data map for proxy monopoles and dipoles, both wavenumbers."""
    c = system.problem.contour
    for kk in (system.problem.k, system.problem.k1):
        kern = HelmholtzKernel(("S", "Sp", "D", "Dp"), kk)
        for i0 in range(0, pts.shape[1], chunk):
            p = pts[:, i0:i0 + chunk].astype(complex)
            v = kern(c.x[:, :, None], c.normal[:, :, None], p[:, None, :], nrm[:, None, i0:i0 + chunk])
            # rows: nodes (value rows then normal-derivative rows); columns: monopoles then dipoles
            a = np.block([[v[0], v[2] / kk], [v[1], v[3] / kk]])
            yield a.T


def _relative_error(blocks, apply):
    num = 0.0
    den = 0.0
    for b in blocks:
        num = max(num, float(np.abs(b - apply(b)).max(initial=0.0)))
        den = max(den, float(np.abs(b).max(initial=0.0)))
    return num / den if den > 0 else 0.0


class SkeletonFactory:
    """Build skeletons for several tolerances from one sketch per side.

    Proxy matrices are streamed in chunks and never stored; ``validate``
    recomputes them to measure the interpolation error on the proxy curve.
    """

    def __init__(self, system: TransmissionSystem, proxy=None, tol_min: float = 1e-12, seed: int = 0):
        prob = system.problem
        d = prob.meta.get("d")
        if d is None:
            raise CompressionError("compression needs a bi-infinite guide problem")
        self.system = system
        self.proxy = proxy if proxy is not None else proxy_boxes(d, prob.k, prob.meta.get("center", 0.0))
        n2 = 2 * system.n
        self._out = _column_id(lambda: _outgoing_blocks(system, *self.proxy), n2, tol_min, seed)
        self._in = _column_id(lambda: _incoming_blocks(system, *self.proxy), n2, tol_min, seed + 1)

    def build(self, tol: float, validate: bool = False):
        if not (1e-14 <= tol <= 1e-1):
            raise ValueError("skeleton tolerance must lie in [1e-14, 1e-1]")
        j, t = self._out.truncate(tol)
        i, xt = self._in.truncate(tol)
        if len(j) >= 2 * self.system.n or len(i) >= 2 * self.system.n:
            raise CompressionError("skeleton rank reached the node count (degenerate proxy)")
        out = Skeleton("outgoing", j, t, tol)
        inc = Skeleton("incoming", i, xt.T.copy(), tol)
        if validate:
            out.proxy_error = _relative_error(_outgoing_blocks(self.system, *self.proxy), lambda b: b[:, j] @ t)
            inc.proxy_error = _relative_error(_incoming_blocks(self.system, *self.proxy), lambda b: b[:, i] @ xt)
        return out, inc


def build_skeletons(system: TransmissionSystem, proxy=None, tolerance: float = 1e-10, seed: int = 0,
                    validate: bool = False):
    """Outgoing and incoming skeletons of a factored guide system.

    ``proxy`` is ``(points, normals)``; default :func:`proxy_boxes`.
    """
    if not (1e-14 <= tolerance <= 1e-1):
        raise ValueError("skeleton tolerance must lie in [1e-14, 1e-1]")
    return SkeletonFactory(system, proxy, tol_min=tolerance, seed=seed).build(tolerance, validate)


# ---------------------------------------------------------------------------
# Chebyshev tables


def _cheb_nodes(p: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(p) + 0.5) / p)[::-1]


def _cheb_fit_matrix(p: int) -> np.ndarray:
    """Values at first-kind nodes -> coefficients."""
    return np.linalg.inv(_cheb.chebvander(_cheb_nodes(p), p - 1))


@dataclass
class ChebTable:
    """Piecewise Chebyshev expansion over a partition of the near window.

    ``coef[j]`` holds coefficients on interval ``j``; for one-variable tables
    the shape is ``(p, m)`` (``m`` stacked functions), for two-variable
    tables ``coef[jx][jy]`` has shape ``(p, p)``.
    """

    breaks: np.ndarray
    order: int
    coef: np.ndarray
    decay: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        # C order, so a table and its cached copy evaluate bit for bit alike
        self.breaks = np.ascontiguousarray(self.breaks)
        self.coef = np.ascontiguousarray(self.coef)
        self.decay = np.ascontiguousarray(self.decay)

    def interval(self, x2) -> np.ndarray:
        x = np.real(np.asarray(x2))
        j = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(j, 0, len(self.breaks) - 2)

    def basis(self, x2, j) -> np.ndarray:
        a = self.breaks[j]
        b = self.breaks[j + 1]
        u = (2.0 * np.asarray(x2) - (a + b)) / (b - a)
        return _cheb.chebvander(u, self.order - 1)

    def sample_points(self) -> np.ndarray:
        s = _cheb_nodes(self.order)
        a = self.breaks[:-1, None]
        b = self.breaks[1:, None]
        return 0.5 * (a + b) + 0.5 * (b - a) * s[None, :]


def _tail_decay(coef: np.ndarray) -> float:
    """Ratio of the last three coefficients to the largest one (per table)."""
    c = np.abs(coef)
    big = c.max(initial=0.0)
    if big == 0:
        return 0.0
    return float(c[-3:].max() / big)


def _line_points(x2):
    x2 = np.asarray(x2, dtype=float).ravel()
    return np.stack([np.zeros_like(x2), x2]).astype(complex)


def _field_rows(system, x, ax):
    """Rows ``e(x)`` mapping ``[mu; rho]`` to the field (``ax`` d/dx1)."""
    m = field_matrices(system.problem, x, "x1" if ax else "value")
    return np.concatenate([m[0], m[1]], axis=1)


def _densities(system, y, ay):
    """Columns ``K^-1 r(y)`` stacked as ``[mu; rho]``."""
    dens = WaveguideGreens(system).densities(y, ay)
    return np.concatenate([dens.mu, dens.rho], axis=0)


def build_cheb_tables(system: TransmissionSystem, skeletons, order: int = 20, order_near: int = 60,
                      breaks=None, tol_report: float = 1e-8):
    """Far-near, near-far and near-near tables.

    Returns a dict with keys ``far_near`` / ``near_far`` (dicts over the
    derivative on the tabulated variable) and ``near_near`` (over ``(ax,
    ay)``), the shared ``breaks`` and ``KinvX``.
    """
    for p in (order, order_near):
        if not (4 <= p <= 80):
            raise ValueError("Chebyshev order must lie in [4, 80]")
    prob = system.problem
    d = prob.meta["d"]
    center = prob.meta.get("center", 0.0)
    br = window_partition(d, prob.k, prob.k1, center) if breaks is None else np.asarray(breaks, float)
    out, inc = skeletons
    n = system.n
    dens_x = solve_transmission(system, inc.matrix[:n], inc.matrix[n:])
    kinv_x = np.concatenate([dens_x.mu, dens_x.rho], axis=0)
    nint = len(br) - 1
    fit = _cheb_fit_matrix(order)
    pts = ChebTable(br, order, None).sample_points()  # (nint, p)
    far_near, near_far = {}, {}
    for a in (0, 1):
        rows = _field_rows(system, _line_points(pts), a)  # (nint*p, 2n)
        vals = (rows @ kinv_x).reshape(nint, order, -1)
        coef = np.einsum("lq,jqm->jlm", fit, vals)
        far_near[a] = ChebTable(br, order, coef, np.array([_tail_decay(c) for c in coef]))
        cols = _densities(system, _line_points(pts), a)  # (2n, nint*p)
        vals = (out.matrix @ cols).T.reshape(nint, order, -1)
        coef = np.einsum("lq,jqm->jlm", fit, vals)
        near_far[a] = ChebTable(br, order, coef, np.array([_tail_decay(c) for c in coef]))
    fitn = _cheb_fit_matrix(order_near)
    ptn = ChebTable(br, order_near, None).sample_points().ravel()
    rows = {a: _field_rows(system, _line_points(ptn), a) for a in (0, 1)}
    cols = {a: _densities(system, _line_points(ptn), a) for a in (0, 1)}
    near_near = {}
    for ax, ay in DERIVS:
        g = (rows[ax] @ cols[ay]).reshape(nint, order_near, nint, order_near)
        coef = np.einsum("lq,iqjr,mr->ijlm", fitn, g, fitn)
        decay = np.array([[_tail_decay(coef[i, j]) for j in range(nint)] for i in range(nint)])
        near_near[(ax, ay)] = ChebTable(br, order_near, coef, decay)
    return {"far_near": far_near, "near_far": near_far, "near_near": near_near, "breaks": br,
            "kinv_x": kinv_x}


# ---------------------------------------------------------------------------
# compressed evaluator


@dataclass
class CompressedGreens:
    """Self-contained compressed ``G_out`` evaluator.

    Stores the skeleton nodes (positions, normals, weights), the product
    ``M = T K^-1 X`` and the Chebyshev tables; evaluation never touches the
    full interface discretization.
    """

    k: float
    k1: float
    d: float
    center: float
    tol: float
    out_index: np.ndarray
    out_x: np.ndarray
    out_normal: np.ndarray
    out_w: np.ndarray
    in_index: np.ndarray
    in_x: np.ndarray
    in_normal: np.ndarray
    M: np.ndarray
    far_near: dict
    near_far: dict
    near_near: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("out_x", "out_normal", "out_w", "in_x", "in_normal", "M"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name)))
        self.out_index = np.ascontiguousarray(self.out_index, dtype=np.int64)
        self.in_index = np.ascontiguousarray(self.in_index, dtype=np.int64)

    # --- regions -----------------------------------------------------------
    @property
    def window(self) -> float:
        return self.d + 2.0 * np.pi / self.k

    def wavenumber(self, x) -> np.ndarray:
        x = np.asarray(x)
        return np.where(np.abs(np.real(x[1]) - self.center) < self.d, self.k1, self.k)

    def classify(self, x) -> np.ndarray:
        """0 = near (on the line inside the window), 1 = far box, -1 = unsupported."""
        x = np.asarray(x, dtype=complex).reshape(2, -1)
        h = np.abs(np.real(x[1]) - self.center)
        on_line = np.abs(x[0]) <= 1e-12
        near = on_line & (h <= self.window)
        far = (np.abs(np.real(x[0])) <= BOX_HALF_WIDTH) & (h >= self.window) & (h <= BOX_TOP) & ~near
        out = np.full(x.shape[1], -1)
        out[near] = 0
        out[far] = 1
        return out

    # --- skeleton rows/columns ----------------------------------------------
    def _e(self, x, ax):
        """``e(x)[J]`` for far targets: (nt, |J|)."""
        n_out = len(self.out_index)
        kinds = ("Dg1", "Sg1") if ax else ("D", "S")
        kern = HelmholtzKernel(kinds, self.k)
        z = np.zeros((2, 1, 1))
        v = kern(x[:, :, None], z, self.out_x[:, None, :], self.out_normal[:, None, :])
        is_rho = self.meta["out_is_rho"]
        rows = np.where(is_rho[None, :], v[1], v[0]) * self.out_w[None, :]
        return rows.reshape(x.shape[1], n_out)

    def _r(self, y, ay):
        """``r(y)[I]`` for far sources: (|I|, ns)."""
        kinds = ("D", "Dp") if ay else ("S", "Sp")
        ny = np.zeros((2, 1, 1))
        if ay:
            ny = np.array([1.0, 0.0]).reshape(2, 1, 1)
        kern = HelmholtzKernel(kinds, self.k, self.k1)
        v = kern(self.in_x[:, :, None], self.in_normal[:, :, None], y[:, None, :], ny)
        is_dn = self.meta["in_is_dn"]
        return np.where(is_dn[:, None], v[1], v[0])

    def _table_rows(self, table: ChebTable, x2):
        """Contract one-variable tables at points ``x2``: (npts, m)."""
        j = table.interval(x2)
        out = np.empty((len(x2), table.coef.shape[-1]), dtype=complex)
        for jj in np.unique(j):
            sel = j == jj
            out[sel] = table.basis(x2[sel], jj) @ table.coef[jj]
        return out

    def _near_near(self, table: ChebTable, x2, y2):
        jx = table.interval(x2)
        jy = table.interval(y2)
        out = np.empty((len(x2), len(y2)), dtype=complex)
        for a in np.unique(jx):
            sx = jx == a
            bx = table.basis(x2[sx], a)
            for b in np.unique(jy):
                sy = jy == b
                by = table.basis(y2[sy], b)
                out[np.ix_(sx, sy)] = bx @ table.coef[a, b] @ by.T
        return out

    def matrix(self, x, y, deriv=(0, 0)):
        """``G_out`` (or derivative) for all target/source pairs: (nx, ny)."""
        ax, ay = deriv
        if (ax, ay) not in DERIVS:
            raise ValueError("derivative selector must be one of (0,0), (1,0), (0,1), (1,1)")
        x = np.asarray(x, dtype=complex).reshape(2, -1)
        y = np.asarray(y, dtype=complex).reshape(2, -1)
        cx = self.classify(x)
        cy = self.classify(y)
        if np.any(cx < 0) or np.any(cy < 0):
            raise CompressionError("point outside the near window and the far boxes")
        out = np.zeros((x.shape[1], y.shape[1]), dtype=complex)
        fx, nx_ = cx == 1, cx == 0
        fy, ny_ = cy == 1, cy == 0
        if len(self.in_index) and len(self.out_index):
            if fx.any() and fy.any():
                out[np.ix_(fx, fy)] = self._e(x[:, fx], ax) @ self.M @ self._r(y[:, fy], ay)
            if nx_.any() and fy.any():
                out[np.ix_(nx_, fy)] = self._table_rows(self.far_near[ax], x[1, nx_]) @ self._r(y[:, fy], ay)
            if fx.any() and ny_.any():
                out[np.ix_(fx, ny_)] = self._e(x[:, fx], ax) @ self._table_rows(self.near_far[ay], y[1, ny_]).T
        if nx_.any() and ny_.any():
            out[np.ix_(nx_, ny_)] = self._near_near(self.near_near[(ax, ay)], x[1, nx_], y[1, ny_])
        return out

    def out_matrix(self, x, y, deriv=(0, 0)):
        return self.matrix(x, y, deriv)

    def __call__(self, x, y, deriv=(0, 0)) -> complex:
        return complex(self.matrix(np.reshape(x, (2, 1)), np.reshape(y, (2, 1)), deriv)[0, 0])

    @property
    def sizes(self) -> dict:
        return {"outgoing": int(len(self.out_index)), "incoming": int(len(self.in_index))}


def build_compressed(system: TransmissionSystem, tolerance: float = 1e-10, order: int = 20,
                     order_near: int = 60, skeletons=None, breaks=None) -> CompressedGreens:
    """Skeletons, sandwich product and tables for one guide."""
    prob = system.problem
    if skeletons is None:
        skeletons = build_skeletons(system, tolerance=tolerance)
    out, inc = skeletons
    tables = build_cheb_tables(system, skeletons, order, order_near, breaks)
    c = prob.contour
    n = system.n
    M = out.matrix @ tables["kinv_x"]
    j = out.index
    i = inc.index
    meta = {
        "out_is_rho": j >= n,
        "in_is_dn": i >= n,
        "proxy_error": (out.proxy_error, inc.proxy_error),
        "L": prob.meta.get("L"),
        "n_nodes": n,
        "order": order,
        "order_near": order_near,
        "cond": system.cond,
    }
    return CompressedGreens(
        k=prob.k, k1=prob.k1, d=prob.meta["d"], center=prob.meta.get("center", 0.0), tol=out.tol,
        out_index=j, out_x=c.x[:, j % n], out_normal=c.normal[:, j % n], out_w=c.w[j % n],
        in_index=i, in_x=c.x[:, i % n], in_normal=c.normal[:, i % n], M=M,
        far_near=tables["far_near"], near_far=tables["near_far"], near_near=tables["near_near"], meta=meta)


def compressed_eval(cg: CompressedGreens, x, y, derivative=(0, 0)) -> complex:
    """Evaluate ``G_out(x; y)`` (or a derivative) from the compressed form."""
    return cg(x, y, derivative)


# ---------------------------------------------------------------------------
# binary cache


def cache_key(k, k1, d, L, tolerance, order, order_near=None, extra=None) -> str:
    """Hex digest identifying a compressed representation.

    The package version and cache format are part of the key, so entries
    written by other releases are never reused.
    """
    from . import __version__

    payload = json.dumps([repr(float(v)) for v in (k, k1, d, L, tolerance, order, order_near or 0)]
                         + [extra or "", __version__, _CACHE_VERSION])
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def _table_to_arrays(name, t: ChebTable):
    return {f"{name}.breaks": t.breaks, f"{name}.coef": t.coef, f"{name}.decay": t.decay,
            f"{name}.order": np.array([t.order])}


def save_compressed(cg: CompressedGreens, path) -> None:
    """Write the ``OWGC1`` binary cache.

    Layout: magic, ``uint32`` version, ``uint64`` header length, JSON header
    (scalars and the section table), then little-endian sections.  Complex
    sections are stored as interleaved ``float64`` pairs, index sections as
    ``int64``.
    """
    arrays = {
        "out_index": cg.out_index, "out_x": cg.out_x, "out_normal": cg.out_normal, "out_w": cg.out_w,
        "in_index": cg.in_index, "in_x": cg.in_x, "in_normal": cg.in_normal, "M": cg.M,
        "out_is_rho": cg.meta["out_is_rho"], "in_is_dn": cg.meta["in_is_dn"],
    }
    for a, t in cg.far_near.items():
        arrays.update(_table_to_arrays(f"far_near.{a}", t))
    for a, t in cg.near_far.items():
        arrays.update(_table_to_arrays(f"near_far.{a}", t))
    for (a, b), t in cg.near_near.items():
        arrays.update(_table_to_arrays(f"near_near.{a}{b}", t))
    sections = []
    body = io.BytesIO()
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            kind, data = "complex", np.ascontiguousarray(arr, dtype="<c16")
        elif arr.dtype.kind in "iub":
            kind, data = "int", np.ascontiguousarray(arr, dtype="<i8")
        else:
            kind, data = "float", np.ascontiguousarray(arr, dtype="<f8")
        sections.append({"name": name, "kind": kind, "shape": list(arr.shape), "offset": body.tell()})
        body.write(data.tobytes())
    scalars = {"k": cg.k, "k1": cg.k1, "d": cg.d, "center": cg.center, "tol": cg.tol}
    meta = {key: v for key, v in cg.meta.items() if isinstance(v, (int, float, str)) or v is None}
    meta["proxy_error"] = [float(v) for v in cg.meta.get("proxy_error", (np.nan, np.nan))]
    header = json.dumps({"scalars": scalars, "meta": meta, "sections": sections}).encode()
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQ", _CACHE_VERSION, len(header)))
        fh.write(header)
        fh.write(body.getvalue())


def load_compressed(path) -> CompressedGreens:
    """Read a cache written by :func:`save_compressed`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:5] != CACHE_MAGIC:
        raise CompressionError("not an OWGC1 cache file")
    version, hlen = struct.unpack("<IQ", raw[5:17])
    if version != _CACHE_VERSION:
        raise CompressionError(f"unsupported cache version {version}")
    header = json.loads(raw[17:17 + hlen].decode())
    base = 17 + hlen
    dt = {"complex": "<c16", "int": "<i8", "float": "<f8"}
    arrs = {}
    for s in header["sections"]:
        dtype = np.dtype(dt[s["kind"]])
        count = int(np.prod(s["shape"])) if s["shape"] else 1
        arrs[s["name"]] = np.frombuffer(raw, dtype=dtype, count=count,
                                        offset=base + s["offset"]).reshape(s["shape"]).copy()

    def table(name):
        return ChebTable(arrs[f"{name}.breaks"], int(arrs[f"{name}.order"][0]), arrs[f"{name}.coef"],
                         arrs[f"{name}.decay"])

    sc = header["scalars"]
    meta = dict(header["meta"])
    meta["proxy_error"] = tuple(meta.get("proxy_error", (np.nan, np.nan)))
    meta["out_is_rho"] = arrs["out_is_rho"].astype(bool)
    meta["in_is_dn"] = arrs["in_is_dn"].astype(bool)
    return CompressedGreens(
        k=sc["k"], k1=sc["k1"], d=sc["d"], center=sc["center"], tol=sc["tol"],
        out_index=arrs["out_index"], out_x=arrs["out_x"], out_normal=arrs["out_normal"], out_w=arrs["out_w"],
        in_index=arrs["in_index"], in_x=arrs["in_x"], in_normal=arrs["in_normal"], M=arrs["M"],
        far_near={a: table(f"far_near.{a}") for a in (0, 1)},
        near_far={a: table(f"near_far.{a}") for a in (0, 1)},
        near_near={(a, b): table(f"near_near.{a}{b}") for a, b in DERIVS}, meta=meta)
