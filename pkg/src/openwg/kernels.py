"""
Analytically continued Helmholtz kernel and layer potentials.

``G_k(x; y) = (i/4) H_0^(1)(k r)``, ``r = sqrt((x1-y1)^2 + (x2-y2)^2)`` with
the principal square root, which is valid on complexified contours because
there ``Im r^2 >= 0``.

Kernel components (``n_x`` target normal, ``n_y`` source normal):

=========  =====================================
``S``      ``G``
``D``      ``n_y . grad_y G``
``Sp``     ``n_x . grad_x G``
``Dp``     ``n_x . grad_x (n_y . grad_y G)``
``Sg1``    ``d/dx1 G`` (``Sg2`` likewise)
``Dg1``    ``d/dx1 (n_y . grad_y G)`` (``Dg2``)
``Sy1``    ``d/dy1 G``
``Dy1``    ``d/dy1 (n_y . grad_y G)``
``Sg1y1``  ``d2/dx1 dy1 G``
=========  =====================================

All of them are assembled from ``H0``, ``P = k H1(kr)`` and ``Q = k^2 H0``.
For *difference* kernels ``K_k - K_k1`` the common ``-2i/(pi r)`` part of
``P`` is removed analytically so the near-diagonal entries do not suffer
from cancellation.
"""

from __future__ import annotations

import numpy as np
from scipy.special import hankel1 as hankel1_fast

from . import quadrature as quad
from .specfun import hankel01, hankel1

__all__ = [
    "HelmholtzKernel",
    "greens",
    "greens_grad",
    "kernel_eval",
    "layer_matrix",
    "layer_potential",
    "KINDS",
]

KINDS = ("S", "D", "Sp", "Dp", "Sg1", "Sg2", "Dg1", "Dg2", "Sy1", "Dy1", "Sg1y1")
_NEEDS_HESS = {"Dp", "Dg1", "Dg2", "Dy1", "Sg1y1"}
_SMALL = 0.5


def _h1_regular(z):
    """``H1(z) + 2i/(pi z)``, accurate also for small ``|z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.array(hankel1_fast(1, z) + 2j / (np.pi * z), dtype=complex)
    small = np.abs(z) < _SMALL
    if np.any(small):
        zs = z[small]
        h = zs / 2.0
        h2 = -h * h
        lg = np.log(h) + 0.57721566490153286061
        term = h.copy()
        j = term.copy()
        ysum = term.copy()
        harm = 0.0
        for m in range(1, 14):
            term = term * h2 / (m * (m + 1))
            harm += 1.0 / m
            j = j + term
            ysum = ysum + (2.0 * harm + 1.0 / (m + 1)) * term
        out[small] = j + 1j * ((2.0 / np.pi) * lg * j - ysum / np.pi)
    return out


class HelmholtzKernel:
    """Callable kernel (see :mod:`openwg.quadrature`) for a set of components.

    Parameters
    ----------
    kinds : sequence of str
        Components to return, stacked along the first axis.
    k : float
        Wavenumber.
    k_minus : float, optional
        If given, the kernel is ``K_k - K_{k_minus}``.
    """

    def __init__(self, kinds, k: float, k_minus: float | None = None):
        kinds = tuple(kinds)
        bad = [s for s in kinds if s not in KINDS]
        if bad:
            raise ValueError(f"unknown kernel kinds {bad}")
        if k <= 0 or (k_minus is not None and k_minus <= 0):
            raise ValueError("wavenumbers must be positive")
        self.kinds = kinds
        self.k = float(k)
        self.k_minus = None if k_minus is None else float(k_minus)
        self.m = len(kinds)
        self.zero = self.k_minus is not None and self.k_minus == self.k

    def __call__(self, x, nx, y, ny):
        d1 = x[0] - y[0]
        d2 = x[1] - y[1]
        shape = np.broadcast_shapes(d1.shape, d2.shape, np.shape(nx[0]), np.shape(ny[0]))
        if self.zero:
            return np.zeros((self.m,) + shape, dtype=complex)
        r2 = d1 * d1 + d2 * d2
        r = np.sqrt(r2)
        hess = any(s in _NEEDS_HESS for s in self.kinds)
        if self.k_minus is None:
            h0, h1 = hankel01(self.k * r)
            g = 0.25j * h0
            p = self.k * h1
            q = self.k * self.k * h0
        else:
            ka, kb = self.k, self.k_minus
            h0a = hankel1_fast(0, ka * r)
            h0b = hankel1_fast(0, kb * r)
            g = 0.25j * (h0a - h0b)
            p = ka * _h1_regular(ka * r) - kb * _h1_regular(kb * r)
            q = ka * ka * h0a - kb * kb * h0b
        gp = -0.25j * p  # dG/dr
        out = np.empty((self.m,) + shape, dtype=complex)
        inv_r = 1.0 / r
        e1 = d1 * inv_r
        e2 = d2 * inv_r
        if hess:
            # H_ab = -(i/4)[Q e_a e_b + P (delta_ab - 2 e_a e_b)/r]
            pr = p * inv_r
            h11 = -0.25j * (q * e1 * e1 + pr * (1.0 - 2.0 * e1 * e1))
            h22 = -0.25j * (q * e2 * e2 + pr * (1.0 - 2.0 * e2 * e2))
            h12 = -0.25j * (q * e1 * e2 - 2.0 * pr * e1 * e2)
        for i, s in enumerate(self.kinds):
            if s == "S":
                out[i] = g
            elif s == "D":
                out[i] = -gp * (ny[0] * e1 + ny[1] * e2)
            elif s == "Sp":
                out[i] = gp * (nx[0] * e1 + nx[1] * e2)
            elif s == "Sg1":
                out[i] = gp * e1
            elif s == "Sg2":
                out[i] = gp * e2
            elif s == "Sy1":
                out[i] = -gp * e1
            elif s == "Dp":
                out[i] = -(nx[0] * (h11 * ny[0] + h12 * ny[1]) + nx[1] * (h12 * ny[0] + h22 * ny[1]))
            elif s == "Dg1":
                out[i] = -(h11 * ny[0] + h12 * ny[1])
            elif s == "Dg2":
                out[i] = -(h12 * ny[0] + h22 * ny[1])
            elif s == "Dy1":
                out[i] = h11 * ny[0] + h12 * ny[1]
            elif s == "Sg1y1":
                out[i] = -h11
        return out


def greens(k: float, x, y):
    """Free-space Green's function ``(i/4) H0(k r)`` for point arrays ``(2, ...)``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d1 = x[0] - y[0]
    d2 = x[1] - y[1]
    r = np.sqrt(d1 * d1 + d2 * d2)
    if np.any(r == 0):
        raise ValueError("greens: coincident points")
    return 0.25j * hankel1(0, k * r)


def greens_grad(k: float, x, y):
    """Gradient in ``x`` of :func:`greens`; returns ``(2, ...)``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d1 = x[0] - y[0]
    d2 = x[1] - y[1]
    r = np.sqrt(d1 * d1 + d2 * d2)
    if np.any(r == 0):
        raise ValueError("greens_grad: coincident points")
    gp = -0.25j * k * hankel1(1, k * r)
    return np.stack([gp * d1 / r, gp * d2 / r])


def kernel_eval(kind: str, k: float, x, y, nx=(0.0, 0.0), ny=(0.0, 0.0)):
    """Evaluate one kernel component at a single (target, source) pair.

    Parameters
    ----------
    kind : {'single', 'double', 'single-prime', 'double-prime'} or a component name
    k : float
        Wavenumber.
    x, y : pair of complex
        Target and source points.
    nx, ny : pair of float
        Target and source normals (unit, real).
    """
    alias = {"single": "S", "double": "D", "single-prime": "Sp", "double-prime": "Dp"}
    kind = alias.get(kind, kind)
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    r2 = (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2
    if r2 == 0:
        raise ValueError("kernel_eval: coincident points")
    if r2.imag < -1e-12 * abs(r2):
        raise ValueError("kernel_eval: Im r^2 < 0 (branch-cut violation)")
    val = HelmholtzKernel((kind,), k)(x, np.asarray(nx, float), y, np.asarray(ny, float))
    return complex(val[0])


def layer_matrix(kernel, contour, x, nx=None, tpanel=None, ts0=None, near_factor: float = 1.0,
                 tol: float = quad.ADAPTIVE_TOL, chunk: int = 2_000_000):
    """Quadrature matrices ``(m, nt, N)`` mapping node densities to target values.

    Far panels use the native rule, panels closer than ``near_factor`` panel
    lengths use adaptive integration, and panels containing the target
    (``tpanel[i] == p``, reference coordinate ``ts0[i]``) use the log rule.

    Parameters
    ----------
    kernel : callable
        Kernel as described in :mod:`openwg.quadrature`.
    contour : Contour
    x : (2, nt) complex
        Targets.
    nx : (2, nt) float, optional
        Target normals (needed by ``Sp``/``Dp``).
    tpanel, ts0 : (nt,) arrays, optional
        On-contour targets: panel index (``-1`` if off) and reference coordinate.
    """
    x = np.asarray(x, dtype=complex).reshape(2, -1)
    nt = x.shape[1]
    nx = np.zeros((2, nt)) if nx is None else np.asarray(nx, dtype=float).reshape(2, nt)
    tpanel = -np.ones(nt, dtype=int) if tpanel is None else np.asarray(tpanel, dtype=int)
    ts0 = np.zeros(nt) if ts0 is None else np.asarray(ts0, dtype=float)
    N = contour.n_nodes
    P = contour.n_panels
    m = getattr(kernel, "m", None)
    out = None
    plen = contour.panel_length
    step = max(1, chunk // max(N, 1))
    near_t, near_p = [], []
    for i0 in range(0, nt, step):
        sl = slice(i0, min(nt, i0 + step))
        xs = x[:, sl]
        with np.errstate(divide="ignore", invalid="ignore"):
            kv = kernel(xs[:, :, None], nx[:, sl, None], contour.x[:, None, :], contour.normal[:, None, :])
        kv *= contour.w
        if out is None:
            m = kv.shape[0]
            out = np.empty((m, nt, N), dtype=complex)
        out[:, sl] = kv
        d1 = xs[0][:, None] - contour.x[0][None, :]
        d2 = xs[1][:, None] - contour.x[1][None, :]
        dist = np.sqrt(np.abs(d1 * d1 + d2 * d2)).reshape(-1, P, 16).min(axis=2)
        ti, pi = np.nonzero(dist < near_factor * plen[None, :])
        ti = ti + i0
        keep = tpanel[ti] != pi
        near_t.append(ti[keep])
        near_p.append(pi[keep])
    if out is None:
        return np.zeros((m or 1, 0, N), dtype=complex)
    near_t = np.concatenate(near_t)
    near_p = np.concatenate(near_p)
    if near_t.size:
        wts = quad.adaptive_panel_weights(kernel, x[:, near_t], nx[:, near_t], contour, near_p, tol=tol)
        cols = near_p[:, None] * 16 + np.arange(16)[None, :]
        out[:, near_t[:, None], cols] = wts
    on = np.nonzero(tpanel >= 0)[0]
    if on.size:
        wts = quad.self_panel_weights(kernel, x[:, on], nx[:, on], contour, tpanel[on], ts0[on])
        cols = tpanel[on][:, None] * 16 + np.arange(16)[None, :]
        out[:, on[:, None], cols] = wts
    return out


def layer_potential(kind: str, k: float, contour, density, targets, target_normals=None, **kw):
    """Evaluate a single layer-potential component at off-contour targets.

    ``kind`` is one of ``single``, ``double``, ``single-prime``, ``double-prime``
    or a component name from :data:`KINDS`.
    """
    alias = {"single": "S", "double": "D", "single-prime": "Sp", "double-prime": "Dp"}
    kern = HelmholtzKernel((alias.get(kind, kind),), k)
    mat = layer_matrix(kern, contour, targets, target_normals, **kw)
    return mat[0] @ np.asarray(density)
