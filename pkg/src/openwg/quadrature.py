"""
Panel quadrature: smooth (Gauss-Legendre), nearly singular (adaptive) and
log-singular (auxiliary moment-fitted rule).

All routines work on *reference* panels ``s in [-1, 1]`` and produce
16-vectors of weights acting on the density values at the 16 Gauss-Legendre
nodes of the panel (the density is represented by its degree-15 interpolant).

A *kernel* is a callable ``kernel(x, nx, y, ny)`` taking target points
``x`` (complex, shape ``(2, ...)``), target normals ``nx`` (real,
``(2, ...)``), source points ``y`` and source normals ``ny`` and returning
an array of shape ``(m, ...)`` (``m`` kernel components evaluated
together, typically sharing Hankel evaluations).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as _leg

__all__ = [
    "QuadratureRule",
    "QuadratureError",
    "gauss_legendre",
    "interp_matrix",
    "log_rule01",
    "self_rule",
    "adaptive_panel_weights",
    "self_panel_weights",
    "far_panel_weights",
    "integrate_panel",
    "ADAPTIVE_TOL",
]

#: Default tolerance of the adaptive near-panel integrator.
ADAPTIVE_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive integration did not converge; ``estimate`` holds the last result."""

    def __init__(self, msg, estimate=None, items=None):
        super().__init__(msg)
        self.estimate = estimate
        self.items = items


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule on [-1, 1] (exact to degree 2n-1)."""
    if not (isinstance(n, (int, np.integer)) and 2 <= n <= 64):
        raise ValueError("gauss_legendre: n must be an integer in [2, 64]")
    x, w = _leg.leggauss(int(n))
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, int(n))


@lru_cache(maxsize=8)
def _bary_weights(n: int) -> np.ndarray:
    x = gauss_legendre(n).nodes
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    return 1.0 / d.prod(axis=1)


def interp_matrix(s, n: int = 16) -> np.ndarray:
    """Lagrange interpolation matrix from the ``n`` GL nodes to points ``s``.

    Returns an array of shape ``s.shape + (n,)``.
    """
    s = np.asarray(s, dtype=float)
    x = gauss_legendre(n).nodes
    bw = _bary_weights(n)
    diff = s[..., None] - x
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = bw / diff
        out = t / t.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    if np.any(hit):
        out[hit] = exact[hit].astype(float)
    return out


@lru_cache(maxsize=None)
def log_rule01(nbasis: int = 16, nquad: int = 32):
    """Rule on [0, 1] exact for ``x^j`` and ``x^j log x``, ``j < nbasis``.

    Nodes are Gauss-Legendre points in ``u`` mapped by ``x = u^2``; weights
    solve the moment equations in a shifted Legendre basis (least squares,
    the system is square-ish and consistent).  Weights come out positive.
    """
    u, _ = _leg.leggauss(nquad)
    x = ((u + 1.0) / 2.0) ** 2
    v = _leg.legvander(2.0 * x - 1.0, nbasis - 1)
    a = np.vstack([v.T, (v * np.log(x)[:, None]).T])
    m0 = np.zeros(nbasis)
    m0[0] = 1.0
    j = np.arange(1, nbasis)
    m1 = np.concatenate([[-1.0], (-1.0) ** (j + 1) / (j * (j + 1.0))])
    w, *_ = np.linalg.lstsq(a, np.concatenate([m0, m1]), rcond=None)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def self_rule(s0):
    """Auxiliary nodes/weights on [-1, 1] for integrands ``p(s) + q(s) log|s - s0|``.

    ``s0`` may be an array; the result has shape ``s0.shape + (2*nquad,)``.
    """
    s0 = np.asarray(s0, dtype=float)
    x, w = log_rule01()
    left = (s0 + 1.0)[..., None]
    right = (1.0 - s0)[..., None]
    s = np.concatenate([s0[..., None] - left * x, s0[..., None] + right * x], axis=-1)
    ww = np.concatenate([left * w, right * w], axis=-1)
    return s, ww



def far_panel_weights(kernel, x, nx, contour, panels):
    """Native GL weights ``K(x_i, y_j) w_j`` for (target, panel) items.

    Returns (m, M, 16).
    """
    rule = gauss_legendre(16)
    y, ny, dw = contour.eval_ref(panels, rule.nodes[None, :])
    k = kernel(x[:, :, None], nx[:, :, None], y, ny)
    return k * (dw * rule.weights)[None]


def self_panel_weights(kernel, x, nx, contour, panels, s0):
    """Weights for targets lying on the panel at reference coordinate ``s0``.

    Returns (m, M, 16).
    """
    s, ws = self_rule(s0)
    y, ny, dw = contour.eval_ref(panels, s)
    lag = interp_matrix(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = kernel(x[:, :, None], nx[:, :, None], y, ny)
    return np.einsum("mtq,tq,tqj->mtj", k, dw * ws, lag)


def adaptive_panel_weights(kernel, x, nx, contour, panels, tol: float = ADAPTIVE_TOL, max_depth: int = 40,
                           lo=None, hi=None):
    """Adaptive (bisection) weights for targets near, but not on, a panel.

    The density is replaced by its degree-15 interpolant and the 16 basis
    integrals are computed simultaneously.  Intervals are processed level by
    level for all items at once.  Convergence on an interval is declared
    when the two-half estimate differs from the whole-interval one by at most
    ``tol * max(1, |initial estimate|)``.

    Parameters
    ----------
    x, nx : (2, M) arrays
        Targets and target normals.
    panels : (M,) int
        Panel index of each item.
    lo, hi : (M,) float, optional
        Sub-range of the reference interval to integrate (default [-1, 1]).

    Returns
    -------
    (m, M, 16) complex
    """
    rule = gauss_legendre(16)
    panels = np.asarray(panels, dtype=int)
    M = len(panels)
    a = -np.ones(M) if lo is None else np.asarray(lo, dtype=float).copy()
    b = np.ones(M) if hi is None else np.asarray(hi, dtype=float).copy()

    def gl(items, aa, bb):
        h = 0.5 * (bb - aa)
        s = 0.5 * (aa + bb)[:, None] + h[:, None] * rule.nodes[None, :]
        y, ny, dw = contour.eval_ref(panels[items], s)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = kernel(x[:, items, None], nx[:, items, None], y, ny)
        lag = interp_matrix(s)
        return np.einsum("mtq,tq,tqj->mtj", k, dw * (h[:, None] * rule.weights), lag)

    items = np.arange(M)
    est = gl(items, a, b)
    m = est.shape[0]
    total = np.zeros((m, M, 16), dtype=complex)
    scale = np.maximum(1.0, np.abs(est).max(axis=(0, 2)))
    depth = 0
    while items.size:
        if depth >= max_depth:
            total[:, items] += est
            raise QuadratureError("adaptive quadrature exceeded maximum depth", total, items)
        c = 0.5 * (a + b)
        left = gl(items, a, c)
        right = gl(items, c, b)
        both = left + right
        if not np.all(np.isfinite(both)):
            # a target on the integration interval; refining would only multiply the intervals
            total[:, items] += est
            raise QuadratureError("non-finite kernel values (target on the panel)", total, items)
        err = np.abs(both - est).max(axis=(0, 2))
        ok = err <= tol * scale[items]
        if np.any(ok):
            np.add.at(total, (slice(None), items[ok]), both[:, ok])
        nk = ~ok
        items = np.concatenate([items[nk], items[nk]])
        a, b = np.concatenate([a[nk], c[nk]]), np.concatenate([c[nk], b[nk]])
        est = np.concatenate([left[:, nk], right[:, nk]], axis=1)
        depth += 1
    return total


def integrate_panel(kernel, density, contour, panel: int, target, target_normal=(0.0, 0.0),
                    regime: str = "far", s0: float | None = None, tol: float = ADAPTIVE_TOL):
    """Integrate ``kernel * density`` over one panel for a single target.

    Parameters
    ----------
    kernel : callable
        See module docstring.
    density : (16,) array
        Density values at the panel's GL nodes.
    regime : {'far', 'near', 'self'}
        ``self`` requires ``s0``, the target's reference coordinate on the panel.

    Returns
    -------
    ndarray of shape (m,)
    """
    x = np.asarray(target, dtype=complex).reshape(2, 1)
    nx = np.asarray(target_normal, dtype=float).reshape(2, 1)
    p = np.array([panel])
    if regime == "far":
        w = far_panel_weights(kernel, x, nx, contour, p)
    elif regime == "near":
        w = adaptive_panel_weights(kernel, x, nx, contour, p, tol=tol)
    elif regime == "self":
        if s0 is None:
            raise ValueError("self regime needs s0")
        w = self_panel_weights(kernel, x, nx, contour, p, np.array([s0]))
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return w[:, 0, :] @ np.asarray(density)
