"""
Guided modes of a symmetric slab ``|x2 - c| < d`` (interior wavenumber k1,
exterior k) and of a pair of parallel slabs.

With ``kappa = sqrt(k1^2 - xi^2)`` and ``lam = sqrt(xi^2 - k^2)`` the
single-slab dispersion function is

    f(xi) = (kappa^2 - lam^2) sin(2 d kappa) - 2 lam kappa cos(2 d kappa),

whose zeros in (k, k1) are the propagation constants.  Even modes satisfy
``kappa tan(kappa d) = lam``, odd ones ``-kappa cot(kappa d) = lam``.

Roots are located with a Chebyshev expansion and its colleague matrix, then
polished by Newton's method.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.optimize import brentq

from .quadrature import gauss_legendre

__all__ = [
    "Mode",
    "ExpansionError",
    "dispersion",
    "dispersion_parallel",
    "colleague_roots",
    "find_modes",
    "find_parallel_modes",
    "mode_profile",
    "bisection_roots",
    "modes_to_json",
]


class ExpansionError(RuntimeError):
    """Chebyshev expansion of the dispersion function not resolved."""


@dataclass(frozen=True)
class Mode:
    """Guided mode ``exp(+-i xi x1) v(x2)`` with ``int v^2 dx2 = 1``.

    ``amp`` holds the piecewise coefficients of the unnormalized profile
    (see :func:`mode_profile`); ``norm`` is the factor that normalizes it.
    """

    xi: float
    lam: float
    kappa: float
    parity: str
    norm: float
    k: float
    k1: float
    d: float
    center: float = 0.0
    h: float | None = None
    amp: tuple = field(default=())

    def __call__(self, x2):
        return mode_profile(self, x2)

    def derivative(self, x2):
        return mode_profile(self, x2, deriv=1)

    def support(self, eps: float = 1e-14) -> float:
        """Half-width (about ``center``) beyond which ``|v| <= eps * max|v|``."""
        outer = self.d if self.h is None else self.h + 2 * self.d
        return outer + math.log(1.0 / eps) / self.lam

    def to_dict(self):
        return {"xi": self.xi, "lambda": self.lam, "parity": self.parity, "norm": self.norm}


def _kl(xi, k, k1):
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(np.maximum(k1 * k1 - xi * xi, 0.0)), np.sqrt(np.maximum(xi * xi - k * k, 0.0))


def dispersion(xi, k: float, k1: float, d: float, check: bool = True):
    """Single-slab dispersion function ``f(xi)``."""
    xi = np.asarray(xi, dtype=float)
    if check and (np.any(xi <= k) or np.any(xi >= k1)):
        raise ValueError("dispersion: xi must lie in (k, k1)")
    ka, la = _kl(xi, k, k1)
    th = 2.0 * d * ka
    return (ka * ka - la * la) * np.sin(th) - 2.0 * la * ka * np.cos(th)


def dispersion_parallel(xi, k: float, k1: float, d: float, h: float, parity: str, check: bool = True):
    """``f_e`` (parity 'even', tanh) or ``f_o`` ('odd', coth) for two slabs
    occupying ``h < |x2| < h + 2d``; the gap factor is ``tanh(h lam)`` or
    ``coth(h lam)`` with ``lam = sqrt(xi^2 - k^2)``."""
    xi = np.asarray(xi, dtype=float)
    if check and (np.any(xi <= k) or np.any(xi >= k1)):
        raise ValueError("dispersion: xi must lie in (k, k1)")
    ka, la = _kl(xi, k, k1)
    t = np.tanh(h * la) if parity == "even" else 1.0 / np.tanh(h * la)
    th = 2.0 * d * ka
    return (ka * ka - la * la * t) * np.sin(th) - (1.0 + t) * la * ka * np.cos(th)


def colleague_roots(coef, imag_tol: float = 1e-8):
    """Real roots in [-1, 1] of ``sum c_j T_j`` via the colleague matrix."""
    c = np.array(coef, dtype=float)
    scale = np.abs(c).max()
    if scale == 0:
        raise ValueError("zero expansion")
    nz = np.nonzero(np.abs(c) > 1e-15 * scale)[0]
    c = c[: nz[-1] + 1]
    n = len(c) - 1
    if n < 1:
        return np.array([])
    if n == 1:
        return np.array([-c[0] / c[1]])
    a = np.zeros((n, n))
    a[0, 1] = 1.0
    i = np.arange(1, n - 1)
    a[i, i - 1] = 0.5
    a[i, i + 1] = 0.5
    a[n - 1, n - 2] = 0.5
    a[n - 1, :] -= c[:n] / (2.0 * c[n])
    ev = np.linalg.eigvals(a)
    ev = ev[np.abs(ev.imag) < imag_tol].real
    return np.sort(ev[(ev >= -1.0) & (ev <= 1.0)])


def _newton(f, x0, lo, hi, tol=1e-13, maxit=50):
    x = x0
    for _ in range(maxit):
        h = 1e-7 * max(1.0, abs(x))
        fx = f(x)
        dfx = (f(x + h) - f(x - h)) / (2 * h)
        if dfx == 0:
            break
        step = fx / dfx
        x = min(max(x - step, lo), hi)
        if abs(step) < tol * max(1.0, abs(x)):
            break
    # final bracketed refinement guards against derivative noise
    fx = f(x)
    for w in (1e-10, 1e-8, 1e-6):
        a, b = max(lo, x - w), min(hi, x + w)
        fa, fb = f(a), f(b)
        if fa == 0:
            return a
        if fb == 0:
            return b
        if fa * fb < 0:
            return brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    return x


def _roots_on(f, a: float, b: float, nterms: int = 500):
    coef = _cheb.chebinterpolate(lambda t: f(0.5 * (a + b) + 0.5 * (b - a) * t), nterms - 1)
    tail = np.abs(coef[-10:]).max()
    if tail > 1e-12 * np.abs(coef).max():
        raise ExpansionError(f"Chebyshev expansion unresolved (tail {tail:.2e})")
    t = colleague_roots(coef)
    roots = 0.5 * (a + b) + 0.5 * (b - a) * t
    out = []
    for r in roots:
        x = _newton(f, r, a, b)
        if a < x < b and not any(abs(x - y) < 1e-9 for y in out):
            out.append(x)
    return np.array(sorted(out))


def _single_parity(xi, k, k1, d):
    ka, la = _kl(xi, k, k1)
    even = abs(ka * math.sin(ka * d) - la * math.cos(ka * d))
    odd = abs(ka * math.cos(ka * d) + la * math.sin(ka * d))
    return "even" if even <= odd else "odd"


def _make_mode(xi, k, k1, d, parity, center=0.0, h=None):
    ka, la = (float(v) for v in _kl(xi, k, k1))
    if h is None:
        if parity == "even":
            amp = (1.0, 0.0, math.cos(ka * d))
            nn = d + math.sin(2 * ka * d) / (2 * ka) + math.cos(ka * d) ** 2 / la
        else:
            amp = (0.0, 1.0, math.sin(ka * d))
            nn = d - math.sin(2 * ka * d) / (2 * ka) + math.sin(ka * d) ** 2 / la
    else:
        # gap: A cosh / A sinh; slab: B cos(ka s) + C sin(ka s), s = |x2| - h; outside E e^{-la(...)}
        if parity == "even":
            g, gp = math.cosh(la * h), la * math.sinh(la * h)
        else:
            g, gp = math.sinh(la * h), la * math.cosh(la * h)
        B, C = g, gp / ka
        th = 2 * ka * d
        E = B * math.cos(th) + C * math.sin(th)
        amp = (B, C, E)
        x, w = gauss_legendre(64).nodes, gauss_legendre(64).weights
        s = d * (x + 1)
        slab = np.sum(d * w * (B * np.cos(ka * s) + C * np.sin(ka * s)) ** 2)
        gx = 0.5 * h * (x + 1)
        gapf = np.cosh(la * gx) if parity == "even" else np.sinh(la * gx)
        gap = np.sum(0.5 * h * w * gapf ** 2)
        nn = 2.0 * (gap + slab + E * E / (2 * la))
    return Mode(float(xi), la, ka, parity, 1.0 / math.sqrt(nn), k, k1, d, center, h, amp)


def find_modes(k: float, k1: float, d: float, search_margin: float = 0.01, nterms: int = 500,
               center: float = 0.0) -> list[Mode]:
    """Guided modes of a single slab, ordered by decreasing ``xi`` (fundamental first)."""
    if k <= 0 or d <= 0:
        raise ValueError("k and d must be positive")
    if k1 < k:
        raise ValueError("find_modes requires k1 >= k")
    a, b = k + search_margin, k1 - search_margin
    if b <= a:
        return []
    roots = _roots_on(lambda x: dispersion(x, k, k1, d, check=False), a, b, nterms)
    modes = [_make_mode(r, k, k1, d, _single_parity(r, k, k1, d), center) for r in roots]
    return sorted(modes, key=lambda m: -m.xi)


def find_parallel_modes(k: float, k1: float, d: float, h: float, search_margin: float = 0.01,
                        nterms: int = 500) -> list[Mode]:
    """Modes of two slabs ``h < |x2| < h + 2d``; decreasing ``xi``."""
    if h <= 0:
        raise ValueError("h must be positive")
    if k1 < k:
        raise ValueError("find_parallel_modes requires k1 >= k")
    a, b = k + search_margin, k1 - search_margin
    if b <= a:
        return []
    out = []
    for par in ("even", "odd"):
        roots = _roots_on(lambda x: dispersion_parallel(x, k, k1, d, h, par, check=False), a, b, nterms)
        out += [_make_mode(r, k, k1, d, par, 0.0, h) for r in roots]
    return sorted(out, key=lambda m: -m.xi)


def mode_profile(mode: Mode, x2, deriv: int = 0):
    """Normalized transverse profile ``v(x2)`` (or ``v'`` for ``deriv=1``).

    Accepts complex ``x2`` (analytic continuation of each piece, pieces
    selected by the real part).
    """
    x2 = np.asarray(x2)
    y = x2 - mode.center
    ay = np.where(np.real(y) >= 0, y, -y)  # |y| continued analytically
    sgn = np.where(np.real(y) >= 0, 1.0, -1.0)
    ka, la, d = mode.kappa, mode.lam, mode.d
    odd = mode.parity == "odd"
    psgn = sgn if odd else 1.0  # v(-y) = psgn * v(y)
    if mode.h is None:
        a_c, a_s, e = mode.amp
        inner = a_c * np.cos(ka * ay) + a_s * np.sin(ka * ay)
        dinner = ka * (-a_c * np.sin(ka * ay) + a_s * np.cos(ka * ay))
        outer = e * np.exp(-la * (ay - d))
        douter = -la * outer
        isin = np.real(ay) < d
        v = np.where(isin, inner, outer)
        dv = np.where(isin, dinner, douter)
    else:
        h = mode.h
        B, C, E = mode.amp
        s = ay - h
        if mode.parity == "even":
            gap, dgap = np.cosh(la * ay), la * np.sinh(la * ay)
        else:
            gap, dgap = np.sinh(la * ay), la * np.cosh(la * ay)
        slab = B * np.cos(ka * s) + C * np.sin(ka * s)
        dslab = ka * (-B * np.sin(ka * s) + C * np.cos(ka * s))
        outer = E * np.exp(-la * (ay - h - 2 * d))
        douter = -la * outer
        ra = np.real(ay)
        v = np.where(ra < h, gap, np.where(ra < h + 2 * d, slab, outer))
        dv = np.where(ra < h, dgap, np.where(ra < h + 2 * d, dslab, douter))
    if deriv == 0:
        return mode.norm * psgn * v
    # d/dx2 v(|y|) = sgn * v'(|y|)
    return mode.norm * psgn * sgn * dv


def bisection_roots(f, a: float, b: float, cells: int = 100_000):
    """Reference roots by scanning ``cells`` sign-change cells then bisecting."""
    x = np.linspace(a, b, cells + 1)
    fx = f(x)
    idx = np.nonzero(np.sign(fx[:-1]) * np.sign(fx[1:]) < 0)[0]
    return np.array([brentq(f, x[i], x[i + 1], xtol=1e-15, rtol=1e-15) for i in idx])


def modes_to_json(modes, path=None) -> str:
    """JSON array of ``{xi, lambda, parity, norm}``."""
    txt = json.dumps([m.to_dict() for m in modes], indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(txt)
    return txt
