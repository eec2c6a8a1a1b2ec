"""
Hankel functions of the first kind, orders 0 and 1, for complex arguments.

Two evaluation paths are provided.

* :func:`hankel1` is the production routine.  It wraps the AMOS library
  shipped with scipy, adds the domain checks required by the solver and is
  the one used by every kernel in the package.
* :func:`hankel1_reference` is a self-contained implementation (ascending
  series below :data:`CROSSOVER`, a Laguerre-quadrature evaluation of the
  Hankel integral representation above it).  It is independent of scipy's
  Bessel code and serves as a cross-check in the test-suite.

Only the closed upper half plane (plus a thin strip of width
:data:`BRANCH_DELTA` below it) is supported; complexified contours never
leave it.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import special as _sp

__all__ = [
    "AccuracyWarning",
    "BRANCH_DELTA",
    "CROSSOVER",
    "VALID_RANGE",
    "hankel1",
    "hankel01",
    "hankel1_reference",
    "hankel1_series",
    "hankel1_integral",
]

#: |z| below which the reference implementation uses the ascending series.
CROSSOVER = 2.0
#: Relative depth below the real axis still accepted: Im z >= -BRANCH_DELTA*max(1,|z|).
BRANCH_DELTA = 1e-10
#: Range of |z| over which the 1e-13 relative accuracy contract is validated.
VALID_RANGE = (1e-8, 1e4)

_EULER = 0.57721566490153286061


class AccuracyWarning(RuntimeWarning):
    """Raised (as a warning) when arguments fall outside :data:`VALID_RANGE`."""


def _check(z: np.ndarray) -> None:
    if np.any(z == 0):
        raise ValueError("hankel1: z = 0 is a singular point")
    absz = np.abs(z)
    if np.any(z.imag < -BRANCH_DELTA * np.maximum(1.0, absz)):
        raise ValueError("hankel1: argument below the supported half plane (Im z < 0)")
    if absz.size and (absz.min() < VALID_RANGE[0] or absz.max() > VALID_RANGE[1]):
        warnings.warn("hankel1: |z| outside the validated range", AccuracyWarning, stacklevel=3)


def hankel1(order: int, z):
    """Hankel function of the first kind ``H_order^(1)(z)``.

    Parameters
    ----------
    order : {0, 1}
        Order of the function.
    z : complex or array_like
        Argument(s); must be nonzero with Im z >= -BRANCH_DELTA*max(1, |z|).

    Returns
    -------
    complex or ndarray
        Function values with the shape of ``z``.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    za = np.asarray(z, dtype=complex)
    _check(za)
    out = _sp.hankel1(order, za)
    return out[()] if out.ndim == 0 else out


def hankel01(z):
    """Return ``(H_0^(1)(z), H_1^(1)(z))`` without domain checks (hot path)."""
    return _sp.hankel1(0, z), _sp.hankel1(1, z)


# ---------------------------------------------------------------------------
# reference implementation

def hankel1_series(order: int, z, nterms: int = 40):
    """Ascending-series evaluation of ``H_order^(1)`` (accurate for |z| <~ 6)."""
    z = np.asarray(z, dtype=complex)
    h = z / 2.0
    h2 = -h * h
    lg = np.log(h) + _EULER
    if order == 0:
        term = np.ones_like(z)
        j = term.copy()
        ysum = np.zeros_like(z)
        harm = 0.0
        for m in range(1, nterms):
            term = term * h2 / (m * m)
            harm += 1.0 / m
            j = j + term
            ysum = ysum + harm * term
        y = (2.0 / np.pi) * (lg * j - ysum)
    elif order == 1:
        term = h.copy()
        j = term.copy()
        # psi(m+1) + psi(m+2) = 2*H_m + 1/(m+1) - 2*gamma; gamma parts folded into lg
        ysum = term * 1.0
        harm = 0.0
        for m in range(1, nterms):
            term = term * h2 / (m * (m + 1))
            harm += 1.0 / m
            j = j + term
            ysum = ysum + (2.0 * harm + 1.0 / (m + 1)) * term
        y = -2.0 / (np.pi * z) + (2.0 / np.pi) * lg * j - ysum / np.pi
    else:
        raise ValueError("only orders 0 and 1 are supported")
    return j + 1j * y


@lru_cache(maxsize=4)
def _laguerre(order: int, n: int):
    return _sp.roots_genlaguerre(n, order - 0.5)


def hankel1_integral(order: int, z, n: int = 64):
    """Hankel's integral representation evaluated by generalized Gauss-Laguerre.

    Uses ``H_nu(z) = sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} / Gamma(nu+1/2)
    * int_0^inf e^{-u} u^{nu-1/2} (1 + iu/(2z))^{nu-1/2} du``, valid for
    Im z >= 0.  Accurate to ~1e-15 for |z| >= 2.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    x, w = _laguerre(order, n)
    z = np.asarray(z, dtype=complex)
    f = (1.0 + 1j * x / (2.0 * z[..., None])) ** (order - 0.5)
    pref = np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * (z - order * np.pi / 2 - np.pi / 4))
    return pref * (f @ w) / _sp.gamma(order + 0.5)


def hankel1_reference(order: int, z):
    """Scipy-free evaluation switching between series and integral at CROSSOVER."""
    z = np.asarray(z, dtype=complex)
    _check(z)
    small = np.abs(z) < CROSSOVER
    out = np.empty_like(z)
    if np.any(small):
        out[small] = hankel1_series(order, z[small])
    if np.any(~small):
        out[~small] = hankel1_integral(order, z[~small])
    return out[()] if out.ndim == 0 else out
