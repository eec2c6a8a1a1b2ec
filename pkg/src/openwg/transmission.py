"""
Transmission problems on (complexified) interfaces and the bi-infinite
waveguide Green's function built from them.

Unknowns are a double-layer density ``mu`` and a single-layer density
``rho`` on the interface; the scattered field is

    v = D_k[mu] + S_k[rho]      outside (side the normals point to),
    v = D_k1[mu] + S_k1[rho]    inside,

and the jump conditions ``[[v]] = -[[v_in]]``, ``[[dv/dn]] = -[[dv_in/dn]]``
(``[[f]] = f_out - f_in``) give the second-kind system

    (I + [[D_k - D_k1, S_k - S_k1], [-(D'_k - D'_k1), -(S'_k - S'_k1)]]) (mu, rho)
        = (-[[v_in]], [[dv_in/dn]]).

The waveguide Green's function is ``G_q(x; y) = G_{k(x)}(x; y) + G_out(x; y)``
where ``G_out`` solves the transmission problem with ``v_in = G_{k(x)}(.; y)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from . import geometry as geo
from .kernels import HelmholtzKernel, layer_matrix

__all__ = [
    "TransmissionProblem",
    "TransmissionSystem",
    "DensityPair",
    "NumericalFailure",
    "waveguide_problem",
    "assemble_transmission",
    "solve_transmission",
    "field_matrices",
    "evaluate_field",
    "WaveguideGreens",
    "greens_waveguide",
    "write_density_csv",
    "condition_estimate",
]


class NumericalFailure(RuntimeError):
    """Factorization or convergence failure (maps to CLI exit status 3)."""


@dataclass
class TransmissionProblem:
    """Interface, wavenumbers and region classifier.

    ``inside(x1, x2)`` returns True where the wavenumber is ``k1``; complex
    coordinates are classified by their real parts.
    """

    contour: geo.Contour
    k: float
    k1: float
    inside: Callable
    translation_invariant: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k <= 0 or self.k1 <= 0:
            raise ValueError("wavenumbers must be positive")

    def wavenumber(self, x) -> np.ndarray:
        x = np.asarray(x)
        ins = np.asarray(self.inside(np.real(x[0]), np.real(x[1])), dtype=bool)
        return np.where(ins, self.k1, self.k)


def waveguide_problem(k: float, k1: float, d: float, L: float = 10.0, n_panels: int = 72, center: float = 0.0,
                      **contour_kw) -> TransmissionProblem:
    """Bi-infinite guide ``|x2 - center| < d`` with interior wavenumber ``k1``."""
    c = geo.waveguide_edges(d, L, n_panels, k=k, offset=center, **contour_kw)

    def inside(x1, x2):
        return np.abs(np.asarray(x2) - center) < d

    return TransmissionProblem(c, k, k1, inside, translation_invariant=True,
                               meta={"d": d, "L": L, "center": center})


@dataclass
class TransmissionSystem:
    """Factored system; ``matrix`` is kept only when requested at assembly."""

    problem: TransmissionProblem
    matrix: np.ndarray | None
    lu: tuple
    rcond: float

    @property
    def n(self) -> int:
        return self.problem.contour.n_nodes

    @property
    def cond(self) -> float:
        return 1.0 / self.rcond if self.rcond > 0 else np.inf


@dataclass
class DensityPair:
    mu: np.ndarray
    rho: np.ndarray


def condition_estimate(a, lu) -> float:
    """Reciprocal 1-norm condition estimate from an LU factorization.

    ``a`` is the matrix or its precomputed 1-norm.
    """
    gecon = sla.get_lapack_funcs("gecon", (lu[0],))
    anorm = float(a) if np.isscalar(a) else np.abs(a).sum(axis=0).max()
    rcond, info = gecon(lu[0], anorm, norm="1")
    return float(rcond)


def assemble_transmission(problem: TransmissionProblem, tol: float = 1e-12,
                          keep_matrix: bool = False) -> TransmissionSystem:
    """Assemble and LU-factor the second-kind transmission system.

    The dense matrix is factored in place unless ``keep_matrix`` is set.
    """
    c = problem.contour
    n = c.n_nodes
    kern = HelmholtzKernel(("D", "S", "Dp", "Sp"), problem.k, problem.k1)
    m = layer_matrix(kern, c, c.x, c.normal, tpanel=c.panel_of_node, ts0=c.node_s, tol=tol)
    a = np.empty((2 * n, 2 * n), dtype=complex)
    a[:n, :n] = m[0]
    a[:n, n:] = m[1]
    a[n:, :n] = -m[2]
    a[n:, n:] = -m[3]
    a[np.diag_indices(2 * n)] += 1.0
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("non-finite entries in transmission matrix")
    anorm = np.abs(a).sum(axis=0).max()
    lu = sla.lu_factor(a, overwrite_a=not keep_matrix, check_finite=False)
    rcond = condition_estimate(anorm, lu)
    if rcond < 1e-14:
        raise NumericalFailure(f"transmission matrix numerically singular (cond ~ {1 / max(rcond, 1e-300):.2e})")
    return TransmissionSystem(problem, a if keep_matrix else None, lu, rcond)


def solve_transmission(system: TransmissionSystem, jump, jump_dn) -> DensityPair:
    """Solve for densities given ``[[v_in]]`` and ``[[dv_in/dn]]`` at the nodes.

    Extra trailing dimensions are treated as multiple right-hand sides.
    """
    jump = np.asarray(jump, dtype=complex)
    jump_dn = np.asarray(jump_dn, dtype=complex)
    n = system.n
    rhs = np.concatenate([-jump, jump_dn], axis=0)
    if rhs.shape[0] != 2 * n:
        raise ValueError("data must be sampled at every contour node")
    sol = sla.lu_solve(system.lu, rhs, check_finite=False)
    return DensityPair(sol[:n], sol[n:])


def _kinds_for(deriv: str):
    if deriv == "value":
        return ("D", "S")
    if deriv == "grad":
        return ("D", "S", "Dg1", "Sg1", "Dg2", "Sg2")
    if deriv == "x1":
        return ("Dg1", "Sg1")
    raise ValueError(deriv)


def field_matrices(problem: TransmissionProblem, targets, deriv: str = "value", tol: float = 1e-12):
    """Matrices mapping ``(mu, rho)`` to field values at off-interface targets.

    Returns an array ``(m, nt, N)``; for ``deriv='value'`` ``m=2`` and the
    field is ``M[0] @ mu + M[1] @ rho``.  ``'x1'`` gives ``d/dx1`` and
    ``'grad'`` stacks value, ``d/dx1`` and ``d/dx2`` (m=6).
    """
    x = np.asarray(targets, dtype=complex).reshape(2, -1)
    kinds = _kinds_for(deriv)
    kx = problem.wavenumber(x)
    out = np.empty((len(kinds), x.shape[1], problem.contour.n_nodes), dtype=complex)
    for kk in np.unique(kx):
        sel = kx == kk
        out[:, sel] = layer_matrix(HelmholtzKernel(kinds, kk), problem.contour, x[:, sel], tol=tol)
    return out


def evaluate_field(problem: TransmissionProblem, dens: DensityPair, targets, deriv: str = "value"):
    """Scattered field (and optionally derivatives) at targets.

    Returns ``(nt,)`` for ``value``/``x1`` and ``(3, nt)`` for ``grad``.
    """
    m = field_matrices(problem, targets, deriv)
    if deriv == "grad":
        return np.stack([m[2 * i] @ dens.mu + m[2 * i + 1] @ dens.rho for i in range(3)])
    return m[0] @ dens.mu + m[1] @ dens.rho


def write_density_csv(dens: DensityPair, path) -> None:
    """CSV ``node,re_mu,im_mu,re_rho,im_rho``."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", "re_mu", "im_mu", "re_rho", "im_rho"])
        for i, (a, b) in enumerate(zip(np.ravel(dens.mu), np.ravel(dens.rho))):
            wr.writerow([i, repr(float(a.real)), repr(float(a.imag)), repr(float(b.real)), repr(float(b.imag))])


# ---------------------------------------------------------------------------
# waveguide Green's function

_FREE_KIND = {(0, 0): "S", (1, 0): "Sg1", (0, 1): "Sy1", (1, 1): "Sg1y1"}


class WaveguideGreens:
    """Evaluator of ``G_q`` and ``G_out`` for a factored transmission system.

    Derivatives are requested as ``(ax, ay)``: the number of ``d/dx1`` and
    ``d/dy1`` applied, each 0 or 1.  For translation-invariant problems
    (bi-infinite guides) ``(2, 0)`` and ``(0, 2)`` are also accepted through
    ``d/dx1 = -d/dy1``.
    """

    def __init__(self, system: TransmissionSystem):
        self.system = system
        self.problem = system.problem

    def _normalize(self, deriv):
        ax, ay = deriv
        if ax + ay > 2 or min(ax, ay) < 0:
            raise ValueError("derivative order must satisfy |alpha| <= 2")
        sign = 1.0
        if ax == 2 or ay == 2:
            if not self.problem.translation_invariant:
                raise ValueError("second derivatives in one variable need a translation-invariant problem")
            sign = -1.0
            ax, ay = 1, 1
        return ax, ay, sign

    def jump_data(self, y, ay: int = 0):
        """``([[v_in]], [[dv_in/dn]])`` at the nodes for sources ``y`` (2, ns)."""
        c = self.problem.contour
        y = np.asarray(y, dtype=complex).reshape(2, -1)
        ns = y.shape[1]
        ny = np.zeros((2, ns))
        if ay == 0:
            kinds = ("S", "Sp")
        else:
            kinds = ("D", "Dp")
            ny[0] = 1.0  # d/dy1 = (1, 0) . grad_y
        kern = HelmholtzKernel(kinds, self.problem.k, self.problem.k1)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = kern(c.x[:, :, None], c.normal[:, :, None], y[:, None, :], ny[:, None, :])
        return v[0], v[1]

    def densities(self, y, ay: int = 0) -> DensityPair:
        jv, jn = self.jump_data(y, ay)
        return solve_transmission(self.system, jv, jn)

    def out_matrix(self, x, y, deriv=(0, 0)):
        """``G_out`` (or a derivative) for all pairs: returns ``(nx, ny)``."""
        ax, ay, sign = self._normalize(deriv)
        dens = self.densities(y, ay)
        m = field_matrices(self.problem, x, "x1" if ax else "value")
        return sign * (m[0] @ dens.mu + m[1] @ dens.rho)

    def free_matrix(self, x, y, deriv=(0, 0)):
        """Free-space part ``G_{k(x)}(x; y)`` (or a derivative), ``(nx, ny)``."""
        ax, ay, sign = self._normalize(deriv)
        x = np.asarray(x, dtype=complex).reshape(2, -1)
        y = np.asarray(y, dtype=complex).reshape(2, -1)
        kx = self.problem.wavenumber(x)
        out = np.empty((x.shape[1], y.shape[1]), dtype=complex)
        z = np.zeros(2)
        for kk in np.unique(kx):
            sel = kx == kk
            kern = HelmholtzKernel((_FREE_KIND[(ax, ay)],), kk)
            out[sel] = kern(x[:, sel, None], z[:, None, None], y[:, None, :], z[:, None, None])[0]
        return sign * out

    def matrix(self, x, y, deriv=(0, 0)):
        """Full ``G_q`` for all pairs, ``(nx, ny)``."""
        return self.free_matrix(x, y, deriv) + self.out_matrix(x, y, deriv)

    def __call__(self, x, y, deriv=(0, 0)):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        if np.allclose(x, y, atol=0, rtol=0):
            raise ValueError("coincident points")
        return complex(self.matrix(x.reshape(2, 1), y.reshape(2, 1), deriv)[0, 0])


def greens_waveguide(problem_or_system, x, y, derivative=(0, 0)) -> complex:
    """Evaluate ``G_q(x; y)`` (or a derivative) for one pair of points."""
    system = problem_or_system
    if isinstance(system, TransmissionProblem):
        system = assemble_transmission(system)
    return WaveguideGreens(system)(x, y, derivative)
