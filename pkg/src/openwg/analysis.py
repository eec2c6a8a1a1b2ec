"""
Post-processing of matched solutions: mode projections, power balance,
scattering matrices and a radiation check.

Conventions
-----------
Outgoing guided fields are expanded as

    v_l ~ sum_j c^l_j exp(-i xi_j x1) v_j(x2)   (x1 -> -inf),
    v_r ~ sum_j c^r_j exp(+i xi_j x1) v_j(x2)   (x1 -> +inf),

with modes normalized by ``int v_j^2 = 1``.  Guided power is ``xi |c|^2``
and an incoming mode of unit amplitude carries power ``xi``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import matched as mt
from .quadrature import gauss_legendre

PANEL_PHASE = 12.0  # largest k1 * panel length on projection lines

__all__ = [
    "project_line",
    "project_density",
    "project_onto_modes",
    "project_field",
    "FluxResolutionError",
    "flux_box",
    "power_balance",
    "scattering_matrix",
    "radiation_check",
    "ScatteringReport",
    "dumps17",
]


# ---------------------------------------------------------------------------
# JSON with 17 significant digits


def _fmt(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_fmt(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _fmt(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return _fmt(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, complex):
        return _fmt([obj.real, obj.imag], indent, level)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with every float printed to 17 significant digits.

    Complex numbers become ``[re, im]``; non-finite floats become ``null``.
    """
    return _fmt(obj, indent, 0)


# ---------------------------------------------------------------------------
# projections


def _side_modes(problem, side):
    return mt._side(problem, side)


def _split(points, n_panels):
    """Breakpoints refining ``points`` into about ``n_panels`` panels of similar length."""
    pts = np.asarray(points, dtype=float)
    lens = np.diff(pts)
    n = np.ones(lens.size, dtype=int)
    while n.sum() < n_panels:
        n[np.argmax(lens / n)] += 1
    return np.concatenate([np.linspace(p, q, m + 1)[:-1] for p, q, m in zip(pts[:-1], pts[1:], n)] + [[pts[-1]]])


def _check_modes(modes):
    if modes is None or len(modes) == 0:
        raise ValueError("empty mode list")
    return modes


def _line_nodes(problem, modes, n_panels: int, center: float, edges):
    """Nodes/weights of ``x2 = t + i psi(t)`` over the numerical support of ``modes``."""
    cplx = None if problem is None else problem.contour.cplx
    T = np.inf if problem is None else problem.contour.truncation
    S = min(max(m.support() for m in modes), T)
    fixed = sorted({center - S, center + S, *[e for e in edges if abs(e - center) < S]})
    # at least n_panels, and no panel longer than PANEL_PHASE / k1
    kmax = max(m.k1 for m in modes)
    br = _split(fixed, max(n_panels, math.ceil(2 * S * kmax / PANEL_PHASE)))
    g = gauss_legendre(16)
    a, b = br[:-1, None], br[1:, None]
    t = (0.5 * (a + b) + 0.5 * (b - a) * g.nodes).ravel()
    w = (0.5 * (b - a) * g.weights).ravel()
    if cplx is None:
        return t.astype(complex), w.astype(complex)
    return t + 1j * cplx.psi(t), w * (1 + 1j * cplx.dpsi(t))


def project_line(problem, solution, side: str, x1: float, modes=None, n_panels: int = 16):
    """Guided coefficients from line integrals of the outgoing field.

    ``c_j = exp(-+i xi_j x1) int v_j(x2) u(x1, x2) dx2`` on a vertical line
    (``x1 > 0`` for ``side='right'``, ``x1 < 0`` for ``'left'``).  The line is
    complexified with the junction contour's map so that every field value is
    a valid continuation; at least ``n_panels`` 16-point panels (more if a
    panel would exceed ``PANEL_PHASE / k1``) cover the support of the modes,
    with breakpoints at the guide edges.
    """
    s = _side_modes(problem, side)
    modes = _check_modes(s.modes() if modes is None else modes)
    if (side == "right") != (x1 > 0):
        raise ValueError("x1 must lie on the requested side")
    z2, w = _line_nodes(problem, modes, n_panels, s.center, (s.center - s.d, s.center + s.d))
    x = np.stack([np.full(z2.shape, x1, dtype=complex), z2])
    u = mt.reconstruct_field(problem, solution, x)
    sgn = -1.0 if side == "right" else 1.0
    return np.array([np.exp(sgn * 1j * m.xi * x1) * np.sum(w * m(z2) * u) for m in modes])


def project_density(problem, solution, side: str, modes=None):
    """Guided coefficients directly from the junction densities.

    ``c^r_j = (i / 2 xi_j) int v_j (tau - i xi_j sigma)`` and
    ``c^l_j = (i / 2 xi_j) int v_j (tau + i xi_j sigma)``, integrated on the
    junction contour.
    """
    s = _side_modes(problem, side)
    modes = _check_modes(s.modes() if modes is None else modes)
    c = problem.contour
    z2 = c.x[1]
    sgn = -1.0 if side == "right" else 1.0
    out = []
    for m in modes:
        f = solution.tau + sgn * 1j * m.xi * solution.sigma
        out.append(1j / (2 * m.xi) * np.sum(c.w * m(z2) * f))
    return np.array(out)


def project_field(field, side: str, x1: float, modes, n_panels: int = 16, center: float = 0.0, d: float | None = None):
    """Line-integral coefficients of a field callable ``field(x) -> (n,)`` on the real line ``x1``."""
    modes = _check_modes(modes)
    edges = () if d is None else (center - d, center + d)
    z2, w = _line_nodes(None, modes, n_panels, center, edges)
    u = np.asarray(field(np.stack([np.full(z2.shape, x1, dtype=complex), z2])))
    sgn = -1.0 if side == "right" else 1.0
    return np.array([np.exp(sgn * 1j * m.xi * x1) * np.sum(w * m(z2) * u) for m in modes])


def project_onto_modes(problem, solution, side: str, modes=None, method: str = "density", x1: float | None = None,
                       n_panels: int = 16):
    """Dispatch to :func:`project_density` or :func:`project_line`.

    If ``solution`` is callable it is treated as a field evaluator and
    projected with :func:`project_field` (``problem`` may then be ``None``).
    """
    if callable(solution):
        if x1 is None:
            raise ValueError("x1 is required for a field evaluator")
        if problem is None:
            return project_field(solution, side, x1, modes, n_panels)
        s = _side_modes(problem, side)
        return project_field(solution, side, x1, s.modes() if modes is None else modes, n_panels, s.center, s.d)
    if method == "density":
        return project_density(problem, solution, side, modes)
    if method == "line":
        if x1 is None:
            x1 = 5.0 if side == "right" else -5.0
        return project_line(problem, solution, side, x1, modes, n_panels)
    raise ValueError("method must be 'density' or 'line'")


# ---------------------------------------------------------------------------
# power


def _side_breaks(a, specials, n_panels):
    return _split(sorted({-a, a, *[p for p in specials if -a < p < a]}), n_panels)


def flux_box(half_side: float, nodes_per_side: int = 500, vertical_breaks=((), ()), horizontal_breaks=(0.0,),
             order: int = 20):
    """Composite Gauss-Legendre nodes on the square ``[-a, a]^2``.

    Returns ``(x, normal, w)`` with outward normals.  ``vertical_breaks``
    holds extra breakpoints in ``x2`` for the sides ``x1 = -a`` and
    ``x1 = +a``; ``horizontal_breaks`` those in ``x1`` for ``x2 = +-a``.
    """
    if nodes_per_side % order:
        raise ValueError("nodes_per_side must be a multiple of the panel order")
    npan = nodes_per_side // order
    g = gauss_legendre(order)

    def side(breaks):
        a, b = breaks[:-1, None], breaks[1:, None]
        return (0.5 * (a + b) + 0.5 * (b - a) * g.nodes).ravel(), (0.5 * (b - a) * g.weights).ravel()

    a = float(half_side)
    xs, ns, ws = [], [], []
    for sgn, br in ((-1.0, vertical_breaks[0]), (1.0, vertical_breaks[1])):
        t, w = side(_side_breaks(a, br, npan))
        xs.append(np.stack([np.full_like(t, sgn * a), t]))
        ns.append(np.tile([[sgn], [0.0]], (1, t.size)))
        ws.append(w)
    for sgn in (-1.0, 1.0):
        t, w = side(_side_breaks(a, horizontal_breaks, npan))
        xs.append(np.stack([t, np.full_like(t, sgn * a)]))
        ns.append(np.tile([[0.0], [sgn]], (1, t.size)))
        ws.append(w)
    return np.concatenate(xs, axis=1), np.concatenate(ns, axis=1), np.concatenate(ws)


@dataclass
class ScatteringReport:
    """Outgoing coefficients and power budget for one incoming channel."""

    k: float
    incoming: dict
    xi_left: list
    xi_right: list
    c_left: np.ndarray
    c_right: np.ndarray
    P_left: float
    P_right: float
    P_out: float
    P_rad: float
    P_in: float
    balance_defect: float
    box: dict = field(default_factory=dict)

    @property
    def unitarity_defect(self) -> float:
        """Guided power in excess of the input, ``max(0, (P_l + P_r - P_in) / P_in)``."""
        return max(0.0, (self.P_left + self.P_right - self.P_in) / self.P_in)

    def invariants_ok(self, tol: float = 1e-8) -> bool:
        """Guided and radiated powers nonnegative up to ``tol``."""
        return min(self.P_left, self.P_right, self.P_rad) >= -tol

    def normalized(self) -> dict:
        """Powers divided by the incoming power."""
        return {"P_left": self.P_left / self.P_in, "P_right": self.P_right / self.P_in,
                "P_rad": self.P_rad / self.P_in, "P_out": self.P_out / self.P_in}

    def to_dict(self) -> dict:
        return {
            "modes_l": [float(x) for x in self.xi_left],
            "modes_r": [float(x) for x in self.xi_right],
            "coefficients": {"left": list(self.c_left), "right": list(self.c_right)},
            "P_l": self.P_left,
            "P_r": self.P_right,
            "P_rad": self.P_rad,
            "balance_defect": self.balance_defect,
            "unitarity_defect": self.unitarity_defect,
            "k": self.k,
            "incoming": self.incoming,
            "P_out": self.P_out,
            "P_in": self.P_in,
            "normalized": self.normalized(),
            "box": self.box,
        }

    def to_json(self, path=None) -> str:
        text = dumps17(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


class FluxResolutionError(RuntimeError):
    """Doubling the flux-box nodes changed the outgoing power too much."""


def _flux(problem, solution, half_side, nodes_per_side, order=20):
    dl, dr = problem.left.d, problem.right.d
    cl0, cr0 = problem.left.center, problem.right.center
    x, nrm, w = flux_box(half_side, nodes_per_side,
                         vertical_breaks=((cl0 - dl, cl0, cl0 + dl), (cr0 - dr, cr0, cr0 + dr)), order=order)
    g = mt.reconstruct_field(problem, solution, x.astype(complex), deriv="grad")
    dn = nrm[0] * g[1] + nrm[1] * g[2]
    return float(np.imag(np.sum(w * np.conj(g[0]) * dn)))


def power_balance(problem, solution, p_in: float, incoming: dict | None = None, half_side: float = 20.0,
                  nodes_per_side: int = 500, modes_left=None, modes_right=None, verify: bool = False,
                  verify_tol: float = 1e-6) -> ScatteringReport:
    """Guided, radiated and total outgoing power of a matched solution.

    ``P_out`` is the flux ``Im int conj(u) du/dnu`` of the outgoing field
    through the square of side ``2 half_side``; ``P_rad = P_out - P_l - P_r``
    and the balance defect is ``|P_out - p_in| / p_in``.  With ``verify`` the
    flux is recomputed with doubled Gauss order on the same panels and :class:`FluxResolutionError` is
    raised if ``P_out`` moves by more than ``verify_tol * p_in``.
    """
    ml = problem.left.modes() if modes_left is None else modes_left
    mr = problem.right.modes() if modes_right is None else modes_right
    cl = project_density(problem, solution, "left", ml)
    cr = project_density(problem, solution, "right", mr)
    pl = float(sum(m.xi * abs(c) ** 2 for m, c in zip(ml, cl)))
    pr = float(sum(m.xi * abs(c) ** 2 for m, c in zip(mr, cr)))
    pout = _flux(problem, solution, half_side, nodes_per_side)
    box = {"half_side": half_side, "nodes_per_side": nodes_per_side}
    if verify:
        # same panels at twice the order, so the check never reuses the nodes
        p2 = _flux(problem, solution, half_side, 2 * nodes_per_side, order=40)
        box["doubling_change"] = abs(p2 - pout) / p_in
        if box["doubling_change"] > verify_tol:
            raise FluxResolutionError(f"flux changed by {box['doubling_change']:.3g} under node doubling")
    return ScatteringReport(
        k=problem.k, incoming=incoming or {}, xi_left=[m.xi for m in ml], xi_right=[m.xi for m in mr],
        c_left=cl, c_right=cr, P_left=pl, P_right=pr, P_out=pout, P_rad=pout - pl - pr, P_in=float(p_in),
        balance_defect=abs(pout - p_in) / p_in,
        box=box,
    )


def solve_mode_incidence(problem, system, side: str, index: int, modes=None):
    """Matched solution for unit-amplitude incoming mode ``index`` of ``side``."""
    s = mt._side(problem, side)
    modes = s.modes() if modes is None else modes
    g1, g2 = mt.mode_data(problem, modes[index], side)
    return mt.solve_matched(system, g1, g2)


def scattering_matrix(problem, system, modes_left=None, modes_right=None):
    """Guided block of the scattering matrix in power-normalized form.

    Incoming channels are ordered (left modes, right modes); outgoing channels
    (right modes, left modes), so straight-through transmission sits on the
    diagonal.  Entry ``(o, i)`` is ``sqrt(xi_o / xi_i) c_o`` for unit incoming
    amplitude in channel ``i``.  Returns ``(S, xi_in, xi_out)``.
    """
    ml = problem.left.modes() if modes_left is None else modes_left
    mr = problem.right.modes() if modes_right is None else modes_right
    xi_in = np.array([m.xi for m in ml] + [m.xi for m in mr])
    xi_out = np.array([m.xi for m in mr] + [m.xi for m in ml])
    S = np.zeros((xi_out.size, xi_in.size), dtype=complex)
    for i, (side, j) in enumerate([("left", j) for j in range(len(ml))] + [("right", j) for j in range(len(mr))]):
        sol = solve_mode_incidence(problem, system, side, j, ml if side == "left" else mr)
        c = np.concatenate([project_density(problem, sol, "right", mr), project_density(problem, sol, "left", ml)])
        S[:, i] = np.sqrt(xi_out / xi_in[i]) * c
    return S, xi_in, xi_out


def radiation_check(field, R: float, angles=None, center=(0.0, 0.0), scaled: bool = False):
    """Sommerfeld-type statistic ``Re[conj(u) du/dr]`` on a circle of radius ``R``.

    ``field(x)`` must return ``(3, n)``: value, ``d/dx1``, ``d/dx2``.  For an
    outgoing field the statistic is ``O(R^-2)``, so doubling ``R`` divides it
    by about four.  Default angles avoid the guide axis and the junction line.
    With ``scaled`` the statistic is multiplied by ``R`` (then doubling ``R``
    halves it).  Returns ``(angles, statistic)``.
    """
    th = np.array([math.pi / 6, math.pi / 3, 2 * math.pi / 3, 5 * math.pi / 6,
                   -math.pi / 6, -math.pi / 3, -2 * math.pi / 3, -5 * math.pi / 6]) if angles is None \
        else np.asarray(angles, dtype=float)
    x = np.stack([center[0] + R * np.cos(th), center[1] + R * np.sin(th)]).astype(complex)
    g = np.asarray(field(x))
    dr = np.cos(th) * g[1] + np.sin(th) * g[2]
    stat = np.real(np.conj(g[0]) * dr)
    return th, stat * R if scaled else stat
