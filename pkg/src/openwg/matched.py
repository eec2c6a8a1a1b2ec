"""
Junction of two semi-infinite guides along the line ``x1 = 0``.

The outgoing fields are ``v_s = S_{q_s}[tau] + D_{q_s}[sigma]`` on side
``s`` (left ``x1 < 0``, right ``x1 > 0``), the double layer taken with the
source normal ``(1, 0)``, i.e. ``d/dy1``.  With the jump relations of the
free-space parts the transmission conditions become, on the junction line,

    sigma + (D_r - D_l) sigma + (S_r - S_l) tau      = v_l^in - v_r^in
    (N_l - N_r) sigma + tau + (S'_l - S'_r) tau       = d/dx1 (v_r^in - v_l^in)

where ``S, D, S', N`` use ``G_q``, ``d/dy1 G_q``, ``d/dx1 G_q`` and
``d2/dx1dy1 G_q``.  The principal-value blocks ``D`` and ``S'`` vanish for
guides symmetric in ``x1`` and are assembled anyway as a check.

The junction line is complexified, ``x2 = t + i psi(t)``, and every kernel
is split into the free part ``G_{k(x)}`` (weakly singular differences,
assembled with singular quadrature) and ``G_out`` (smooth away from the
guide edges, from a compressed or direct evaluator).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import geometry as geo
from . import transmission as tr
from .compression import CompressedGreens, build_compressed, load_compressed, save_compressed, cache_key
from .kernels import HelmholtzKernel, layer_matrix
from .modes import find_modes

__all__ = [
    "GuideSide",
    "MatchedProblem",
    "MatchedSystem",
    "MatchedSolution",
    "make_side",
    "matched_problem",
    "assemble_matched",
    "solve_matched",
    "reconstruct_field",
    "naive_out_field",
    "point_source_data",
    "mode_data",
    "interface_residual",
    "write_field_csv",
]


@dataclass
class GuideSide:
    """One semi-infinite guide: factored transmission system and ``G_out`` evaluator."""

    k1: float
    d: float
    system: tr.TransmissionSystem
    greens: object  # CompressedGreens or WaveguideGreens: needs out_matrix(x, y, deriv)
    center: float = 0.0

    @property
    def k(self) -> float:
        return self.system.problem.k

    def wavenumber(self, x) -> np.ndarray:
        return self.system.problem.wavenumber(np.asarray(x))

    def modes(self):
        """Guided modes of this guide, fundamental first."""
        return find_modes(self.k, self.k1, self.d, center=self.center)

    def greens_full(self, x, y, deriv=(0, 0)):
        """Direct ``G_q`` matrix (free part plus outgoing part)."""
        return tr.WaveguideGreens(self.system).matrix(x, y, deriv)


@dataclass
class MatchedProblem:
    k: float
    left: GuideSide
    right: GuideSide
    contour: geo.Contour
    meta: dict = field(default_factory=dict)


@dataclass
class MatchedSystem:
    problem: MatchedProblem
    matrix: np.ndarray
    lu: tuple
    rcond: float
    diag_block_max: float

    @property
    def cond(self) -> float:
        return 1.0 / self.rcond if self.rcond > 0 else np.inf


@dataclass
class MatchedSolution:
    sigma: np.ndarray
    tau: np.ndarray
    residual: float = np.nan


def make_side(k: float, k1: float, d: float, L: float = 10.0, n_panels: int = 72, levels: int = 14,
              compressed: bool = True, tolerance: float = 1e-10, order: int = 20, order_near: int = 60,
              cache_dir=None, center: float = 0.0, truncation: float | None = None) -> GuideSide:
    """Factor one guide's transmission system and build its ``G_out`` evaluator.

    The guide edges are graded dyadically (``levels`` bisections) toward
    ``x1 = 0`` where the junction line crosses them.
    """
    prob = tr.waveguide_problem(k, k1, d, L=L, n_panels=n_panels, center=center,
                                refine_at=[0.0] if levels else [], levels=levels, truncation=truncation)
    system = tr.assemble_transmission(prob)
    if not compressed:
        return GuideSide(k1, d, system, tr.WaveguideGreens(system), center)
    cg = None
    path = None
    if cache_dir is not None:
        import os
        key = cache_key(k, k1, d, L, tolerance, order, order_near, f"{n_panels}/{levels}/{center}/{truncation}")
        path = os.path.join(cache_dir, f"owgc-{key}.bin")
        if os.path.exists(path):
            cg = load_compressed(path)
    if cg is None:
        cg = build_compressed(system, tolerance, order, order_near)
        if path is not None:
            import os
            os.makedirs(cache_dir, exist_ok=True)
            save_compressed(cg, path)
    return GuideSide(k1, d, system, cg, center)


def matched_problem(k: float, left: tuple, right: tuple, L: float = 10.0, n_panels: int = 96,
                    guide_panels: int = 72, guide_levels: int = 14, hat_levels: int = 0,
                    truncation: float | None = None, compressed: bool = True, tolerance: float = 1e-10,
                    order: int = 20, order_near: int = 60, cache_dir=None) -> MatchedProblem:
    """Junction of guides ``left = (k1_l, d_l)`` and ``right = (k1_r, d_r)``.

    The junction line has ``n_panels`` panels, breakpoints at the guide
    edges and optional dyadic grading (``hat_levels``) toward them.
    """
    (k1l, dl), (k1r, dr) = left, right
    edges = sorted({-dl, dl, -dr, dr})
    hat = geo.junction_line(L, n_panels, k=k, truncation=truncation, fixed=edges,
                            refine_at=edges if hat_levels else (), levels=hat_levels)
    sl = make_side(k, k1l, dl, L, guide_panels, guide_levels, compressed, tolerance, order, order_near, cache_dir,
                   truncation=truncation)
    sr = make_side(k, k1r, dr, L, guide_panels, guide_levels, compressed, tolerance, order, order_near, cache_dir,
                   truncation=truncation)
    meta = {"L": L, "truncation": hat.truncation, "n_panels": n_panels, "guide_panels": guide_panels,
            "guide_levels": guide_levels,
            "hat_levels": hat_levels, "tolerance": tolerance, "order": order, "order_near": order_near,
            "compressed": compressed}
    return MatchedProblem(k, sl, sr, hat, meta)


def _free_difference(problem: MatchedProblem, targets, on_contour: bool):
    """Free-space parts of ``G_r - G_l`` for selectors ``(S, d/dy1, d/dx1, d2/dx1dy1)``.

    Returns ``(4, nt, m)`` quadrature matrices on the junction line.
    """
    c = problem.contour
    x = np.asarray(targets, dtype=complex).reshape(2, -1)
    nt = x.shape[1]
    kl = problem.left.wavenumber(x)
    kr = problem.right.wavenumber(x)
    out = np.zeros((4, nt, c.n_nodes), dtype=complex)
    nx = np.tile(np.array([[1.0], [0.0]]), (1, nt))
    for a, b in sorted(set(zip(kr.tolist(), kl.tolist()))):
        if a == b:
            continue
        sel = np.nonzero((kr == a) & (kl == b))[0]
        kern = HelmholtzKernel(("S", "D", "Sg1", "Sg1y1"), a, b)
        kw = {}
        if on_contour:
            kw = {"tpanel": c.panel_of_node[sel], "ts0": c.node_s[sel]}
        out[:, sel] = layer_matrix(kern, c, x[:, sel], nx[:, sel], **kw)
    return out


def assemble_matched(problem: MatchedProblem) -> MatchedSystem:
    """Assemble and factor the junction system ``Id + [[A11, A12], [A21, A22]]``."""
    c = problem.contour
    z = c.x
    w = c.w
    m = c.n_nodes
    free = _free_difference(problem, z, on_contour=True)

    def out_diff(deriv):
        return (problem.right.greens.out_matrix(z, z, deriv)
                - problem.left.greens.out_matrix(z, z, deriv)) * w[None, :]

    a11 = free[1] + out_diff((0, 1))
    a12 = free[0] + out_diff((0, 0))
    a22 = -(free[2] + out_diff((1, 0)))
    a21 = -(free[3] + out_diff((1, 1)))
    a = np.block([[a11, a12], [a21, a22]])
    diag_max = float(max(np.abs(a11).max(), np.abs(a22).max()))
    a[np.diag_indices(2 * m)] += 1.0
    if not np.all(np.isfinite(a)):
        raise tr.NumericalFailure("non-finite entries in junction matrix")
    lu = sla.lu_factor(a, check_finite=False)
    rcond = tr.condition_estimate(a, lu)
    if rcond < 1e-14:
        raise tr.NumericalFailure("junction matrix numerically singular")
    return MatchedSystem(problem, a, lu, rcond, diag_max)


def solve_matched(system: MatchedSystem, jump, jump_dx1) -> MatchedSolution:
    """Solve for ``(sigma, tau)`` given ``v_r^in - v_l^in`` and its ``d/dx1`` at the nodes."""
    jump = np.asarray(jump, dtype=complex)
    jump_dx1 = np.asarray(jump_dx1, dtype=complex)
    m = system.problem.contour.n_nodes
    if jump.shape[0] != m or jump_dx1.shape[0] != m:
        raise ValueError("data must be sampled at every junction node")
    rhs = np.concatenate([-jump, jump_dx1], axis=0)
    sol = sla.lu_solve(system.lu, rhs, check_finite=False)
    res = np.linalg.norm(system.matrix @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.all(np.isfinite(sol)):
        raise tr.NumericalFailure("non-finite junction densities")
    return MatchedSolution(sol[:m], sol[m:], float(res))


# ---------------------------------------------------------------------------
# incoming data


def point_source_data(problem: MatchedProblem, x0, side: str = "left", sign: float = -1.0):
    """Jump data for ``v_side^in = sign * G_{q_side}(.; x0)`` and zero on the other side.

    Returns ``(v_r^in - v_l^in, d/dx1 (v_r^in - v_l^in))`` at the junction nodes.
    """
    s = _side(problem, side)
    z = problem.contour.x
    y = np.asarray(x0, dtype=complex).reshape(2, 1)
    g = s.greens_full(z, y)[:, 0]
    gx = s.greens_full(z, y, (1, 0))[:, 0]
    f = 1.0 if side == "right" else -1.0
    return f * sign * g, f * sign * gx


def mode_data(problem: MatchedProblem, mode, side: str = "left", amplitude: complex = 1.0):
    """Jump data for an incoming guide mode ``amplitude * exp(+-i xi x1) v(x2)``.

    A left mode travels toward ``+x1`` and a right mode toward ``-x1``.
    """
    x2 = problem.contour.x[1]
    v = amplitude * mode(x2)
    if side == "left":
        return -v, -1j * mode.xi * v
    if side == "right":
        return v, -1j * mode.xi * v
    raise ValueError("side must be 'left' or 'right'")


def _side(problem, side) -> GuideSide:
    if side == "left":
        return problem.left
    if side == "right":
        return problem.right
    raise ValueError("side must be 'left' or 'right'")


# ---------------------------------------------------------------------------
# field reconstruction


def _out_jump_data(side: GuideSide, contour: geo.Contour, sol: MatchedSolution):
    """Jump data on the guide edges of the summed incoming field of the junction sources."""
    gc = side.system.problem.contour
    z = contour.x
    ny = np.array([1.0, 0.0]).reshape(2, 1, 1)
    kern = HelmholtzKernel(("S", "Sp", "D", "Dp"), side.k, side.k1)
    wt = sol.tau * contour.w
    ws = sol.sigma * contour.w
    jv = np.zeros(gc.n_nodes, dtype=complex)
    jn = np.zeros(gc.n_nodes, dtype=complex)
    step = max(1, 2_000_000 // max(contour.n_nodes, 1))
    for i0 in range(0, gc.n_nodes, step):
        sl = slice(i0, i0 + step)
        v = kern(gc.x[:, sl, None], gc.normal[:, sl, None], z[:, None, :], ny)
        jv[sl] = v[0] @ wt + v[2] @ ws
        jn[sl] = v[1] @ wt + v[3] @ ws
    return jv, jn


def _side_field(problem: MatchedProblem, side: GuideSide, sol: MatchedSolution, x, deriv: str = "value"):
    """Outgoing field of one side at targets ``x``: free part plus ``G_out`` part."""
    c = problem.contour
    kx = side.wavenumber(x)
    kinds = ("D", "S", "Dg1", "Sg1", "Dg2", "Sg2") if deriv == "grad" else ("D", "S")
    nout = len(kinds) // 2
    val = np.zeros((nout, x.shape[1]), dtype=complex)
    for kk in np.unique(kx):
        sel = kx == kk
        m = layer_matrix(HelmholtzKernel(kinds, kk), c, x[:, sel])
        for i in range(nout):
            val[i, sel] = m[2 * i] @ sol.sigma + m[2 * i + 1] @ sol.tau
    jv, jn = _out_jump_data(side, c, sol)
    dens = tr.solve_transmission(side.system, jv, jn)
    val += np.reshape(tr.evaluate_field(side.system.problem, dens, x, deriv), (nout, -1))
    return val if deriv == "grad" else val[0]


def reconstruct_field(problem: MatchedProblem, solution: MatchedSolution, targets, incoming=None,
                      deriv: str = "value"):
    """Outgoing field ``v_l`` (``x1 < 0``) or ``v_r`` (``x1 > 0``) at targets.

    The ``G_out`` part of each side is obtained from one transmission solve
    whose data is the summed field of all junction sources.  ``incoming``
    (callable ``(x, side, deriv) -> values``) is added to give the total
    field.  ``deriv='grad'`` returns ``(3, nt)``: value, ``d/dx1``, ``d/dx2``.
    Targets may be complex in ``x2`` (analytic continuation).
    """
    x = np.asarray(targets, dtype=complex).reshape(2, -1)
    x1 = np.real(x[0])
    if np.any(x1 == 0):
        raise ValueError("targets on the junction line")
    shape = (3, x.shape[1]) if deriv == "grad" else (x.shape[1],)
    out = np.zeros(shape, dtype=complex)
    for name, sel in (("left", x1 < 0), ("right", x1 > 0)):
        if not sel.any():
            continue
        s = _side(problem, name)
        out[..., sel] = _side_field(problem, s, solution, x[:, sel], deriv)
        if incoming is not None:
            out[..., sel] += incoming(x[:, sel], name, deriv)
    return out


def naive_out_field(problem: MatchedProblem, solution: MatchedSolution, targets, side: str):
    """Density-by-density ``G_out`` part of one side (one source per junction node)."""
    s = _side(problem, side)
    c = problem.contour
    x = np.asarray(targets, dtype=complex).reshape(2, -1)
    wg = tr.WaveguideGreens(s.system)
    g = wg.out_matrix(x, c.x, (0, 0))
    gy = wg.out_matrix(x, c.x, (0, 1))
    return g @ (solution.tau * c.w) + gy @ (solution.sigma * c.w)


def interface_residual(problem: MatchedProblem, solution: MatchedSolution, x2, incoming=None,
                       delta: float = 1e-3):
    """Mismatch of the total field and of ``d/dx1`` across ``x1 = 0`` at heights ``x2``.

    One-sided limits and derivatives come from the quadratic through the
    samples at ``x1 = +-delta, +-2 delta, +-3 delta``.
    """
    x2 = np.asarray(x2, dtype=float).ravel()
    pts = []
    for s in (-1.0, 1.0):
        for j in (1, 2, 3):
            pts.append(np.stack([np.full_like(x2, s * j * delta), x2]))
    x = np.concatenate(pts, axis=1).astype(complex)
    u = reconstruct_field(problem, solution, x, incoming).reshape(2, 3, -1)
    lim = 3 * u[:, 0] - 3 * u[:, 1] + u[:, 2]
    h = np.array([-delta, delta])[:, None]
    der = (-2.5 * u[:, 0] + 4.0 * u[:, 1] - 1.5 * u[:, 2]) / h
    return np.abs(lim[0] - lim[1]), np.abs(der[0] - der[1])


def write_field_csv(targets, values, path) -> None:
    """CSV ``x1,x2,re_u,im_u``."""
    x = np.real(np.asarray(targets)).reshape(2, -1)
    v = np.asarray(values).ravel()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "x2", "re_u", "im_u"])
        for a, b, c in zip(x[0], x[1], v):
            wr.writerow([f"{a:.17g}", f"{b:.17g}", f"{c.real:.17g}", f"{c.imag:.17g}"])
