import csv

import numpy as np
import pytest

from conftest import grid
from openwg import transmission as tr
from openwg.kernels import HelmholtzKernel, greens

K, K1, D = 1.0, 2.0, 2.0
Z = np.zeros((2, 1))


def source_data(problem, y, kk, sign):
    """``sign * (G_kk, dG_kk/dn)`` at the contour nodes for a point source ``y``."""
    c = problem.contour
    g = HelmholtzKernel(("S", "Sp"), kk)(c.x, c.normal, np.reshape(y, (2, 1)).astype(complex), Z)
    return sign * g[0], sign * g[1]


def smooth_data(problem, y=(0.5, 6.0)):
    """A smooth pair of jumps: ``G_k - G_k1`` for a distant source."""
    c = problem.contour
    g = HelmholtzKernel(("S", "Sp"), K, K1)(c.x, c.normal, np.reshape(y, (2, 1)).astype(complex), Z)
    return g[0], g[1]


def window_targets(n=12, margin=0.5):
    x = grid(-9.5, 9.5, n)
    return x[:, np.abs(np.abs(x[1]) - D) >= margin]


def test_equal_wavenumbers_give_identity():
    p = tr.waveguide_problem(K, K, D, n_panels=72)
    s = tr.assemble_transmission(p, keep_matrix=True)
    assert np.array_equal(s.matrix, np.eye(2 * s.n))


def test_condition_number(guide):
    _, s = guide
    assert s.cond < 1e4


def test_zero_data_and_residual(guide):
    p, s = guide
    z = tr.solve_transmission(s, np.zeros(s.n), np.zeros(s.n))
    assert np.all(z.mu == 0) and np.all(z.rho == 0)
    j, jn = smooth_data(p)
    dens = tr.solve_transmission(s, j, jn)
    rhs = np.concatenate([-j, jn])
    res = s.matrix @ np.concatenate([dens.mu, dens.rho]) - rhs
    assert np.linalg.norm(res) <= 1e-12 * np.linalg.norm(rhs)


def test_bad_data_shape(guide):
    _, s = guide
    with pytest.raises(ValueError):
        tr.solve_transmission(s, np.zeros(3), np.zeros(3))


@pytest.mark.parametrize("y,inside", [((0.3, 0.5), True), ((-1.0, 3.5), False)])
def test_analytic_source(guide, y, inside):
    p, s = guide
    kk = K if inside else K1
    dens = tr.solve_transmission(s, *source_data(p, y, kk, -1.0 if inside else 1.0))
    x = window_targets()
    u = tr.evaluate_field(p, dens, x.astype(complex))
    ins = np.abs(x[1]) < D
    exact = greens(kk, x, np.reshape(y, (2, 1)))
    ref = np.where(ins != inside, exact, 0.0)
    assert np.max(np.abs(u - ref)) <= 1e-11


def test_panel_doubling(guide, guide_fine):
    x = window_targets(6)
    out = []
    for p, s in (guide, guide_fine):
        dens = tr.solve_transmission(s, *smooth_data(p))
        out.append(tr.evaluate_field(p, dens, x.astype(complex)))
    assert np.max(np.abs(out[0] - out[1])) <= 1e-10


def test_interface_jumps(guide):
    p, s = guide
    j, jn = smooth_data(p)
    dens = tr.solve_transmission(s, j, jn)
    x0 = np.array([1.3, D])
    deltas = np.array([2e-3, 1e-3, 5e-4])
    jumps, djumps = [], []
    for dl in deltas:
        t = np.array([[x0[0], x0[0]], [D + dl, D - dl]], dtype=complex)
        g = tr.evaluate_field(p, dens, t, "grad")
        jumps.append(g[0, 0] - g[0, 1])
        djumps.append(g[2, 0] - g[2, 1])  # normal is +x2 on the top edge
    limit = np.polyval(np.polyfit(deltas, jumps, 2), 0.0)
    dlimit = np.polyval(np.polyfit(deltas, djumps, 2), 0.0)
    kern = HelmholtzKernel(("S", "Sg2"), K, K1)(x0.reshape(2, 1).astype(complex), Z,
                                                np.array([[0.5], [6.0]], dtype=complex), Z)
    assert abs(limit + kern[0, 0]) <= 1e-9
    assert abs(dlimit + kern[1, 0]) <= 1e-7


@pytest.mark.parametrize("x0", [(1.0, 3.1), (-2.0, 0.4)])
def test_helmholtz_stencil(guide, x0):
    p, s = guide
    dens = tr.solve_transmission(s, *smooth_data(p))
    h = 1e-2
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
    off = np.array([-2, -1, 0, 1, 2]) * h
    pts = [(x0[0] + o, x0[1]) for o in off] + [(x0[0], x0[1] + o) for o in off]
    u = tr.evaluate_field(p, dens, np.array(pts, dtype=complex).T)
    lap = c @ u[:5] + c @ u[5:]
    kk = p.wavenumber(np.reshape(x0, (2, 1)))[0]
    assert abs(lap + kk * kk * u[2]) <= 1e-5 * max(1.0, abs(u[2]))


def test_density_decays_at_truncation(guide):
    p, s = guide
    dens = tr.solve_transmission(s, *smooth_data(p))
    c = p.contour
    tp = np.abs(c.t).reshape(-1, 16).mean(axis=1)
    last = np.repeat(np.isclose(tp, tp.max()), 16)  # outermost panel at each end of each edge
    scale = max(np.abs(dens.mu).max(), np.abs(dens.rho).max())
    assert np.abs(dens.mu[last]).max() <= 1e-12 * scale
    assert np.abs(dens.rho[last]).max() <= 1e-12 * scale


def test_linearity(guide):
    p, s = guide
    a = smooth_data(p)
    b = smooth_data(p, (-2.0, -5.0))
    da = tr.solve_transmission(s, *a)
    db = tr.solve_transmission(s, *b)
    al, be = 0.3 - 1.2j, 2.0
    dc = tr.solve_transmission(s, al * a[0] + be * b[0], al * a[1] + be * b[1])
    assert np.max(np.abs(dc.mu - (al * da.mu + be * db.mu))) <= 1e-12 * np.abs(dc.mu).max()


def test_guide_greens_reduces_to_free_space_when_k1_equals_k():
    p = tr.waveguide_problem(K, K, D, n_panels=72)
    s = tr.assemble_transmission(p)
    x, y = (1.0, 5.0), (-3.0, 0.5)
    assert abs(tr.greens_waveguide(s, x, y) - greens(K, np.array(x), np.array(y))) <= 1e-14


def test_guide_greens_reciprocity_and_continuity(guide):
    _, s = guide
    g = tr.WaveguideGreens(s)
    for x, y in [((1.0, 5.0), (-3.0, -6.0)), ((0.5, 0.7), (-2.0, 4.0)), ((1.0, -1.0), (-1.5, 0.3))]:
        assert abs(g(x, y) - g(y, x)) <= 1e-9
    y = (-1.0, 0.5)
    deltas = np.array([2e-3, 1e-3, 5e-4])
    above = [g((1.3, D + dl), y) for dl in deltas]
    below = [g((1.3, D - dl), y) for dl in deltas]
    a = np.polyval(np.polyfit(deltas, above, 2), 0.0)
    b = np.polyval(np.polyfit(deltas, below, 2), 0.0)
    assert abs(a - b) <= 1e-9


def test_guide_greens_derivatives(guide):
    _, s = guide
    g = tr.WaveguideGreens(s)
    x, y, h = (0.4, 3.0), (-1.0, 0.5), 1e-4
    fdx = (g((x[0] + h, x[1]), y) - g((x[0] - h, x[1]), y)) / (2 * h)
    fdy = (g(x, (y[0] + h, y[1])) - g(x, (y[0] - h, y[1]))) / (2 * h)
    assert abs(g(x, y, (1, 0)) - fdx) <= 1e-7
    assert abs(g(x, y, (0, 1)) - fdy) <= 1e-7
    assert abs(g(x, y, (1, 0)) + g(x, y, (0, 1))) <= 1e-9
    assert abs(g(x, y, (2, 0)) + g(x, y, (1, 1))) <= 1e-15
    with pytest.raises(ValueError):
        g(x, x)
    with pytest.raises(ValueError):
        g(x, y, (2, 1))


def test_density_csv(tmp_path, guide):
    p, s = guide
    dens = tr.solve_transmission(s, *smooth_data(p))
    f = tmp_path / "d.csv"
    tr.write_density_csv(dens, f)
    rows = list(csv.reader(open(f)))
    assert rows[0] == ["node", "re_mu", "im_mu", "re_rho", "im_rho"]
    assert len(rows) == s.n + 1
    assert complex(float(rows[5][1]), float(rows[5][2])) == dens.mu[4]
