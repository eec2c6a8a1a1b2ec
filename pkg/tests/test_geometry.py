import csv
import math

import numpy as np
import pytest

from openwg import geometry as geo


def test_psi_vanishes_at_origin_and_on_window():
    c = geo.Complexification(L=10.0)
    assert c.psi(0.0) == 0.0
    t = np.linspace(-10.0, 10.0, 2001)
    assert np.max(np.abs(c.psi(t))) <= 1e-15


def test_psi_is_odd_and_monotone():
    c = geo.Complexification(L=10.0)
    t = np.linspace(0.0, 80.0, 4001)
    assert np.max(np.abs(c.psi(-t) + c.psi(t))) <= 1e-15
    assert np.all(np.diff(c.psi(np.linspace(-80, 80, 8001))) >= 0)


def test_truncation_radius_for_k1():
    c = geo.Complexification(L=10.0)
    assert c.psi(48.0) * 1.0 >= -math.log(1e-17)
    assert abs(c.psi(48.0)) >= 39.0
    assert c.truncation(1.0) == pytest.approx(48.0)


def test_complexification_map():
    c = geo.Complexification(L=10.0)
    t = np.array([-50.0, 0.0, 5.0, 45.0])
    z = geo.complexification_map(t, c)
    assert np.all(z.real == t)
    assert np.allclose(z.imag, c.psi(t), rtol=0, atol=0)


def test_waveguide_edges_reproduce_reference_mesh():
    c = geo.build_contour("waveguide-edges", {"d": 2.0, "L": 10.0, "n_panels": 72})
    assert c.n_panels == 72
    assert c.n_nodes == 72 * 16
    assert set(np.round(c.x[1].real, 12)) == {-2.0, 2.0}
    assert np.all(c.x[1].imag == 0)
    win = np.abs(c.t) <= 10.0
    assert np.max(np.abs(c.x[0][win].imag)) <= 1e-15
    for tag in ("top", "bottom"):
        m = c.nodes_on_pieces([tag])
        assert np.all(np.diff(c.x[0][m].imag) >= 0)
    assert np.allclose(np.abs(c.normal[1]), 1.0) and np.all(c.normal[0] == 0)


def test_junction_line_reference_mesh():
    c = geo.build_contour("junction-line", {"L": 10.0, "n_panels": 96})
    assert c.n_panels == 96
    assert np.all(c.x[0] == 0)
    assert np.all(np.diff(c.x[1].imag) >= 0)


def test_circle_circumference():
    c = geo.build_contour("compact-loop", {"radius": 1.0, "n_panels": 12})
    assert abs(np.sum(c.w) - 2 * math.pi) <= 1e-12
    assert c.cplx is None


def test_polygon_loop_perimeter():
    c = geo.build_contour("compact-loop", {"vertices": [(0, 0), (2, 0), (2, 1), (0, 1)], "n_panels": 2})
    assert abs(np.sum(c.w) - 6.0) <= 1e-13


def test_open_arc_weights_sum_to_half_length_times_pi():
    c = geo.build_contour("open-arc", {"a": (-1.0, 2.0), "b": (1.0, 2.0), "n_panels": 4})
    assert abs(np.sum(c.w) - math.pi) <= 1e-13
    assert np.allclose(c.x[1], 2.0)


def test_im_r2_nonnegative_for_all_node_pairs():
    c = geo.waveguide_edges(2.0, 10.0, 72)
    d1 = c.x[0][:, None] - c.x[0][None, :]
    d2 = c.x[1][:, None] - c.x[1][None, :]
    r2 = d1 * d1 + d2 * d2
    assert np.min(r2.imag) >= -1e-12 * np.max(np.abs(r2))
    j = geo.junction_line(10.0, 48)
    allx = np.concatenate([c.x, j.x], axis=1)
    d1 = allx[0][:, None] - allx[0][None, :]
    d2 = allx[1][:, None] - allx[1][None, :]
    # edge nodes are complex in x1 only, line nodes in x2 only
    r2 = d1 * d1 + d2 * d2
    assert np.min(r2.imag) >= -1e-12 * np.max(np.abs(r2))


def test_refinement_keeps_window_assignment():
    cplx = geo.Complexification(L=10.0)
    for n in (72, 144):
        c = geo.waveguide_edges(2.0, 10.0, n)
        win = np.abs(c.t) <= 10.0
        assert np.all(np.abs(cplx.psi(c.t[win])) <= 1e-15)
        assert np.all(np.abs(c.x[0][~win].imag) > 0)


def test_truncation_bound_respected():
    c = geo.waveguide_edges(2.0, 10.0, 72, k=1.0)
    assert c.truncation == pytest.approx(48.0)
    assert np.max(np.abs(c.t)) < 48.0
    tail = np.exp(-1.0 * c.cplx.psi(c.truncation))
    assert tail <= 1e-17


def test_coarse_resolution_warns():
    with pytest.warns(geo.ContourWarning):
        geo.waveguide_edges(2.0, 10.0, 8, k=1.0)


def test_invalid_specs():
    with pytest.raises(ValueError):
        geo.waveguide_edges(-1.0)
    with pytest.raises(ValueError):
        geo.build_contour("spiral", {})
    with pytest.raises(ValueError):
        geo.open_arc((1.0, 1.0), (1.0, 1.0))


def test_contour_csv(tmp_path):
    c = geo.open_arc((0.0, 0.0), (1.0, 0.0), 2)
    p = tmp_path / "c.csv"
    geo.write_contour_csv(c, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["panel", "node", "re_x1", "im_x1", "re_x2", "im_x2", "re_w", "im_w", "n1", "n2"]
    assert len(rows) == 1 + c.n_nodes
    assert float(rows[1][2]) == c.x[0, 0].real
