import math

import numpy as np
import pytest
from scipy.special import hankel1, jv

from openwg import geometry as geo
from openwg.kernels import HelmholtzKernel, greens, greens_grad, kernel_eval, layer_matrix, layer_potential

K = 1.3
R = 1.5


@pytest.fixture(scope="module")
def circle():
    return geo.build_contour("compact-loop", {"radius": R, "n_panels": 16})


def single_layer_exact(r):
    """Single layer of unit density on the circle |y| = R (addition theorem)."""
    c = 0.25j * 2 * math.pi * R
    return np.where(r < R, c * hankel1(0, K * R) * jv(0, K * r), c * jv(0, K * R) * hankel1(0, K * r))


def double_layer_exact(r):
    """Double layer (outward source normal) of unit density on |y| = R."""
    c = -0.25j * 2 * math.pi * R * K
    return np.where(r < R, c * hankel1(1, K * R) * jv(0, K * r), c * jv(1, K * R) * hankel1(0, K * r))


def test_symmetry_and_reciprocity():
    x, y = (0.3, -1.2), (2.1, 0.4)
    n = (0.6, 0.8)
    assert kernel_eval("single", K, x, y) == kernel_eval("single", K, y, x)
    assert abs(kernel_eval("double", K, x, y, ny=n) - kernel_eval("single-prime", K, y, x, nx=n)) <= 1e-15


def test_reference_value():
    assert abs(kernel_eval("single", 1.0, (0.0, 0.0), (1.0, 0.0)) - 0.25j * hankel1(0, 1.0)) <= 1e-16


def test_helmholtz_equation_by_finite_differences():
    h = 1e-3
    y = np.array([0.2, -0.1])
    for x in [(1.0, 0.5), (-2.0, 3.0), (0.7, -0.9)]:
        x = np.array(x)
        lap = sum(greens(K, x + s * h * e, y) for e in np.eye(2) for s in (1, -1)) - 4 * greens(K, x, y)
        assert abs(lap / h ** 2 + K ** 2 * greens(K, x, y)) <= 1e-5


def test_gradient_by_finite_differences():
    h = 1e-6
    x, y = np.array([0.4, 1.1]), np.array([-0.5, 0.2])
    g = greens_grad(K, x, y)
    for i, e in enumerate(np.eye(2)):
        fd = (greens(K, x + h * e, y) - greens(K, x - h * e, y)) / (2 * h)
        assert abs(g[i] - fd) <= 1e-8


def test_zero_density_gives_zero_field(circle):
    t = np.array([[0.0, 3.0, 1.4], [0.1, 0.0, 0.2]])
    for kind in ("single", "double"):
        assert np.all(layer_potential(kind, K, circle, np.zeros(circle.n_nodes), t) == 0)


def test_single_layer_at_centre(circle):
    v = layer_potential("single", K, circle, np.ones(circle.n_nodes), np.zeros((2, 1)))
    ref = 0.25j * 2 * math.pi * R * hankel1(0, K * R)
    assert abs(v[0] - ref) <= 1e-12


@pytest.mark.parametrize("rr", [0.3, 0.9 * R, 0.995 * R, 1.005 * R, 1.1 * R, 4.0])
def test_layers_near_and_far_from_circle(circle, rr):
    ang = 0.37
    t = np.array([[rr * math.cos(ang)], [rr * math.sin(ang)]])
    s = layer_potential("single", K, circle, np.ones(circle.n_nodes), t)
    d = layer_potential("double", K, circle, np.ones(circle.n_nodes), t)
    assert abs(s[0] - single_layer_exact(rr)) <= 1e-10
    assert abs(d[0] - double_layer_exact(rr)) <= 1e-10


def test_double_layer_jump(circle):
    # outside minus inside tends to the density as the target approaches the curve
    ang = 1.1
    e = np.array([[math.cos(ang)], [math.sin(ang)]])
    deltas = (4e-3, 2e-3, 1e-3)
    jumps = []
    for delta in deltas:
        out = layer_potential("double", K, circle, np.ones(circle.n_nodes), (R + delta) * e)[0]
        inn = layer_potential("double", K, circle, np.ones(circle.n_nodes), (R - delta) * e)[0]
        jumps.append(out - inn)
    # jump(delta) = 1 + a delta + b delta^2 + ...; quadratic extrapolation to 0
    extrap = np.polyval(np.polyfit(deltas, jumps, 2), 0.0)
    assert abs(extrap - 1.0) <= 1e-6


def test_window_values_equal_real_kernel():
    xr = np.array([[0.3, -2.0], [1.0, 0.5]])
    yr = np.array([[1.7, 4.0], [-0.2, -1.0]])
    n = np.array([[0.0, 1.0], [1.0, 0.0]])
    kinds = ("S", "D", "Sp", "Dp", "Sg1", "Sg2", "Sy1", "Dg1", "Dg2", "Dy1", "Sg1y1")
    k = HelmholtzKernel(kinds, K)
    a = k(xr, n, yr, n)
    b = k(xr.astype(complex) + 0j, n, yr.astype(complex) + 0j, n)
    assert np.array_equal(a, b)


def test_complexified_points_continue_analytically():
    # f(z) = G evaluated along x1 = s + i s^2 / 5 agrees with direct hankel of sqrt(r^2)
    y = np.array([0.0, 0.0])
    for s in (0.5, 2.0, 6.0):
        x = np.array([s + 1j * s * s / 5, 1.0])
        r = np.sqrt(x[0] ** 2 + x[1] ** 2)
        assert abs(greens(K, x, y) - 0.25j * hankel1(0, K * r)) <= 1e-14 * max(1, abs(hankel1(0, K * r)))


def test_derivative_components_by_finite_differences():
    h = 1e-6
    x, y = np.array([0.4, 1.1]), np.array([-0.5, 0.2])
    ny = np.array([0.6, -0.8])
    z = np.zeros(2)
    k = HelmholtzKernel(("S", "D", "Sg1", "Sy1", "Dg1", "Dy1", "Sg1y1"), K)
    v = k(x, z, y, ny)
    e1 = np.array([h, 0.0])
    S = lambda a, b: k(a, z, b, ny)[0]
    D = lambda a, b: k(a, z, b, ny)[1]
    assert abs(v[2] - (S(x + e1, y) - S(x - e1, y)) / (2 * h)) <= 1e-8
    assert abs(v[3] - (S(x, y + e1) - S(x, y - e1)) / (2 * h)) <= 1e-8
    assert abs(v[4] - (D(x + e1, y) - D(x - e1, y)) / (2 * h)) <= 1e-8
    assert abs(v[5] - (D(x, y + e1) - D(x, y - e1)) / (2 * h)) <= 1e-8
    Sg1 = lambda a, b: k(a, z, b, ny)[2]
    assert abs(v[6] - (Sg1(x, y + e1) - Sg1(x, y - e1)) / (2 * h)) <= 1e-8
    dfd = ny[0] * (S(x, y + e1) - S(x, y - e1)) / (2 * h) + ny[1] * (
        S(x, y + [0, h]) - S(x, y - [0, h])) / (2 * h)
    assert abs(v[1] - dfd) <= 1e-8


def test_difference_kernel():
    kinds = ("S", "D", "Sp", "Dp")
    x, y = np.array([0.4, 1.1]), np.array([-0.5, 0.2])
    nx, ny = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    diff = HelmholtzKernel(kinds, K, 2.0)(x, nx, y, ny)
    ref = HelmholtzKernel(kinds, K)(x, nx, y, ny) - HelmholtzKernel(kinds, 2.0)(x, nx, y, ny)
    assert np.max(np.abs(diff - ref)) <= 1e-14
    assert np.all(HelmholtzKernel(kinds, K, K)(x, nx, y, ny) == 0)
    # the single-layer difference stays bounded at r -> 0
    near = HelmholtzKernel(("S",), K, 2.0)(np.array([1e-9, 0.0]), nx, np.zeros(2), ny)[0]
    assert abs(near - (-math.log(K / 2.0) / (2 * math.pi))) <= 1e-7


def test_kernel_eval_errors():
    with pytest.raises(ValueError):
        kernel_eval("single", K, (1.0, 1.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        kernel_eval("single", K, (1.0 - 1j, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        kernel_eval("triple", K, (1.0, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        HelmholtzKernel(("S",), -1.0)


def test_layer_matrix_shape(circle):
    m = layer_matrix(HelmholtzKernel(("S", "D"), K), circle, np.array([[0.0, 5.0], [0.0, 0.0]]))
    assert m.shape == (2, 2, circle.n_nodes)
