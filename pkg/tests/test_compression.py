import numpy as np
import pytest

from openwg import compression as cp
from openwg import transmission as tr
from openwg.compression import DERIVS

FAR_X = np.array([[0.3, -0.7, 0.0, 0.9, 0.0], [15.0, -40.0, 90.0, -9.0, 30.0 + 0.4j]])
FAR_Y = np.array([[0.5, -0.2, 0.0, 0.0], [-20.0, 60.0, 12.0, -70.0 + 2.0j]])
NEAR = np.array([[0.0] * 7, [-8.0, -3.1, -1.999, 0.0, 0.7, 2.001, 6.5]])


def err(a, b):
    """Maximum pointwise error (d/dx1 values on the line vanish by symmetry, so no relative form)."""
    return np.max(np.abs(a - b))


@pytest.fixture(scope="module")
def side(junction):
    prob, _ = junction
    return prob.left


@pytest.fixture(scope="module")
def factory(guide):
    return cp.SkeletonFactory(guide[1], tol_min=1e-10)


@pytest.fixture(scope="module")
def direct(side):
    return tr.WaveguideGreens(side.system)


def test_proxy_boxes():
    pts, nrm = cp.proxy_boxes(2.0, 1.0)
    assert pts.shape == nrm.shape == (2, 2400)
    lo = 2.0 + 2 * np.pi
    h = np.abs(pts[1])
    assert np.all((h >= lo - 1e-12) & (h <= cp.BOX_TOP + 1e-12))
    assert np.all(np.abs(pts[0]) <= cp.BOX_HALF_WIDTH + 1e-12)
    # stepping along the normal leaves the box
    q = pts + 1e-3 * nrm
    hq = np.abs(q[1])
    inside = (np.abs(q[0]) < 1) & (hq > lo) & (hq < cp.BOX_TOP)
    assert not inside.any()
    with pytest.raises(cp.CompressionError):
        cp.proxy_boxes(99.0, 1.0)


def test_window_partition():
    br = cp.window_partition(2.0, 1.0, 2.0)
    w = 2.0 + 2 * np.pi
    assert br[0] == pytest.approx(-w) and br[-1] == pytest.approx(w)
    assert np.all(np.diff(br) > 0)
    assert np.any(np.isclose(br, -2.0)) and np.any(np.isclose(br, 2.0))
    mid = 0.5 * (br[:-1] + br[1:])
    kk = np.where(np.abs(mid) < 2.0, 2.0, 1.0)
    assert np.all(kk * np.diff(br) <= 8.0 + 1e-12)
    assert len(br) - 1 == 3


def test_tolerance_range(guide):
    _, s = guide
    with pytest.raises(ValueError):
        cp.build_skeletons(s, tolerance=1.0)
    with pytest.raises(ValueError):
        cp.build_skeletons(s, tolerance=1e-16)


def test_needs_a_guide_problem(guide):
    p, s = guide
    q = tr.TransmissionProblem(p.contour, p.k, p.k1, p.inside)
    with pytest.raises(cp.CompressionError):
        cp.SkeletonFactory(tr.TransmissionSystem(q, None, s.lu, s.rcond))


def test_no_contrast_gives_zero():
    p = tr.waveguide_problem(1.0, 1.0, 2.0, n_panels=72)
    s = tr.assemble_transmission(p)
    cg = cp.build_compressed(s, tolerance=1e-6, order=8, order_near=12)
    for dv in DERIVS:
        assert np.all(cg.matrix(np.concatenate([FAR_X, NEAR], 1), np.concatenate([FAR_Y, NEAR], 1), dv) == 0)


def test_loose_tolerance_still_bounded(guide, factory):
    _, s = guide
    o, i = factory.build(1e-1, validate=True)
    assert 0 < o.rank < 2 * s.n and 0 < i.rank < 2 * s.n
    assert o.proxy_error <= 1.0 and i.proxy_error <= 1.0


def test_far_far_matches_direct(side, direct):
    cg = side.greens
    for dv in DERIVS:
        got = cg.matrix(FAR_X, FAR_Y, dv)
        ref = direct.out_matrix(FAR_X, FAR_Y, dv)
        assert err(got, ref) <= 10 * cg.tol, dv


def test_mixed_regimes_match_direct(side, direct):
    cg = side.greens
    for dv in DERIVS:
        assert err(cg.matrix(NEAR, FAR_Y, dv), direct.out_matrix(NEAR, FAR_Y, dv)) <= 1e-8, dv
        assert err(cg.matrix(FAR_X, NEAR, dv), direct.out_matrix(FAR_X, NEAR, dv)) <= 1e-8, dv


def test_near_near_matches_direct(side, direct):
    cg = side.greens
    x2 = np.linspace(-cg.window, cg.window, 23)
    pts = np.stack([np.zeros_like(x2), x2])
    for dv in DERIVS:
        got = cg.matrix(pts, pts, dv)
        ref = direct.out_matrix(pts, pts, dv)
        # root-mean-square over the pairs; the near-near tables converge slowly in L2 only
        assert np.sqrt(np.mean(np.abs(got - ref) ** 2)) <= 1e-6, dv


def test_straddling_the_far_box_boundary(side):
    cg = side.greens
    w = cg.window
    a = np.array([[0.0], [w - 1e-9]])
    b = np.array([[0.0], [w + 1e-9]])
    assert cg.classify(a)[0] == 0 and cg.classify(b)[0] == 1
    for dv in DERIVS:
        assert err(cg.matrix(a, FAR_Y, dv), cg.matrix(b, FAR_Y, dv)) <= 1e-8
        assert err(cg.matrix(FAR_X, a, dv), cg.matrix(FAR_X, b, dv)) <= 1e-8


def test_classification_and_errors(side):
    cg = side.greens
    c = cg.classify(np.array([[0.0, 0.5, 0.0, 2.0, 0.0], [1.0, 0.0, 50.0, 50.0, 101.0]]))
    assert c.tolist() == [0, -1, 1, -1, -1]
    with pytest.raises(cp.CompressionError):
        cg.matrix(np.array([[0.5], [0.0]]), FAR_Y)
    with pytest.raises(ValueError):
        cg.matrix(FAR_X, FAR_Y, (2, 0))


def test_tables_are_resolved(side):
    cg = side.greens
    # trailing coefficients relative to the largest one
    for t in list(cg.far_near.values()) + list(cg.near_far.values()):
        assert t.decay.max() <= 1e-5
    assert cg.near_near[(0, 0)].decay.max() <= 1e-6


def test_cache_round_trip(tmp_path, side):
    cg = side.greens
    f = tmp_path / "g.owgc"
    cp.save_compressed(cg, f)
    back = cp.load_compressed(f)
    pts = np.concatenate([FAR_X, NEAR], 1)
    for dv in DERIVS:
        assert np.array_equal(back.matrix(pts, pts[:, ::-1], dv), cg.matrix(pts, pts[:, ::-1], dv))
    assert back.sizes == cg.sizes
    bad = tmp_path / "bad.owgc"
    bad.write_bytes(b"XXXXX" + f.read_bytes()[5:])
    with pytest.raises(cp.CompressionError):
        cp.load_compressed(bad)


def test_cache_key_distinguishes_parameters():
    base = (1.0, 2.0, 2.0, 10.0, 1e-10, 20, 60)
    keys = {cp.cache_key(*base)}
    for i in range(len(base)):
        b = list(base)
        b[i] = b[i] * 1.5
        keys.add(cp.cache_key(*b))
    keys.add(cp.cache_key(*base, extra="graded"))
    assert len(keys) == len(base) + 2
    assert cp.cache_key(*base) == cp.cache_key(*base)


def test_tighter_tolerance_tracks(factory):
    ranks = []
    for tol in (1e-4, 1e-6, 1e-8, 1e-10):
        o, i = factory.build(tol, validate=True)
        assert o.proxy_error <= 10 * tol and i.proxy_error <= 10 * tol
        ranks.append((o.rank, i.rank))
    assert all(a[0] <= b[0] and a[1] <= b[1] for a, b in zip(ranks, ranks[1:]))
