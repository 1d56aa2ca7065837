import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpsobolev.errors import (
    DimensionMismatch,
    EmptyInterior,
    NonpositiveSupport,
    UnboundedBody,
)
from lpsobolev.geometry import (
    DiscreteSphereMeasure,
    SupportBody,
    ball,
    box,
    canonicalize,
    from_vertices,
    lp_combination,
    lp_mixed_volume,
    lp_surface_measure,
    match_measures,
    polar_polytope,
    polar_volume,
    probe_directions,
    regular_polygon,
    support_distance,
    transform,
    volume_hessian,
    volume_hessian_sparse,
    wulff_data,
)
from lpsobolev.harness import random_polytope
from lpsobolev.sphere import build_quadrature


def shoelace(points):
    # counterclockwise hull order by angle around the centroid
    c = points.mean(axis=0)
    ang = np.arctan2(points[:, 1] - c[1], points[:, 0] - c[0])
    p = points[np.argsort(ang)]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def test_unit_square():
    K = box([1.0, 1.0])
    assert K.volume == pytest.approx(4.0, abs=1e-14)
    assert len(K) == 4
    assert np.allclose(K.facet_areas, 2.0)
    assert np.allclose(np.sort(np.abs(K.vertices).ravel()), 1.0)


def test_cube_and_redundant_halfspaces():
    normals = np.vstack([np.eye(3), -np.eye(3), [[1, 1, 1]]]) * 1.0
    offsets = np.array([1, 1, 1, 1, 1, 1, 10.0])
    K = canonicalize(normals, offsets)
    assert len(K) == 6
    assert K.volume == pytest.approx(8.0, abs=1e-12)
    assert np.allclose(K.facet_areas, 4.0)


def test_polygon_volume_matches_shoelace(rng):
    for _ in range(20):
        K = random_polytope(2, rng)
        assert K.volume == pytest.approx(shoelace(K.vertices), rel=1e-12)


def test_facet_area_formula(polytope3):
    # n |K| = sum_i h_i A_i
    K = polytope3
    assert np.dot(K.offsets, K.facet_areas) == pytest.approx(3 * K.volume, rel=1e-12)
    # closed surfaces: sum A_i u_i = 0
    assert np.abs(K.facet_areas @ K.normals).max() < 1e-12


def test_regular_polygon_area():
    # circumscribed about the unit circle: area k tan(pi / k)
    for k in (3, 6, 17):
        assert regular_polygon(k).volume == pytest.approx(k * np.tan(np.pi / k), rel=1e-13)


def test_from_vertices_roundtrip(polytope3):
    K = polytope3
    L = from_vertices(K.vertices)
    assert L.volume == pytest.approx(K.volume, rel=1e-12)
    dirs = probe_directions(3, 500)
    assert support_distance(K, L, dirs) < 1e-12


def test_support_and_gauge():
    K = box([2.0, 1.0])
    assert K.support([1.0, 0.0]) == pytest.approx(2.0)
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    assert K.support(u) == pytest.approx(3 / np.sqrt(2))
    assert K.gauge([1.0, 0.5]) == pytest.approx(0.5)
    assert K.gauge([[4.0, 0.0], [0.0, 0.0]]) == pytest.approx([2.0, 0.0])


def test_errors():
    with pytest.raises(UnboundedBody):
        canonicalize([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])
    with pytest.raises(EmptyInterior):
        canonicalize([[1.0, 0.0], [-1.0, 0.0], [0, 1], [0, -1]], [1.0, 0.0, 1, 1])
    with pytest.raises(EmptyInterior):
        from_vertices(np.array([[1.0, 1.0], [3, 1], [1, 3]]))
    off_center = SupportBody(2, lambda u: u[:, 0] + 0.5)
    with pytest.raises(NonpositiveSupport):
        lp_mixed_volume(box([1, 1]), off_center, 2.0)
    with pytest.raises(EmptyInterior):
        from_vertices([[0, 0], [1, 1], [2, 2.0]])
    with pytest.raises(DimensionMismatch):
        lp_mixed_volume(box([1, 1]), box([1, 1, 1]), 2.0)


def test_volume_hessian_finite_differences(polygon, polytope3):
    for K in (polygon, polytope3):
        data = wulff_data(K.normals, K.offsets)
        H = volume_hessian(K.normals, data)
        assert np.allclose(volume_hessian_sparse(K.normals, data).toarray(), H, atol=1e-14)
        eps = 1e-6
        for i in range(len(K)):
            dh = np.zeros(len(K))
            dh[i] = eps
            up = wulff_data(K.normals, K.offsets + dh).areas
            dn = wulff_data(K.normals, K.offsets - dh).areas
            assert np.allclose((up - dn) / (2 * eps), H[:, i], rtol=1e-3, atol=1e-4)


def test_surface_measure_of_cube():
    K = box([1.0, 2.0, 3.0])
    mu = lp_surface_measure(K, 2.5)
    h = K.offsets
    assert np.allclose(mu.weights, h ** (1 - 2.5) * K.facet_areas)


def test_mixed_volume_self_and_homogeneity(polygon, polytope3):
    for K in (polygon, polytope3):
        n = K.dim
        for p in (1.0, 1.5, 3.0):
            assert lp_mixed_volume(K, K, p) == pytest.approx(K.volume, rel=1e-12)
            # V_p(K, tL) = t^p V_p(K, L)
            assert lp_mixed_volume(K, K.scaled(2.0), p) == pytest.approx(2**p * K.volume, rel=1e-12)
        assert n in (2, 3)


def test_minkowski_sum_p1():
    # p = 1 combination of two boxes is their Minkowski sum
    # p = 1 combination is the Minkowski sum: V_1(K, K + L) = |K| + V_1(K, L)
    K, L = box([1.0, 2.0]), box([3.0, 0.5])
    M = lp_combination(1.0, K, 1.0, L, 1.0)
    assert np.allclose(M(probe_directions(2, 50)), box([4.0, 2.5]).support(probe_directions(2, 50)))
    assert lp_mixed_volume(K, M, 1.0) == pytest.approx(K.volume + lp_mixed_volume(K, L, 1.0))


def test_polar():
    K = box([1.0, 1.0])
    P = polar_polytope(K)
    assert P.volume == pytest.approx(2.0, rel=1e-12)
    assert polar_volume(K, build_quadrature(2, 4)) == pytest.approx(2.0, rel=1e-5)
    assert polar_volume(ball(3), build_quadrature(3, 3)) == pytest.approx(4 * np.pi / 3, rel=1e-12)


def test_transform_volume(polytope3, rng):
    M = rng.normal(size=(3, 3))
    T = transform(polytope3, M)
    assert T.volume == pytest.approx(abs(np.linalg.det(M)) * polytope3.volume, rel=1e-10)


def test_measure_merging_and_matching():
    mu = DiscreteSphereMeasure.from_atoms([[1, 0], [1, 1e-12], [0, 1]], [1.0, 2.0, 3.0])
    assert len(mu) == 2
    assert mu.total_mass == pytest.approx(6.0)
    nu = DiscreteSphereMeasure.from_atoms([[0, 1], [1, 0]], [3.0, 3.0])
    assert match_measures(mu, nu) < 1e-12
    assert match_measures(mu, mu.scaled(2.0)) == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.1, 10.0))
def test_scaling_properties(seed, t):
    K = random_polytope(2, np.random.default_rng(seed))
    L = K.scaled(t)
    assert L.volume == pytest.approx(t**2 * K.volume, rel=1e-10)
    assert np.allclose(L.facet_areas, t * K.facet_areas, rtol=1e-10)
    assert lp_mixed_volume(K, L, 2.0) == pytest.approx(t**2 * K.volume, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_canonicalize_idempotent(seed):
    K = random_polytope(3, np.random.default_rng(seed))
    L = canonicalize(K.normals, K.offsets)
    assert np.array_equal(L.normals, K.normals)
    assert np.array_equal(L.offsets, K.offsets)


def test_hand_examples():
    K, L = box([1.0, 1.0]), box([2.0, 2.0])
    assert lp_mixed_volume(K, L, 2.0) == pytest.approx(16.0)
    assert polar_polytope(L).volume == pytest.approx(0.5)
    R = transform(K, np.diag([2.0, 0.5]))
    assert R.volume == pytest.approx(4.0)
    assert np.allclose(np.sort(np.abs(R.vertices), axis=0)[-1], [2.0, 0.5])
    M = lp_combination(1.0, K, 1.0, K, 2.0)
    u = probe_directions(2, 40)
    assert np.allclose(M(u), np.sqrt(2) * K.support(u))
