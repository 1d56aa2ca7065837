import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpsobolev.errors import DimensionMismatch, DivergentIntegral, InputError
from lpsobolev.geometry import box, lp_surface_measure, match_measures
from lpsobolev.harness import random_polytope, random_pwa
from lpsobolev.pwa import PwaFunction, cone_function, lp_star_norm, scale_values
from lpsobolev.rearrangement import (
    BALL,
    RadialConvexFunction,
    RadialProfile,
    convex_symmetrization,
    decreasing_rearrangement,
    distribution_function,
    radial_gradient_norm,
    symmetric_rearrangement,
    xi_factor,
)
from lpsobolev.rearrangement import _fraction_above


def fraction_oracle(vals, t, samples=400_000, seed=0):
    # Monte Carlo over the reference simplex (Dirichlet(1, ..., 1) barycentrics)
    lam = np.random.default_rng(seed).dirichlet(np.ones(len(vals)), size=samples)
    return float(np.mean(lam @ vals > t))


@pytest.mark.parametrize("k", [3, 4])
def test_fraction_above_against_sampling(rng, k):
    for _ in range(6):
        vals = np.sort(rng.uniform(-1, 1, k))
        t = rng.uniform(vals[0], vals[-1])
        exact = _fraction_above(vals[None, :], t)[0]
        assert exact == pytest.approx(fraction_oracle(vals, t), abs=4e-3)


def test_fraction_above_two_two_split():
    # values (0, 0, 1, 1) at t = 1/2: by symmetry exactly half
    assert _fraction_above(np.array([[0.0, 0.0, 1.0, 1.0]]), 0.5)[0] == pytest.approx(0.5)
    assert _fraction_above(np.array([[0.0, 0.0, 1.0]]), 0.0)[0] == pytest.approx(1.0)


def test_distribution_of_cone(polygon, polytope3):
    for P in (polygon, polytope3):
        f = cone_function(P)
        for t in (0.0, 0.25, 0.7, 1.0):
            assert distribution_function(f, t) == pytest.approx(P.volume * (1 - t) ** P.dim, abs=1e-13)
        with pytest.raises(ValueError):
            distribution_function(f, -1.0)


def test_negative_values_count():
    f = scale_values(cone_function(box([1.0, 1.0])), -2.0)
    assert distribution_function(f, 1.0) == pytest.approx(4 * 0.25)


def test_profile_of_cone(polygon):
    f = cone_function(polygon)
    prof = decreasing_rearrangement(f, 256)
    s = np.linspace(0, polygon.volume, 50)
    assert np.allclose(prof(s), 1 - np.sqrt(s / polygon.volume), atol=2e-5)
    assert prof.support == pytest.approx(polygon.volume)
    assert prof.maximum == pytest.approx(1.0)


def test_plateau():
    # equal to 1 on an inner triangle of area 1/2, zero on the outer triangle
    verts = np.array([[0, 0], [1, 0], [0, 1], [-1, -1], [3, -1], [-1, 3.0]])
    tris = [[0, 1, 2], [0, 3, 4], [0, 4, 1], [1, 4, 5], [1, 5, 2], [2, 5, 3], [2, 3, 0]]
    f = PwaFunction.from_mesh(verts, tris, [1, 1, 1, 0, 0, 0])
    assert f.measures.sum() == pytest.approx(8.0)
    prof = decreasing_rearrangement(f, 128)
    assert prof(0.25) == pytest.approx(1.0)
    assert prof.level_measure(0.999999) == pytest.approx(0.5, abs=1e-5)


def test_equimeasurability(rng):
    for dim in (2, 3):
        f = random_pwa(dim, rng)
        g = symmetric_rearrangement(f)
        for q in (1.0, 2.0, 3.0):
            assert g.lq_norm(q) == pytest.approx(lp_star_norm(f, q), rel=1e-4)
        for t in np.linspace(0, 0.9 * f.sup_norm, 5):
            assert g.distribution(t) == pytest.approx(distribution_function(f, t), abs=1e-4 * f.support_measure)


def test_gradient_norm_of_cone_rearrangement():
    # l_B for the unit disc has |grad| = 1 on B
    r = np.linspace(0, 1, 2001)
    g = RadialConvexFunction(2, BALL, RadialProfile.from_samples(np.pi * r**2, 1 - r))
    for p in (1.5, 2.0, 4.0):
        assert g.gradient_norm(p) == pytest.approx(np.pi ** (1 / p), rel=1e-5)
        assert radial_gradient_norm(g, p) == pytest.approx(g.gradient_norm(p), rel=1e-9)


def test_radial_evaluation():
    prof = RadialProfile.from_samples([0.0, np.pi], [2.0, 0.0])
    g = RadialConvexFunction(2, BALL, prof)
    # f*(s) = 2 (1 - s / pi); at |x| = 1/2 s = pi / 4
    assert g([0.5, 0.0]) == pytest.approx(1.5)
    assert g([[0.0, 0.0], [2.0, 0.0]]) == pytest.approx([2.0, 0.0])


def test_profile_validation():
    with pytest.raises(InputError):
        RadialProfile.from_samples([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(InputError):
        RadialProfile.from_samples([0.0], [0.0])
    with pytest.raises(DivergentIntegral):
        RadialProfile.from_samples([0.0, 1.0, 1.0], [1.0, 0.5, 0.0])
    with pytest.raises(InputError):
        RadialConvexFunction(2, box([1.0, 1.0]), RadialProfile.from_samples([0.0, 1.0], [1.0, 0.0]))
    with pytest.raises(InputError):
        RadialConvexFunction(2, "cube", RadialProfile.from_samples([0.0, 1.0], [1.0, 0.0]))
    with pytest.raises(ValueError):
        decreasing_rearrangement(cone_function(box([1, 1])), 10)


def test_symmetrization_structure(polygon, rng):
    f = random_pwa(2, rng)
    p = 3.0
    fK = convex_symmetrization(f, polygon)
    assert fK.shape.volume == pytest.approx(np.pi)
    xi = xi_factor(fK.profile, 2, p)
    expected = lp_surface_measure(fK.shape, p).scaled(xi.measure)
    assert match_measures(fK.gradient_measure(p), expected) < 1e-12
    assert xi.dilation == pytest.approx(xi.measure ** (1 / (2 - p)))
    with pytest.raises(DimensionMismatch):
        convex_symmetrization(f, random_polytope(3, rng))
    with pytest.raises(ValueError):
        xi_factor(fK.profile, 2, 2.0)


def test_cone_is_its_own_symmetrization(polygon):
    # the level sets of l_P are already dilates of P, so f^P = l_P
    f = cone_function(polygon)
    fK = convex_symmetrization(f, polygon)
    x = np.vstack([0.3 * polygon.vertices, 0.8 * polygon.vertices, np.zeros((1, 2))])
    assert np.allclose(fK(x), f(x), atol=1e-5)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_distribution_monotone(seed):
    f = random_pwa(2, np.random.default_rng(seed))
    ts = np.linspace(0, f.sup_norm, 30)
    mu = np.array([distribution_function(f, t) for t in ts])
    assert np.all(np.diff(mu) <= 1e-14)
    assert mu[-1] == pytest.approx(0.0, abs=1e-14)
