import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsplit import (Euclidean, InvalidInputError, MetricTree, PoincareBall, Product,
                    ProductPoint, cat0_quadrilateral_residual, distance,
                    geodesic_convexity_residual, geodesic_point, space_from_descriptor)
from hsplit.oracle import poincare_curve_length
from hsplit.spaces import midpoint_residual

from conftest import make_space, nx_tree_distances, random_tree, sampler, y_tree

N_RANDOM = 10_000


# -- examples ---------------------------------------------------------------

def test_euclidean_distance_example():
    E = Euclidean(2)
    assert distance(E, np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0


def test_distance_to_self_is_zero(space, rng):
    draw = sampler(space)
    for _ in range(20):
        p = draw(rng)
        assert distance(space, p, p) == 0.0


def test_poincare_distance_matches_arc_length():
    B = PoincareBall(2)
    x, y = np.array([0.0, 0.0]), np.array([0.5, 0.0])
    closed = distance(B, x, y)
    assert closed == pytest.approx(math.log(3.0), abs=1e-14)
    # integrate the hyperbolic length along the geodesic with step 1e-5
    curve = lambda t: geodesic_point(B, x, y, t)  # noqa: E731
    assert abs(poincare_curve_length(curve, steps=100_000) - closed) <= 1e-6


def test_poincare_geodesic_is_length_minimizing(rng):
    # the geodesic arc is shorter than a detour through a perturbed midpoint
    B = PoincareBall(2)
    x, y = np.array([0.2, -0.5]), np.array([-0.6, 0.3])
    L = poincare_curve_length(lambda t: geodesic_point(B, x, y, t), steps=20_000)
    assert L == pytest.approx(distance(B, x, y), abs=1e-6)
    m = geodesic_point(B, x, y, 0.5) + np.array([0.05, 0.05])
    chord = lambda t: (1 - t) * x + t * y  # noqa: E731
    assert poincare_curve_length(chord, steps=20_000) > L
    assert distance(B, x, m) + distance(B, m, y) > L


def test_euclidean_geodesic_example():
    E = Euclidean(2)
    np.testing.assert_array_equal(
        geodesic_point(E, np.array([0.0, 0.0]), np.array([2.0, 0.0]), 0.5), [1.0, 0.0])


def test_geodesic_endpoints_exact(space, rng):
    draw = sampler(space)
    for _ in range(20):
        x, y = draw(rng), draw(rng)
        assert space.equal(geodesic_point(space, x, y, 0.0), x)
        assert space.distance(geodesic_point(space, x, y, 0.0), x) == 0.0
        assert space.distance(geodesic_point(space, x, y, 1.0), y) == 0.0


def test_tree_path_geodesic_example():
    T = MetricTree(["A", "B", "C"], [["A", "B", 1.0], ["B", "C", 2.0]])
    m = geodesic_point(T, T.vertex("A"), T.vertex("C"), 0.5)
    expected = T.on_edge("B", "C", 0.5)
    assert m.u == expected.u and m.v == expected.v
    assert m.offset == pytest.approx(expected.offset, abs=1e-15)
    # path-enumeration oracle: m splits the A-C path 1.5 / 1.5
    D = nx_tree_distances(T, [T.vertex("A"), m, T.vertex("C")])
    assert D[0, 1] == pytest.approx(1.5) and D[1, 2] == pytest.approx(1.5)


@pytest.mark.parametrize("lam", [-0.1, 1.5, float("nan")])
def test_geodesic_rejects_bad_lambda(lam):
    E = Euclidean(1)
    with pytest.raises(InvalidInputError):
        geodesic_point(E, np.zeros(1), np.ones(1), lam)


def test_quadrilateral_examples():
    E = Euclidean(2)
    p = np.array([0.3, 0.1])
    assert cat0_quadrilateral_residual(E, p, p, p, p) == 0.0
    x, y, z, w = (np.array(c, dtype=float) for c in ([0, 0], [1, 1], [1, 0], [0, 1]))
    # six pairwise distances: the two diagonals are the excluded pairs, so
    # 1 + 1 + 1 + 1 - 2 - 2 = 0 (the two midpoints coincide)
    assert cat0_quadrilateral_residual(E, x, y, z, w) == pytest.approx(0.0, abs=1e-14)
    # pairing opposite sides instead: 2 + 1 + 1 + 2 - 1 - 1 = 4
    assert cat0_quadrilateral_residual(E, x, z, w, y) == pytest.approx(4.0, abs=1e-14)


def test_quadrilateral_euclidean_midpoint_identity(rng):
    # in Hilbert space the residual equals 4 |m_xy - m_zw|^2 exactly
    E = Euclidean(3)
    for _ in range(200):
        x, y, z, w = (rng.uniform(-3, 3, 3) for _ in range(4))
        m = 0.5 * (x + y) - 0.5 * (z + w)
        assert cat0_quadrilateral_residual(E, x, y, z, w) == pytest.approx(
            4 * m @ m, rel=1e-9, abs=1e-10)


def test_convexity_residual_examples(space, rng):
    draw = sampler(space)
    x, y, z = draw(rng), draw(rng), draw(rng)
    assert geodesic_convexity_residual(space, x, y, z, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_convexity_residual_euclidean_is_zero(rng):
    E = Euclidean(3)
    for _ in range(200):
        x, y, z = (rng.uniform(-5, 5, 3) for _ in range(3))
        assert abs(geodesic_convexity_residual(E, x, y, z, rng.random())) <= 1e-10


def test_convexity_residual_tree_positive_off_path():
    T = y_tree()
    r = geodesic_convexity_residual(T, T.vertex("A"), T.vertex("B"), T.vertex("C"), 0.5)
    # d(C,A)=d(C,B)=2, d(A,B)=2, midpoint O at distance 1: 2 + 2 - 1 - 1 = 2
    assert r == pytest.approx(2.0, abs=1e-14)
    assert r > 0


def test_membership_errors():
    B = PoincareBall(2)
    with pytest.raises(InvalidInputError):
        distance(B, np.array([1.2, 0.0]), np.zeros(2))
    with pytest.raises(InvalidInputError):
        distance(Euclidean(2), np.zeros(3), np.zeros(2))
    with pytest.raises(InvalidInputError):
        B.parse_point([0.6, 0.8])


@pytest.mark.parametrize("edges", [
    [["A", "B", 1.0], ["B", "C", 1.0], ["C", "A", 1.0]],   # cycle
    [["A", "B", 1.0]],                                      # disconnected
    [["A", "B", 0.0], ["B", "C", 1.0]],                     # zero length
    [["A", "B", -1.0], ["B", "C", 1.0]],
    [["A", "D", 1.0], ["B", "C", 1.0]],                     # unknown vertex
])
def test_invalid_trees(edges):
    with pytest.raises(InvalidInputError):
        MetricTree(["A", "B", "C"], edges)


def test_tree_vertex_has_one_representation():
    T = y_tree()
    assert T.on_edge("O", "A", 0.0) == T.vertex("O")
    assert T.on_edge("O", "A", 1.0) == T.vertex("A")
    assert T.on_edge("A", "O", 0.25) == T.on_edge("O", "A", 0.75)


def test_space_descriptor_roundtrip():
    for sp in (Euclidean(3), PoincareBall(2), y_tree(), Product(Euclidean(1), y_tree())):
        again = space_from_descriptor(sp.describe())
        assert again.describe() == sp.describe()


# -- properties -------------------------------------------------------------

def _scale(space, pts):
    return max(space.distance(a, b) for a in pts for b in pts)


@pytest.mark.parametrize("kind", ["euclidean", "poincare", "tree", "product"])
def test_comparison_inequalities_randomized(kind):
    space = make_space(kind)
    draw = sampler(space)
    rng = np.random.default_rng(2024)
    worst_conv = worst_quad = math.inf
    for _ in range(N_RANDOM):
        x, y, z, w = draw(rng), draw(rng), draw(rng), draw(rng)
        lam = rng.random()
        s = _scale(space, (x, y, z, w))
        worst_conv = min(worst_conv, geodesic_convexity_residual(space, x, y, z, lam)
                         / (1 + s * s))
        worst_quad = min(worst_quad, cat0_quadrilateral_residual(space, x, y, z, w)
                         / (1 + s * s))
    assert worst_conv >= -1e-9
    assert worst_quad >= -1e-9


@pytest.mark.parametrize("kind", ["euclidean", "poincare", "tree", "product"])
def test_midpoint_inequality(kind):
    space = make_space(kind)
    draw = sampler(space)
    rng = np.random.default_rng(7)
    for _ in range(2000):
        x, y, z = draw(rng), draw(rng), draw(rng)
        s = _scale(space, (x, y, z))
        assert midpoint_residual(space, x, y, z) >= -1e-9 * (1 + s * s)
        # the midpoint is the lambda = 1/2 point of the general inequality
        assert midpoint_residual(space, x, y, z) == pytest.approx(
            geodesic_convexity_residual(space, x, y, z, 0.5), abs=1e-9 * (1 + s * s))


@pytest.mark.parametrize("kind", ["euclidean", "poincare", "tree", "product"])
def test_geodesic_reparametrization(kind):
    space = make_space(kind)
    draw = sampler(space)
    rng = np.random.default_rng(99)
    for _ in range(2000):
        x, y = draw(rng), draw(rng)
        l1, l2 = rng.random(2)
        d = space.distance(x, y)
        got = space.distance(space.geodesic_point(x, y, l1), space.geodesic_point(x, y, l2))
        assert got == pytest.approx(abs(l1 - l2) * d, rel=1e-9, abs=1e-12)


def test_tree_distances_match_networkx():
    T = random_tree(5, n=12)
    rng = np.random.default_rng(5)
    pts = [T.sample_uniform(rng, vertex_prob=0.2) for _ in range(40)]
    ours = np.array([[T.distance(a, b) for b in pts] for a in pts])
    np.testing.assert_allclose(ours, nx_tree_distances(T, pts), rtol=1e-12, atol=1e-12)


def test_tree_geodesics_match_networkx():
    T = random_tree(6, n=12)
    rng = np.random.default_rng(6)
    for _ in range(100):
        x, y = T.sample_uniform(rng, 0.2), T.sample_uniform(rng, 0.2)
        lam = rng.random()
        m = T.geodesic_point(x, y, lam)
        D = nx_tree_distances(T, [x, m, y])
        # the unique point splitting [x, y] in ratio lam : 1 - lam
        assert D[0, 1] == pytest.approx(lam * D[0, 2], abs=1e-10)
        assert D[1, 2] == pytest.approx((1 - lam) * D[0, 2], abs=1e-10)


coords = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.lists(coords, min_size=4, max_size=4), st.lists(coords, min_size=4, max_size=4),
       st.floats(0, 1))
def test_product_of_lines_is_the_plane(a, b, lam):
    P = Product(Euclidean(1), Euclidean(1))
    E = Euclidean(2)
    x = ProductPoint(np.array([a[0]]), np.array([a[1]]))
    y = ProductPoint(np.array([b[0]]), np.array([b[1]]))
    xe, ye = np.array(a[:2]), np.array(b[:2])
    assert P.distance(x, y) == E.distance(xe, ye)
    m = P.geodesic_point(x, y, lam)
    np.testing.assert_array_equal(np.concatenate([m.left, m.right]),
                                  E.geodesic_point(xe, ye, lam))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-0.7, 0.7), min_size=6, max_size=6))
def test_poincare_metric_axioms(c):
    B = PoincareBall(2)
    x, y, z = np.array(c[0:2]), np.array(c[2:4]), np.array(c[4:6])
    assert B.distance(x, y) == pytest.approx(B.distance(y, x), rel=1e-12, abs=1e-15)
    assert B.distance(x, z) <= B.distance(x, y) + B.distance(y, z) + 1e-9
