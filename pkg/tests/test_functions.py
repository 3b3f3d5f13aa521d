import math

import numpy as np
import pytest

from hsplit import (Ball, Box, Euclidean, InvalidInputError, PoincareBall, Product,
                    ProductPoint, ProductSet, Subtree, distance_to_point,
                    firm_nonexpansiveness_residual, half_squared_distance, indicator,
                    prox_characterization_residual, zero_function)
from hsplit.functions import (CustomFunction, convexity_residual, function_from_descriptor,
                              nonexpansiveness_gap, uniform_convexity_residual)
from hsplit.oracle import no_better_nearby, prox_oracle

from conftest import SPACE_IDS, make_space, random_tree, sampler, y_tree

E1 = Euclidean(1)


def pt(*c):
    return np.array(c, dtype=float)


def catalog(space, rng):
    """Catalog members instantiated on ``space`` with random anchors."""
    draw = sampler(space, half_width=2.0, radius=0.7)
    a = draw(rng)
    funcs = {
        "half_sq": half_squared_distance(space, a),
        "dist": distance_to_point(space, draw(rng)),
        "zero": zero_function(space),
        "ball": indicator(Ball(space, draw(rng), 0.6)),
    }
    if isinstance(space, Euclidean):
        funcs["box"] = indicator(Box(space, [-1.0, None], [0.5, 1.0]))
    elif isinstance(space, Product):
        left = Ball(space.left, space.left.point([0.1, -0.2]), 0.5)
        right = Subtree(space.right, space.right.names[:1])
        funcs["product_set"] = indicator(ProductSet(space, left, right))
    elif not isinstance(space, PoincareBall):
        # connected vertex set: a vertex and its neighbours
        nbrs = [space.names[z] for z, _ in space.adjacency[0]]
        funcs["subtree"] = indicator(Subtree(space, [space.names[0]] + nbrs))
    return funcs


def instances(kind):
    space = make_space(kind)
    rng = np.random.default_rng(SPACE_IDS.index(kind))
    return [(kind, name, f) for name, f in catalog(space, rng).items()]


ALL = [i for kind in SPACE_IDS for i in instances(kind)]
IDS = [f"{k}-{n}" for k, n, _ in ALL]


def feasible_sample(f, draw, rng):
    # points where f is finite: project random points onto the domain
    p = draw(rng)
    return f.prox(1.0, p) if math.isinf(f(p)) else p


# -- examples ---------------------------------------------------------------

def test_indicator_examples():
    f = indicator(Box(E1, [0.0], [1.0]))
    assert f.prox(1.0, pt(2.0))[0] == 1.0
    assert f.prox(3.7, pt(0.4))[0] == 0.4
    assert f(pt(0.5)) == 0.0 and f(pt(1.5)) == math.inf


def test_indicator_tree_example():
    T = y_tree()
    C = Subtree(T, ["O", "A"])
    y = indicator(C).prox(1.0, T.vertex("B"))
    assert y == T.vertex("O")
    # oracle: minimise d(B, .)^2 over a discretisation of edge O-A
    offsets = np.linspace(0.0, 1.0, 1001)
    vals = [T.distance(T.vertex("B"), T.on_edge("O", "A", s)) ** 2 for s in offsets]
    assert offsets[int(np.argmin(vals))] == 0.0


def test_empty_set_rejected():
    with pytest.raises(InvalidInputError):
        Box(E1, [1.0], [0.0])
    with pytest.raises(InvalidInputError):
        Subtree(y_tree(), [])
    with pytest.raises(InvalidInputError):
        Subtree(y_tree(), ["A", "B"])  # not connected without O


def test_half_squared_distance_examples():
    f = half_squared_distance(E1, pt(0.0))
    assert f.prox(1.0, pt(2.0))[0] == 1.0
    for gamma in (0.1, 1.0, 10.0):
        np.testing.assert_array_equal(f.prox(gamma, pt(0.0)), pt(0.0))
    assert f(pt(3.0)) == 4.5


def test_half_squared_distance_poincare_golden_section(rng):
    B = PoincareBall(2)
    draw = sampler(B)
    for _ in range(50):
        a, x = draw(rng), draw(rng)
        gamma = float(rng.uniform(0.05, 5.0))
        f = half_squared_distance(B, a)
        assert B.distance(f.prox(gamma, x), prox_oracle(f, gamma, x)) <= 1e-7


def test_distance_to_point_examples(rng):
    f = distance_to_point(E1, pt(0.0))
    assert f.prox(2.0, pt(5.0))[0] == 3.0
    assert f.prox(2.0, pt(0.0))[0] == 0.0
    assert f.prox(10.0, pt(5.0))[0] == 0.0
    T = random_tree(3)
    draw = sampler(T)
    for _ in range(30):
        a, x = draw(rng), draw(rng)
        gamma = float(rng.uniform(0.05, 3.0))
        g = distance_to_point(T, a)
        assert T.distance(g.prox(gamma, x), prox_oracle(g, gamma, x)) <= 1e-7


def test_zero_function_examples(space, rng):
    z = zero_function(space)
    draw = sampler(space)
    for _ in range(10):
        x = draw(rng)
        assert z(x) == 0.0
        assert space.distance(z.prox(float(rng.uniform(0.1, 9)), x), x) == 0.0


def test_prox_characterization_examples():
    f = indicator(Box(E1, [0.0], [1.0]))
    y = f.prox(1.0, pt(2.0))
    assert prox_characterization_residual(f, 1.0, pt(2.0), y) == 0.0
    assert prox_characterization_residual(f, 1.0, pt(2.0), pt(0.0)) == pytest.approx(1.0)
    assert prox_characterization_residual(f, 1.0, pt(2.0), pt(-3.0)) == math.inf


def test_firm_nonexpansiveness_examples():
    f = indicator(Box(E1, [None], [0.0]))    # half-line x <= 0
    assert firm_nonexpansiveness_residual(f, 1.0, pt(1.5), pt(1.5)) == 0.0
    # x1 = 3, x2 = -3: y1 = 0, y2 = -3; (36 + 9 - 9 - 0)/2 - 9 = 9
    assert firm_nonexpansiveness_residual(f, 1.0, pt(3.0), pt(-3.0)) == pytest.approx(9.0)


@pytest.mark.parametrize("gamma", [0.0, -1.0, math.inf, math.nan])
def test_nonpositive_gamma_rejected(gamma):
    with pytest.raises(InvalidInputError):
        half_squared_distance(E1, pt(0.0)).prox(gamma, pt(1.0))


def test_improper_values_rejected():
    bad = CustomFunction(E1, lambda x: -math.inf, lambda g, x: x)
    with pytest.raises(InvalidInputError):
        bad(pt(0.0))
    nan = CustomFunction(E1, lambda x: math.nan, lambda g, x: x)
    with pytest.raises(InvalidInputError):
        nan(pt(0.0))


def test_descriptor_roundtrip():
    T = y_tree()
    for space, f in [(E1, indicator(Box(E1, [None], [2.0]))),
                     (T, indicator(Subtree(T, ["O", "C"]))),
                     (T, half_squared_distance(T, T.on_edge("O", "B", 0.3))),
                     (E1, distance_to_point(E1, pt(1.0))), (E1, zero_function(E1))]:
        again = function_from_descriptor(space, f.describe())
        assert again.describe() == f.describe()


# -- properties -------------------------------------------------------------

@pytest.mark.parametrize("kind,name,f", ALL, ids=IDS)
def test_prox_inequalities_randomized(kind, name, f):
    space = f.space
    draw = sampler(space)
    rng = np.random.default_rng(31)
    for _ in range(1000):
        gamma = float(rng.uniform(0.05, 5.0))
        x, x2 = draw(rng), draw(rng)
        z = feasible_sample(f, draw, rng)
        y = f.prox(gamma, x)
        s = max(space.distance(x, z), space.distance(x, y), space.distance(x, x2), 1.0)
        tol = 1e-9 * s * s
        assert prox_characterization_residual(f, gamma, x, z) >= -tol
        assert firm_nonexpansiveness_residual(f, gamma, x, x2) >= -tol
        assert nonexpansiveness_gap(f, gamma, x, x2) >= -1e-9
        if f.modulus is not None:
            assert uniform_convexity_residual(f, gamma, x, z) >= -tol


@pytest.mark.parametrize("kind,name,f", ALL, ids=IDS)
def test_closed_form_matches_oracle(kind, name, f):
    space = f.space
    draw = sampler(space)
    rng = np.random.default_rng(47)
    for _ in range(100):
        gamma = float(rng.uniform(0.05, 5.0))
        x = draw(rng)
        y = f.prox(gamma, x)
        assert space.distance(y, prox_oracle(f, gamma, x)) <= 1e-6

        def obj(p):
            fp = f(p)
            return math.inf if fp == math.inf else gamma * fp + 0.5 * space.distance(x, p) ** 2
        # random off-geodesic points near the candidate are no better
        assert no_better_nearby(space, obj, y, 0.3, rng, samples=20) >= -1e-9


@pytest.mark.parametrize("kind,name,f", ALL, ids=IDS)
def test_convexity_along_geodesics(kind, name, f):
    space = f.space
    draw = sampler(space)
    rng = np.random.default_rng(53)
    for _ in range(500):
        x, y = feasible_sample(f, draw, rng), feasible_sample(f, draw, rng)
        s = max(1.0, abs(f(x)), abs(f(y)))
        assert convexity_residual(f, x, y, float(rng.random())) >= -1e-9 * s


def test_uniform_convexity_needs_modulus():
    with pytest.raises(InvalidInputError):
        uniform_convexity_residual(zero_function(E1), 1.0, pt(0.0), pt(1.0))


def test_product_set_projection_componentwise():
    P = Product(Euclidean(1), y_tree())
    T = P.right
    C = ProductSet(P, Box(P.left, [1.0], [3.0]), Subtree(T, ["O", "A"]))
    y = indicator(C).prox(1.0, ProductPoint(pt(4.0), T.on_edge("O", "C", 1.0)))
    assert y.left[0] == 3.0 and y.right == T.vertex("O")
