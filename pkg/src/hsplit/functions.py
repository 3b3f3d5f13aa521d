"""Proper convex lower semicontinuous functions with exact proximal maps.

Every function exposes ``evaluate(x)`` (``+inf`` allowed) and
``prox(gamma, x)``, the unique minimizer of ``gamma * f(y) + d(x, y)**2 / 2``.
``modulus`` is the uniform-convexity modulus when one is known.

The residual helpers at the bottom turn the standard prox inequalities into
signed slacks that are nonnegative whenever the prox is exact.
"""
import math

import numpy as np

from .errors import InvalidInputError
from .spaces import EQ_TOL, Euclidean, MetricTree, Product, ProductPoint

INF = math.inf


def _check_gamma(gamma):
    gamma = float(gamma)
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise InvalidInputError(f"gamma must be a positive finite real, got {gamma!r}")
    return gamma


# -- convex sets ------------------------------------------------------------

class ConvexSet:
    """Nonempty closed geodesically convex subset with an exact projection."""

    def __init__(self, space):
        self.space = space

    def contains(self, p):
        raise NotImplementedError

    def project(self, p):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


class Box(ConvexSet):
    """Axis-aligned box in Euclidean space; bounds may be infinite."""

    def __init__(self, space, lower, upper):
        if not isinstance(space, Euclidean):
            raise InvalidInputError("boxes live in Euclidean spaces only")
        super().__init__(space)
        lo = np.array([-INF if b is None else b for b in np.atleast_1d(lower)], dtype=np.float64)
        hi = np.array([INF if b is None else b for b in np.atleast_1d(upper)], dtype=np.float64)
        if lo.shape != (space.dim,) or hi.shape != (space.dim,):
            raise InvalidInputError("box bounds must match the space dimension")
        if np.isnan(lo).any() or np.isnan(hi).any() or (lo > hi).any():
            raise InvalidInputError("empty box: need lower <= upper in every coordinate")
        self.lower, self.upper = lo, hi

    def contains(self, p):
        tol = EQ_TOL * (1.0 + np.abs(p))
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def project(self, p):
        return np.minimum(np.maximum(p, self.lower), self.upper)

    def describe(self):
        bound = lambda a: [None if math.isinf(b) else float(b) for b in a]  # noqa: E731
        return {"kind": "box", "lower": bound(self.lower), "upper": bound(self.upper)}


class Ball(ConvexSet):
    """Closed metric ball; valid in any CAT(0) space.

    The projection of an outside point lies on the geodesic to the centre at
    distance ``radius`` from it.
    """

    def __init__(self, space, center, radius):
        super().__init__(space)
        space.check(center, "ball center")
        radius = float(radius)
        if not (radius >= 0.0 and math.isfinite(radius)):
            raise InvalidInputError("ball radius must be a nonnegative finite real")
        self.center, self.radius = center, radius

    def contains(self, p):
        return self.space.distance(self.center, p) <= self.radius + EQ_TOL * (1.0 + self.radius)

    def project(self, p):
        d = self.space.distance(self.center, p)
        if d <= self.radius:
            return p
        return self.space.geodesic_point(self.center, p, self.radius / d)

    def describe(self):
        return {"kind": "ball", "center": self.space.to_literal(self.center),
                "radius": self.radius}


class Subtree(ConvexSet):
    """Subtree of a metric tree spanned by a connected set of vertices."""

    def __init__(self, space, vertices):
        if not isinstance(space, MetricTree):
            raise InvalidInputError("subtrees live in metric trees only")
        super().__init__(space)
        if not vertices:
            raise InvalidInputError("subtree needs at least one vertex")
        idx = sorted({space.vertex(v).u for v in vertices})
        members = set(idx)
        seen = {idx[0]}
        stack = [idx[0]]
        while stack:
            w = stack.pop()
            for z, _ in space.adjacency[w]:
                if z in members and z not in seen:
                    seen.add(z)
                    stack.append(z)
        if seen != members:
            raise InvalidInputError("subtree vertices must induce a connected subgraph")
        self.members = members
        self._idx = np.array(idx)
        self._vertices = [space.vertex(space.names[i]) for i in idx]

    def contains(self, p):
        if p.is_vertex:
            return p.u in self.members
        return p.u in self.members and p.v in self.members

    def project(self, p):
        if self.contains(p):
            return p
        # outside points reach the subtree through a single gate vertex
        dists = [self.space.distance(p, q) for q in self._vertices]
        return self._vertices[int(np.argmin(dists))]

    def describe(self):
        return {"kind": "subtree", "vertices": [self.space.names[i] for i in self._idx]}


class ProductSet(ConvexSet):
    def __init__(self, space, left, right):
        if not isinstance(space, Product):
            raise InvalidInputError("product sets live in product spaces only")
        super().__init__(space)
        self.left, self.right = left, right

    def contains(self, p):
        return self.left.contains(p.left) and self.right.contains(p.right)

    def project(self, p):
        return ProductPoint(self.left.project(p.left), self.right.project(p.right))

    def describe(self):
        return {"kind": "product", "left": self.left.describe(), "right": self.right.describe()}


def set_from_descriptor(space, desc):
    kind = desc.get("kind") if isinstance(desc, dict) else None
    if kind == "box":
        return Box(space, desc["lower"], desc["upper"])
    if kind == "ball":
        return Ball(space, space.parse_point(desc["center"]), desc["radius"])
    if kind == "subtree":
        return Subtree(space, desc["vertices"])
    if kind == "product":
        if not isinstance(space, Product):
            raise InvalidInputError("product set requires a product space")
        return ProductSet(space, set_from_descriptor(space.left, desc["left"]),
                          set_from_descriptor(space.right, desc["right"]))
    raise InvalidInputError(f"unknown set descriptor {desc!r}")


# -- functions --------------------------------------------------------------

class ProxFunction:
    """Extended-real convex function with an exact proximal map."""

    modulus = None

    def __init__(self, space):
        self.space = space

    def evaluate(self, x):
        raise NotImplementedError

    def _prox(self, gamma, x):
        raise NotImplementedError

    def __call__(self, x):
        v = float(self.evaluate(x))
        if math.isnan(v) or v == -INF:
            raise InvalidInputError(f"function value {v} is not allowed (proper functions only)")
        return v

    def prox(self, gamma, x):
        return self._prox(_check_gamma(gamma), x)

    def describe(self):
        raise NotImplementedError


class Indicator(ProxFunction):
    """0 on the set, +inf off it; the prox is the metric projection."""

    def __init__(self, convex_set):
        super().__init__(convex_set.space)
        self.set = convex_set

    def evaluate(self, x):
        return 0.0 if self.set.contains(x) else INF

    def _prox(self, gamma, x):
        return self.set.project(x)

    def describe(self):
        return {"kind": "indicator", "set": self.set.describe()}


def _half_square(t):
    return 0.5 * t * t


class HalfSquaredDistance(ProxFunction):
    """``d(x, a)**2 / 2``; uniformly convex with modulus ``t**2 / 2``.

    The prox is the point at parameter ``gamma / (1 + gamma)`` on [x, a].
    """

    modulus = staticmethod(_half_square)

    def __init__(self, space, anchor):
        super().__init__(space)
        self.anchor = space.check(anchor, "anchor")

    def evaluate(self, x):
        return 0.5 * self.space.distance(x, self.anchor) ** 2

    def _prox(self, gamma, x):
        return self.space.geodesic_point(x, self.anchor, gamma / (1.0 + gamma))

    def describe(self):
        return {"kind": "half_sq_dist", "anchor": self.space.to_literal(self.anchor)}


class DistanceToPoint(ProxFunction):
    """``d(x, a)``; its prox moves ``gamma`` towards a, stopping at a."""

    def __init__(self, space, anchor):
        super().__init__(space)
        self.anchor = space.check(anchor, "anchor")

    def evaluate(self, x):
        return self.space.distance(x, self.anchor)

    def _prox(self, gamma, x):
        d = self.space.distance(x, self.anchor)
        if d <= gamma:
            return self.anchor
        return self.space.geodesic_point(x, self.anchor, gamma / d)

    def describe(self):
        return {"kind": "dist", "anchor": self.space.to_literal(self.anchor)}


class Zero(ProxFunction):
    def evaluate(self, x):
        return 0.0

    def _prox(self, gamma, x):
        return x

    def describe(self):
        return {"kind": "zero"}


class CustomFunction(ProxFunction):
    """Wrap user callables ``evaluate(x)`` and ``prox(gamma, x)``.

    The caller is responsible for convexity and exactness of the prox; the
    residual checks in this module are the intended way to audit them.
    """

    def __init__(self, space, evaluate, prox, modulus=None, name="custom"):
        super().__init__(space)
        self._evaluate = evaluate
        self._prox_fn = prox
        self.modulus = modulus
        self.name = name

    def evaluate(self, x):
        return self._evaluate(x)

    def _prox(self, gamma, x):
        return self._prox_fn(gamma, x)

    def describe(self):
        return {"kind": self.name}


def indicator(convex_set):
    return Indicator(convex_set)


def half_squared_distance(space, anchor):
    return HalfSquaredDistance(space, anchor)


def distance_to_point(space, anchor):
    return DistanceToPoint(space, anchor)


def zero_function(space):
    return Zero(space)


def function_from_descriptor(space, desc):
    kind = desc.get("kind") if isinstance(desc, dict) else None
    if kind == "indicator":
        return Indicator(set_from_descriptor(space, desc["set"]))
    if kind == "half_sq_dist":
        return HalfSquaredDistance(space, space.parse_point(desc["anchor"]))
    if kind == "dist":
        return DistanceToPoint(space, space.parse_point(desc["anchor"]))
    if kind == "zero":
        return Zero(space)
    raise InvalidInputError(f"unknown function descriptor {desc!r}")


# -- residuals --------------------------------------------------------------

def prox_characterization_residual(f, gamma, x, z):
    """Slack of the variational inequality characterising ``y = prox(gamma, x)``.

    ``gamma f(z) + d(x,z)^2/2 - gamma f(y) - d(x,y)^2/2 - d(y,z)^2/2``; returns
    ``+inf`` when ``f(z) = +inf``.
    """
    fz = f(z)
    if fz == INF:
        return INF
    y = f.prox(gamma, x)
    d = f.space.distance
    return (gamma * fz + 0.5 * d(x, z) ** 2 - gamma * f(y)
            - 0.5 * d(x, y) ** 2 - 0.5 * d(y, z) ** 2)


def uniform_convexity_residual(f, gamma, x, z):
    """The prox inequality strengthened by ``gamma * modulus(d(y, z))``."""
    if f.modulus is None:
        raise InvalidInputError("function carries no uniform-convexity modulus")
    fz = f(z)
    if fz == INF:
        return INF
    y = f.prox(gamma, x)
    d = f.space.distance
    dyz = d(y, z)
    return (gamma * fz - gamma * f.modulus(dyz)
            + 0.5 * (d(x, z) ** 2 - d(x, y) ** 2 - dyz ** 2) - gamma * f(y))


def firm_nonexpansiveness_residual(f, gamma, x1, x2):
    """``(d(x1,y2)^2 + d(x2,y1)^2 - d(x1,y1)^2 - d(x2,y2)^2)/2 - d(y1,y2)^2``."""
    y1 = f.prox(gamma, x1)
    y2 = f.prox(gamma, x2)
    d = f.space.distance
    return (0.5 * (d(x1, y2) ** 2 + d(x2, y1) ** 2 - d(x1, y1) ** 2 - d(x2, y2) ** 2)
            - d(y1, y2) ** 2)


def nonexpansiveness_gap(f, gamma, x1, x2):
    """``d(x1, x2) - d(prox x1, prox x2)``; nonnegative for a 1-Lipschitz prox."""
    d = f.space.distance
    return d(x1, x2) - d(f.prox(gamma, x1), f.prox(gamma, x2))


def convexity_residual(f, x, y, lam):
    """``(1-lam) f(x) + lam f(y) - f(geodesic(x, y, lam))`` on finite values."""
    m = f.space.geodesic_point(x, y, lam)
    return (1.0 - lam) * f(x) + lam * f(y) - f(m)
