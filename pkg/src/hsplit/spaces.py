"""Geodesic metric spaces of nonpositive curvature.

Four concrete complete CAT(0) spaces are provided:

``Euclidean(dim)``
    Points are float vectors.
``PoincareBall(dim)``
    The Poincare ball model of hyperbolic space with curvature -1. Points are
    float vectors of Euclidean norm strictly less than one.
``MetricTree(vertices, edges)``
    A finite tree with positive edge lengths. Points are :class:`TreePoint`
    positions, either a vertex or an offset along an edge.
``Product(left, right)``
    The product of two spaces with the l2 product metric. Points are
    :class:`ProductPoint` pairs.

The methods ``distance`` and ``geodesic_point`` on a space do not validate
their arguments; they are the hot path. The module-level functions of the
same name check membership first.
"""
import math
from collections import deque
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InvalidInputError

EQ_TOL = 1e-9


def _check_lambda(lam):
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"geodesic parameter must lie in [0, 1], got {lam!r}")
    return lam


def _vector(literal, dim, what):
    try:
        v = np.array(literal, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{what}: cannot read {literal!r} as a vector") from exc
    if v.shape != (dim,):
        raise InvalidInputError(f"{what}: expected {dim} coordinates, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{what}: coordinates must be finite")
    return v


class GeodesicSpace:
    """Common interface of the concrete spaces."""

    kind = None

    def distance(self, x, y):
        raise NotImplementedError

    def _geodesic(self, x, y, lam):
        raise NotImplementedError

    def geodesic_point(self, x, y, lam):
        """Point at parameter ``lam`` on the constant-speed geodesic from x to y."""
        lam = _check_lambda(lam)
        if lam == 0.0:
            return x
        if lam == 1.0:
            return y
        return self._geodesic(x, y, lam)

    def midpoint(self, x, y):
        return self.geodesic_point(x, y, 0.5)

    def contains(self, p):
        raise NotImplementedError

    def check(self, p, what="point"):
        if not self.contains(p):
            raise InvalidInputError(f"{what} {p!r} does not belong to {self.describe()}")
        return p

    def equal(self, x, y):
        """Equality up to ``EQ_TOL * (1 + scale)``."""
        scale = max(self.scale(x), self.scale(y))
        return self.distance(x, y) <= EQ_TOL * (1.0 + scale)

    def scale(self, p):
        """Magnitude of a point, used to scale tolerances."""
        raise NotImplementedError

    def perturb(self, target, magnitude, rng):
        """Return a point at distance ``magnitude`` from ``target`` (possibly clipped)."""
        raise NotImplementedError

    def parse_point(self, literal):
        raise NotImplementedError

    def to_literal(self, p):
        raise NotImplementedError

    def flatten(self, p):
        raise NotImplementedError

    def coord_names(self, prefix):
        raise NotImplementedError

    def pack(self, points):
        """Batch representation of a list of points for ``pairwise_sq_dist``."""
        raise NotImplementedError

    def pairwise_sq_dist(self, A, B):
        """Matrix of squared distances between two packed batches."""
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Euclidean(GeodesicSpace):
    kind = "euclidean"

    def __init__(self, dim):
        if int(dim) < 1:
            raise InvalidInputError("dimension must be at least 1")
        self.dim = int(dim)

    def point(self, coords):
        return self.parse_point(coords)

    def parse_point(self, literal):
        return _vector(literal, self.dim, "euclidean point")

    def to_literal(self, p):
        return [float(c) for c in p]

    def contains(self, p):
        return (isinstance(p, np.ndarray) and p.shape == (self.dim,)
                and bool(np.all(np.isfinite(p))))

    def distance(self, x, y):
        return kernels.euclid_dist(x, y)

    def _geodesic(self, x, y, lam):
        return x + lam * (y - x)

    def scale(self, p):
        return float(np.linalg.norm(p))

    def perturb(self, target, magnitude, rng):
        u = rng.standard_normal(self.dim)
        u /= np.linalg.norm(u)
        return target + magnitude * u

    def flatten(self, p):
        return [float(c) for c in p]

    def coord_names(self, prefix):
        return [f"{prefix}_{i}" for i in range(self.dim)]

    def pack(self, points):
        return np.ascontiguousarray(np.array(points, dtype=np.float64).reshape(-1, self.dim))

    def pairwise_sq_dist(self, A, B):
        return kernels.pairwise_sq_euclid(A, B)

    def describe(self):
        return {"kind": self.kind, "dim": self.dim}


class PoincareBall(GeodesicSpace):
    """Hyperbolic space of curvature -1 in the Poincare ball model.

    Geodesics are evaluated in closed form: the left Mobius translation by
    ``-x`` is an isometry taking x to the origin, geodesics through the
    origin are diameters, and d(0, p) = 2 artanh |p|.
    """

    kind = "poincare"
    # strict interior margin; norms beyond this lose all precision in 1 - |p|^2
    MAX_NORM = 1.0 - 1e-12

    def __init__(self, dim):
        if int(dim) < 1:
            raise InvalidInputError("dimension must be at least 1")
        self.dim = int(dim)

    def point(self, coords):
        return self.parse_point(coords)

    def parse_point(self, literal):
        v = _vector(literal, self.dim, "poincare point")
        if not float(np.dot(v, v)) < 1.0:
            raise InvalidInputError(
                f"poincare point must have Euclidean norm < 1, got {np.linalg.norm(v):.6g}")
        return v

    def to_literal(self, p):
        return [float(c) for c in p]

    def contains(self, p):
        return (isinstance(p, np.ndarray) and p.shape == (self.dim,)
                and bool(np.all(np.isfinite(p))) and float(np.dot(p, p)) < 1.0)

    def distance(self, x, y):
        return kernels.poincare_dist(x, y)

    def _geodesic(self, x, y, lam):
        return kernels.poincare_geodesic(x, y, lam)

    def scale(self, p):
        return 2.0 * math.atanh(min(float(np.linalg.norm(p)), self.MAX_NORM))

    def perturb(self, target, magnitude, rng):
        u = rng.standard_normal(self.dim)
        u /= np.linalg.norm(u)
        r = min(math.tanh(0.5 * magnitude), self.MAX_NORM)
        out = kernels.mobius_add(target, r * u)
        n = float(np.linalg.norm(out))
        if n > self.MAX_NORM:
            out *= self.MAX_NORM / n
        return out

    def flatten(self, p):
        return [float(c) for c in p]

    def coord_names(self, prefix):
        return [f"{prefix}_{i}" for i in range(self.dim)]

    def pack(self, points):
        return np.ascontiguousarray(np.array(points, dtype=np.float64).reshape(-1, self.dim))

    def pairwise_sq_dist(self, A, B):
        return kernels.pairwise_sq_poincare(A, B)

    def describe(self):
        return {"kind": self.kind, "dim": self.dim}


class TreePoint(NamedTuple):
    """Position in a metric tree.

    ``u`` and ``v`` are vertex indices of an edge in its stored orientation and
    ``offset`` is the distance from ``u``. A vertex is ``(u, u, 0.0)``; edge
    positions always have ``0 < offset < length``.
    """

    u: int
    v: int
    offset: float

    @property
    def is_vertex(self):
        return self.u == self.v


class MetricTree(GeodesicSpace):
    """Finite tree with positive edge lengths, viewed as a geodesic space."""

    kind = "tree"

    def __init__(self, vertices, edges):
        names = [str(v) for v in vertices]
        if not names:
            raise InvalidInputError("tree needs at least one vertex")
        if len(set(names)) != len(names):
            raise InvalidInputError("duplicate vertex identifiers")
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}
        n = len(names)
        self.edges = []
        self._edge_of = {}
        adj = [[] for _ in range(n)]
        for e in edges:
            try:
                a, b, length = e
            except (TypeError, ValueError) as exc:
                raise InvalidInputError(f"edge must be [u, v, length], got {e!r}") from exc
            a, b = str(a), str(b)
            for end in (a, b):
                if end not in self.index:
                    raise InvalidInputError(f"edge endpoint {end!r} is not a vertex")
            length = float(length)
            if not (length > 0.0 and math.isfinite(length)):
                raise InvalidInputError(f"edge {a}-{b} must have positive finite length")
            ia, ib = self.index[a], self.index[b]
            if ia == ib:
                raise InvalidInputError(f"self-loop at {a!r}")
            if (ia, ib) in self._edge_of:
                raise InvalidInputError(f"duplicate edge {a}-{b}")
            self._edge_of[(ia, ib)] = self._edge_of[(ib, ia)] = len(self.edges)
            self.edges.append((ia, ib, length))
            adj[ia].append((ib, length))
            adj[ib].append((ia, length))
        if len(self.edges) != n - 1:
            raise InvalidInputError("a tree on n vertices has exactly n - 1 edges")
        self.adjacency = adj

        D = np.full((n, n), np.inf)
        parent = np.full((n, n), -1, dtype=np.int64)
        for root in range(n):
            D[root, root] = 0.0
            queue = deque([root])
            while queue:
                w = queue.popleft()
                for z, length in adj[w]:
                    if D[root, z] == np.inf:
                        D[root, z] = D[root, w] + length
                        parent[root, z] = w
                        queue.append(z)
        if np.isinf(D).any():
            raise InvalidInputError("tree is not connected")
        self.D = np.ascontiguousarray(D)
        # parent[r, z]: neighbour of z one step closer to r
        self._parent = parent
        self._lengths = np.array([e[2] for e in self.edges])
        self.diameter = float(D.max())

    # -- point construction -------------------------------------------------
    def vertex(self, name):
        try:
            i = self.index[str(name)]
        except KeyError:
            raise InvalidInputError(f"unknown vertex {name!r}") from None
        return TreePoint(i, i, 0.0)

    def on_edge(self, a, b, offset):
        """Point at distance ``offset`` from vertex ``a`` along edge a-b."""
        ia = self.index.get(str(a))
        ib = self.index.get(str(b))
        if ia is None or ib is None or (ia, ib) not in self._edge_of:
            raise InvalidInputError(f"no edge {a}-{b} in tree")
        u, v, length = self.edges[self._edge_of[(ia, ib)]]
        offset = float(offset)
        if not -EQ_TOL * length <= offset <= length * (1 + EQ_TOL):
            raise InvalidInputError(f"offset {offset} outside edge {a}-{b} of length {length}")
        if ia != u:
            offset = length - offset
        return self._canon(u, v, offset)

    def _canon(self, u, v, offset):
        if u == v:
            return TreePoint(u, u, 0.0)
        length = self.edges[self._edge_of[(u, v)]][2]
        if offset <= 0.0:
            return TreePoint(u, u, 0.0)
        if offset >= length:
            return TreePoint(v, v, 0.0)
        return TreePoint(u, v, float(offset))

    def _len(self, p):
        return 0.0 if p.u == p.v else self.edges[self._edge_of[(p.u, p.v)]][2]

    def parse_point(self, literal):
        if isinstance(literal, dict):
            if "vertex" in literal:
                return self.vertex(literal["vertex"])
            if "edge" in literal:
                a, b = literal["edge"]
                return self.on_edge(a, b, literal.get("offset", 0.0))
        if isinstance(literal, str):
            return self.vertex(literal)
        raise InvalidInputError(
            f"tree point must be {{'vertex': v}} or {{'edge': [u, v], 'offset': s}}, got {literal!r}")

    def to_literal(self, p):
        if p.is_vertex:
            return {"vertex": self.names[p.u]}
        return {"edge": [self.names[p.u], self.names[p.v]], "offset": float(p.offset)}

    def contains(self, p):
        if not isinstance(p, TreePoint):
            return False
        n = len(self.names)
        if not (0 <= p.u < n and 0 <= p.v < n):
            return False
        if p.is_vertex:
            return p.offset == 0.0
        if (p.u, p.v) not in self._edge_of:
            return False
        u, v, length = self.edges[self._edge_of[(p.u, p.v)]]
        return (u, v) == (p.u, p.v) and 0.0 < p.offset < length

    # -- geometry -----------------------------------------------------------
    def distance(self, x, y):
        return kernels.tree_dist(x.u, x.v, x.offset, self._len(x),
                                 y.u, y.v, y.offset, self._len(y), self.D)

    def _ends(self, p):
        """(endpoint, distance from p) pairs for the edge carrying p."""
        if p.is_vertex:
            return ((p.u, 0.0),)
        length = self._len(p)
        return ((p.u, p.offset), (p.v, length - p.offset))

    def vertex_path(self, a, b):
        """Vertex indices on the unique path from a to b, inclusive."""
        path = [a]
        par = self._parent[b]
        while path[-1] != b:
            path.append(int(par[path[-1]]))
        return path

    def _walk(self, a, b, t):
        """Point at distance t from vertex a towards vertex b."""
        path = self.vertex_path(a, b)
        for w, z in zip(path, path[1:]):
            length = self.D[w, z]
            if t < length:
                u, v, _ = self.edges[self._edge_of[(w, z)]]
                return self._canon(u, v, t if u == w else length - t)
            t -= length
        return TreePoint(b, b, 0.0)

    def _geodesic(self, x, y, lam):
        if not x.is_vertex and (x.u, x.v) == (y.u, y.v):
            return self._canon(x.u, x.v, x.offset + lam * (y.offset - x.offset))
        best = None
        for a, da in self._ends(x):
            for b, db in self._ends(y):
                total = da + self.D[a, b] + db
                if best is None or total < best[0]:
                    best = (total, a, da, b, db)
        total, a, da, b, db = best
        t = lam * total
        if t < da:
            # still on the edge carrying x, heading to a
            return self._canon(x.u, x.v, x.offset - t if a == x.u else x.offset + t)
        t -= da
        if t < self.D[a, b]:
            return self._walk(a, b, t)
        t -= self.D[a, b]
        if y.is_vertex:
            return y
        # on the edge carrying y, t away from endpoint b
        return self._canon(y.u, y.v, t if b == y.u else self._len(y) - t)

    def scale(self, p):
        return self.distance(TreePoint(0, 0, 0.0), p)

    def sample_uniform(self, rng, vertex_prob=0.0):
        """Sample uniformly by length; with ``vertex_prob`` return a random vertex."""
        if vertex_prob > 0.0 and rng.random() < vertex_prob:
            i = int(rng.integers(len(self.names)))
            return TreePoint(i, i, 0.0)
        if not self.edges:
            return TreePoint(0, 0, 0.0)
        k = int(rng.choice(len(self.edges), p=self._lengths / self._lengths.sum()))
        u, v, length = self.edges[k]
        return self._canon(u, v, rng.uniform(0.0, length))

    def perturb(self, target, magnitude, rng):
        if magnitude == 0.0 or not self.edges:
            return target
        for _ in range(16):
            q = self.sample_uniform(rng)
            d = self.distance(target, q)
            if d > 0.0:
                return self._geodesic(target, q, min(magnitude / d, 1.0))
        return target

    def flatten(self, p):
        if p.is_vertex:
            return [self.names[p.u], 0.0]
        return [f"{self.names[p.u]}-{self.names[p.v]}", float(p.offset)]

    def coord_names(self, prefix):
        return [f"{prefix}_at", f"{prefix}_offset"]

    def pack(self, points):
        u = np.array([p.u for p in points], dtype=np.int64)
        v = np.array([p.v for p in points], dtype=np.int64)
        s = np.array([p.offset for p in points], dtype=np.float64)
        length = np.array([self._len(p) for p in points], dtype=np.float64)
        return (u, v, s, length)

    def pairwise_sq_dist(self, A, B):
        return kernels.pairwise_sq_tree(*A, *B, self.D)

    def describe(self):
        return {
            "kind": self.kind,
            "vertices": list(self.names),
            "edges": [[self.names[u], self.names[v], length] for u, v, length in self.edges],
        }


class ProductPoint(NamedTuple):
    left: object
    right: object


class Product(GeodesicSpace):
    """l2 product of two geodesic spaces; geodesics are component-wise."""

    kind = "product"

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def point(self, left, right):
        return ProductPoint(left, right)

    def parse_point(self, literal):
        if isinstance(literal, dict) and {"left", "right"} <= literal.keys():
            return ProductPoint(self.left.parse_point(literal["left"]),
                                self.right.parse_point(literal["right"]))
        raise InvalidInputError(f"product point must be {{'left': .., 'right': ..}}, got {literal!r}")

    def to_literal(self, p):
        return {"left": self.left.to_literal(p.left), "right": self.right.to_literal(p.right)}

    def contains(self, p):
        return (isinstance(p, ProductPoint) and self.left.contains(p.left)
                and self.right.contains(p.right))

    def distance(self, x, y):
        a = self.left.distance(x.left, y.left)
        b = self.right.distance(x.right, y.right)
        return math.sqrt(a * a + b * b)

    def _geodesic(self, x, y, lam):
        return ProductPoint(self.left.geodesic_point(x.left, y.left, lam),
                            self.right.geodesic_point(x.right, y.right, lam))

    def scale(self, p):
        return math.hypot(self.left.scale(p.left), self.right.scale(p.right))

    def perturb(self, target, magnitude, rng):
        theta = rng.uniform(0.0, 0.5 * math.pi)
        return ProductPoint(self.left.perturb(target.left, magnitude * math.cos(theta), rng),
                            self.right.perturb(target.right, magnitude * math.sin(theta), rng))

    def flatten(self, p):
        return self.left.flatten(p.left) + self.right.flatten(p.right)

    def coord_names(self, prefix):
        return self.left.coord_names(prefix + "_l") + self.right.coord_names(prefix + "_r")

    def pack(self, points):
        return (self.left.pack([p.left for p in points]),
                self.right.pack([p.right for p in points]))

    def pairwise_sq_dist(self, A, B):
        return self.left.pairwise_sq_dist(A[0], B[0]) + self.right.pairwise_sq_dist(A[1], B[1])

    def describe(self):
        return {"kind": self.kind, "left": self.left.describe(), "right": self.right.describe()}


def space_from_descriptor(desc):
    """Build a space from its JSON descriptor."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise InvalidInputError(f"space descriptor needs a 'kind', got {desc!r}")
    kind = desc["kind"]
    if kind == "euclidean":
        return Euclidean(desc["dim"])
    if kind == "poincare":
        return PoincareBall(desc["dim"])
    if kind == "tree":
        return MetricTree(desc["vertices"], desc["edges"])
    if kind == "product":
        return Product(space_from_descriptor(desc["left"]), space_from_descriptor(desc["right"]))
    raise InvalidInputError(f"unknown space kind {kind!r}")


# -- checked entry points and CAT(0) residuals ------------------------------

def distance(space, x, y):
    space.check(x, "x")
    space.check(y, "y")
    return space.distance(x, y)


def geodesic_point(space, x, y, lam):
    space.check(x, "x")
    space.check(y, "y")
    return space.geodesic_point(x, y, lam)


def cat0_quadrilateral_residual(space, x, y, z, w):
    """d(x,z)^2 + d(x,w)^2 + d(y,z)^2 + d(y,w)^2 - d(x,y)^2 - d(z,w)^2.

    Nonnegative in every CAT(0) space.
    """
    for name, p in zip("xyzw", (x, y, z, w)):
        space.check(p, name)
    d = space.distance
    return (d(x, z) ** 2 + d(x, w) ** 2 + d(y, z) ** 2 + d(y, w) ** 2
            - d(x, y) ** 2 - d(z, w) ** 2)


def geodesic_convexity_residual(space, x, y, z, lam):
    """Comparison-inequality slack for the point at ``lam`` on [x, y] seen from z.

    Returns ``(1-lam) d(z,x)^2 + lam d(z,y)^2 - lam(1-lam) d(x,y)^2 - d(z, m)^2``
    with ``m = geodesic_point(x, y, lam)``. Zero in Euclidean space,
    nonnegative in CAT(0) spaces.
    """
    lam = _check_lambda(lam)
    for name, p in zip("xyz", (x, y, z)):
        space.check(p, name)
    d = space.distance
    m = space.geodesic_point(x, y, lam)
    return ((1.0 - lam) * d(z, x) ** 2 + lam * d(z, y) ** 2
            - lam * (1.0 - lam) * d(x, y) ** 2 - d(z, m) ** 2)


def midpoint_residual(space, x, y, z):
    """``1/2 d(z,x)^2 + 1/2 d(z,y)^2 - 1/4 d(x,y)^2 - d(z, m)^2`` for the midpoint m."""
    for name, p in zip("xyz", (x, y, z)):
        space.check(p, name)
    d = space.distance
    m = space.midpoint(x, y)
    return 0.5 * d(z, x) ** 2 + 0.5 * d(z, y) ** 2 - 0.25 * d(x, y) ** 2 - d(z, m) ** 2
