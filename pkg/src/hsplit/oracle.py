"""Brute-force minimizers used to validate closed-form proxes and to compute
reference solutions of small splitting problems.

Nothing here relies on the closed-form prox formulas except
``solve_reference``'s final polish, which alternates the two prox maps from a
grid minimizer found independently.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistencyError, InvalidInputError, NoMinimumError
from .functions import (Ball, Box, DistanceToPoint, HalfSquaredDistance,
                        Indicator, ProductSet, Zero)
from .spaces import Euclidean, MetricTree, PoincareBall, Product, ProductPoint

INF = math.inf
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# -- sampling regions -------------------------------------------------------

@dataclass(frozen=True)
class BoxRegion:
    """Euclidean box ``center +- half_widths``."""

    center: tuple
    half_widths: tuple


@dataclass(frozen=True)
class DiskRegion:
    """Poincare-ball points of Euclidean norm at most ``radius`` (< 1)."""

    radius: float


@dataclass(frozen=True)
class TreeRegion:
    """The whole metric tree."""


@dataclass(frozen=True)
class ProductRegion:
    left: object
    right: object


def default_region(space, half_width=10.0, radius=0.9):
    if isinstance(space, Euclidean):
        return BoxRegion((0.0,) * space.dim, (half_width,) * space.dim)
    if isinstance(space, PoincareBall):
        return DiskRegion(radius)
    if isinstance(space, MetricTree):
        return TreeRegion()
    if isinstance(space, Product):
        return ProductRegion(default_region(space.left, half_width, radius),
                             default_region(space.right, half_width, radius))
    raise InvalidInputError(f"no default region for {space!r}")


def region_from_descriptor(space, desc):
    if desc is None:
        return default_region(space)
    kind = desc.get("kind")
    if kind == "box":
        center = tuple(float(c) for c in desc["center"])
        hw = tuple(float(c) for c in desc["half_widths"])
        if len(center) != space.dim or len(hw) != space.dim or min(hw) <= 0:
            raise InvalidInputError("box region must match the dimension and have positive widths")
        return BoxRegion(center, hw)
    if kind == "disk":
        r = float(desc["radius"])
        if not 0.0 < r < 1.0:
            raise InvalidInputError("disk region radius must lie in (0, 1)")
        return DiskRegion(r)
    if kind == "tree":
        return TreeRegion()
    if kind == "product":
        return ProductRegion(region_from_descriptor(space.left, desc["left"]),
                             region_from_descriptor(space.right, desc["right"]))
    raise InvalidInputError(f"unknown region descriptor {desc!r}")


def sample_point(space, region, rng):
    """Uniform sample from the region (trees: by length, plus vertices)."""
    if isinstance(region, BoxRegion):
        c = np.asarray(region.center)
        h = np.asarray(region.half_widths)
        return c + rng.uniform(-1.0, 1.0, size=c.shape) * h
    if isinstance(region, DiskRegion):
        u = rng.standard_normal(space.dim)
        u /= np.linalg.norm(u)
        return u * region.radius * rng.random() ** (1.0 / space.dim)
    if isinstance(region, TreeRegion):
        return space.sample_uniform(rng, vertex_prob=0.15)
    if isinstance(region, ProductRegion):
        return ProductPoint(sample_point(space.left, region.left, rng),
                            sample_point(space.right, region.right, rng))
    raise InvalidInputError(f"unknown region {region!r}")


def discretize(space, region, resolution):
    """Grid points of the region: ``resolution`` points per axis or per edge."""
    if resolution < 2:
        raise InvalidInputError("resolution must be at least 2")
    if isinstance(region, BoxRegion):
        axes = [np.linspace(c - h, c + h, resolution)
                for c, h in zip(region.center, region.half_widths)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [np.ascontiguousarray(p) for p in np.stack([m.ravel() for m in mesh], axis=1)]
    if isinstance(region, DiskRegion):
        ax = np.linspace(-region.radius, region.radius, resolution)
        mesh = np.meshgrid(*([ax] * space.dim), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        keep = np.einsum("ij,ij->i", pts, pts) <= region.radius ** 2
        return [np.ascontiguousarray(p) for p in pts[keep]]
    if isinstance(region, TreeRegion):
        pts = [space.vertex(n) for n in space.names]
        for u, v, length in space.edges:
            for t in np.linspace(0.0, length, resolution + 2)[1:-1]:
                pts.append(space._canon(u, v, float(t)))
        return pts
    if isinstance(region, ProductRegion):
        left = discretize(space.left, region.left, resolution)
        right = discretize(space.right, region.right, resolution)
        return [ProductPoint(a, b) for a in left for b in right]
    raise InvalidInputError(f"unknown region {region!r}")


def _cell(space, region, resolution):
    if isinstance(region, BoxRegion):
        return 2.0 * max(region.half_widths) / (resolution - 1)
    if isinstance(region, DiskRegion):
        return 2.0 * region.radius / (resolution - 1)
    if isinstance(region, TreeRegion):
        return max(length for _, _, length in space.edges) / (resolution + 1) if space.edges else 0.0
    if isinstance(region, ProductRegion):
        return math.hypot(_cell(space.left, region.left, resolution),
                          _cell(space.right, region.right, resolution))
    raise InvalidInputError(f"unknown region {region!r}")


def strictly_inside(space, region, p, margin):
    """Whether p is at least ``margin`` (chart units) away from the region boundary."""
    if isinstance(region, BoxRegion):
        off = np.abs(p - np.asarray(region.center))
        return bool(np.all(off < np.asarray(region.half_widths) - margin))
    if isinstance(region, DiskRegion):
        return float(np.linalg.norm(p)) < region.radius - margin
    if isinstance(region, TreeRegion):
        return True
    if isinstance(region, ProductRegion):
        return (strictly_inside(space.left, region.left, p.left, margin)
                and strictly_inside(space.right, region.right, p.right, margin))
    raise InvalidInputError(f"unknown region {region!r}")


def enlarge(region):
    if isinstance(region, BoxRegion):
        return BoxRegion(region.center, tuple(2.0 * h for h in region.half_widths))
    if isinstance(region, DiskRegion):
        return DiskRegion(0.5 * (1.0 + region.radius))
    if isinstance(region, ProductRegion):
        return ProductRegion(enlarge(region.left), enlarge(region.right))
    return region


# -- one-dimensional searches -----------------------------------------------

def golden_section(fun, a, b, tol=1e-12, coarse=64):
    """Minimize a unimodal ``fun`` on [a, b]; returns ``(t, fun(t))``.

    A coarse scan picks the bracket around the best sample, so ``+inf``
    plateaus (constraints) are handled as long as the finite part of the
    interval is hit by the scan.
    """
    ts = np.linspace(a, b, coarse + 1)
    vals = [fun(float(t)) for t in ts]
    i = int(np.argmin(vals))
    best_t, best_v = float(ts[i]), vals[i]
    if best_v == INF:
        raise NoMinimumError("objective is +inf on the whole search interval")
    lo = float(ts[max(i - 1, 0)])
    hi = float(ts[min(i + 1, coarse)])

    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > tol:
        for t, v in ((c, fc), (d, fd)):
            if v < best_v:
                best_t, best_v = t, v
        if fc == INF and fd == INF:
            # finite part lies strictly between the probes
            lo, hi = c, d
            c = hi - INV_PHI * (hi - lo)
            d = lo + INV_PHI * (hi - lo)
            fc, fd = fun(c), fun(d)
        elif fc < fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = fun(d)
    for t, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_t, best_v = t, v
    return best_t, best_v


def golden_section_on_geodesic(space, objective, x, y, tol=1e-12):
    """Minimize ``objective`` along the geodesic [x, y].

    Returns ``(lam, value)`` with lam in [0, 1]. Exact up to ``tol`` for
    objectives that are convex along geodesics.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    return golden_section(lambda t: objective(space.geodesic_point(x, y, t)), 0.0, 1.0, tol)


def tree_minimize(tree, objective, tol=1e-12):
    """Minimize over a whole metric tree: golden section on every edge.

    Exact up to ``tol`` for objectives convex along each edge.
    """
    best_p, best_v = None, INF
    for name in tree.names:
        p = tree.vertex(name)
        v = objective(p)
        if v < best_v:
            best_p, best_v = p, v
    for u, v, length in tree.edges:
        def along(t, u=u, v=v):
            return objective(tree._canon(u, v, t))
        try:
            t, val = golden_section(along, 0.0, length, tol)
        except NoMinimumError:
            continue
        if val < best_v:
            best_p, best_v = tree._canon(u, v, t), val
    if best_p is None:
        raise NoMinimumError("objective is +inf on the whole tree")
    return best_p, best_v


# -- prox oracle ------------------------------------------------------------

def prox_oracle(f, gamma, x, tol=1e-12):
    """Minimize ``gamma f(y) + d(x, y)^2 / 2`` without the closed-form prox.

    Trees are searched exhaustively edge by edge. Elsewhere the search runs
    along the geodesic from x to the function's anchor (the ball centre for
    ball indicators), coordinate-wise for boxes, and factor-wise for product
    sets; callers should additionally confirm that random off-geodesic points
    are no better (see ``no_better_nearby``).
    """
    space = f.space

    def objective(y):
        fy = f(y)
        if fy == INF:
            return INF
        return gamma * fy + 0.5 * space.distance(x, y) ** 2

    if isinstance(space, MetricTree):
        return tree_minimize(space, objective, tol)[0]
    if isinstance(f, Zero):
        return x
    if isinstance(f, (HalfSquaredDistance, DistanceToPoint)):
        lam, _ = golden_section_on_geodesic(space, objective, x, f.anchor, tol)
        return space.geodesic_point(x, f.anchor, lam)
    if isinstance(f, Indicator):
        return _projection_oracle(f.set, x, tol)
    raise InvalidInputError(f"no oracle for {type(f).__name__}")


def _projection_oracle(s, x, tol):
    space = s.space
    if isinstance(space, MetricTree):
        return tree_minimize(space, lambda y: space.distance(x, y) ** 2 if s.contains(y) else INF,
                             tol)[0]
    if isinstance(s, ProductSet):
        return ProductPoint(_projection_oracle(s.left, x.left, tol),
                            _projection_oracle(s.right, x.right, tol))
    if isinstance(s, Box):
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            lo, hi = s.lower[i], s.upper[i]
            a = lo if math.isfinite(lo) else min(xi, hi) - 1.0
            b = hi if math.isfinite(hi) else max(xi, lo) + 1.0

            def fun(t, lo=lo, hi=hi, xi=xi):
                return (t - xi) ** 2 if lo <= t <= hi else INF
            out[i] = golden_section(fun, a, b, tol * max(1.0, b - a))[0]
        return out
    if isinstance(s, Ball):
        obj = lambda y: space.distance(x, y) ** 2 if s.contains(y) else INF  # noqa: E731
        lam, _ = golden_section_on_geodesic(space, obj, x, s.center, tol)
        return space.geodesic_point(x, s.center, lam)
    raise InvalidInputError(f"no projection oracle for {type(s).__name__}")


def no_better_nearby(space, objective, center, radius, rng, samples=200):
    """Smallest ``objective(p) - objective(center)`` over random p near center.

    A negative return means a random point beat ``center``.
    """
    base = objective(center)
    worst = INF
    for _ in range(samples):
        p = space.perturb(center, radius * rng.random(), rng)
        worst = min(worst, objective(p) - base)
    return worst


def poincare_curve_length(curve, steps=100_000):
    """Hyperbolic length of a curve in the Poincare ball, ``curve: [0,1] -> R^n``.

    Midpoint rule on the chords with density ``2 / (1 - |p|^2)``.
    """
    ts = np.linspace(0.0, 1.0, steps + 1)
    pts = np.array([curve(t) for t in ts])
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mids = np.array([curve(t) for t in 0.5 * (ts[1:] + ts[:-1])])
    dens = 2.0 / (1.0 - np.einsum("ij,ij->i", mids, mids))
    return float(np.sum(chords * dens))


# -- grid minimization ------------------------------------------------------

def grid_minimize(space, objective, region=None, resolution=21, refine_neighbours=8,
                  sweeps=40, tol=1e-12):
    """Best grid point of the region, refined by golden section along geodesics.

    Refinement repeatedly searches the segments from the incumbent to its
    ``refine_neighbours`` nearest grid points and accepts any improvement.
    Returns ``(point, value)``; ties go to the lowest grid index.
    """
    region = default_region(space) if region is None else region
    pts = discretize(space, region, resolution)
    vals = np.array([objective(p) for p in pts], dtype=np.float64)
    i = int(np.argmin(vals))
    if vals[i] == INF:
        raise NoMinimumError("objective is +inf on every grid point")
    best, best_v = pts[i], float(vals[i])
    dist = np.array([space.distance(best, p) for p in pts])
    order = np.argsort(dist, kind="stable")
    anchors = [pts[j] for j in order[1:refine_neighbours + 1]]
    for _ in range(sweeps):
        improved = False
        for q in anchors:
            if space.distance(best, q) == 0.0:
                continue
            lam, v = golden_section_on_geodesic(space, objective, best, q, tol)
            if v < best_v - 1e-15 * (1.0 + abs(best_v)):
                best, best_v = space.geodesic_point(best, q, lam), v
                improved = True
        if not improved:
            break
    return best, best_v


@dataclass
class Reference:
    """Reference solution ``(x, y)`` with optimal value and fixed-point residual."""

    x: object
    y: object
    value: float
    residual: float
    polish_iterations: int = 0


def _grid_phi(problem, region, resolution):
    space = problem.space
    pts = discretize(space, region, resolution)
    F = np.array([problem.f(p) for p in pts])
    G = np.array([problem.g(p) for p in pts])
    packed = space.pack(pts)
    D2 = space.pairwise_sq_dist(packed, packed)
    with np.errstate(invalid="ignore"):
        phi = F[:, None] + G[None, :] + D2 / (2.0 * problem.gamma)
    k = int(np.argmin(phi))
    i, j = divmod(k, len(pts))
    if not np.isfinite(phi[i, j]):
        raise NoMinimumError("Phi is +inf on every grid pair")
    return pts[i], pts[j], float(phi[i, j])


def solve_reference(problem, region=None, resolution=40, polish_tol=1e-12,
                    max_polish=200_000, max_enlarge=4):
    """Reference minimizer of Phi via grid search over X x X, then fixed-point polish.

    The polish alternates ``x <- prox_f(y)``, ``y <- prox_g(x)`` from the grid
    minimizer until the displacement drops below ``polish_tol``. Since each
    half-step cannot increase Phi, a polished value above the grid value
    signals a broken prox and raises :class:`InconsistencyError`.
    """
    space = problem.space
    region = default_region(space) if region is None else region
    for _ in range(max_enlarge + 1):
        gx, gy, gval = _grid_phi(problem, region, resolution)
        margin = 0.5 * _cell(space, region, resolution)
        if strictly_inside(space, region, gx, margin) and strictly_inside(space, region, gy, margin):
            break
        region = enlarge(region)

    x, y = gx, gy
    iterations = 0
    for iterations in range(1, max_polish + 1):
        x_new = problem.prox_f(y)
        y_new = problem.prox_g(x_new)
        disp = space.distance(x_new, x) + space.distance(y_new, y)
        x, y = x_new, y_new
        if disp < polish_tol:
            break
    value = problem.phi(x, y)
    if not value <= gval + 1e-9 * (1.0 + abs(gval)):
        raise InconsistencyError(
            f"polished value {value!r} exceeds grid value {gval!r}; a prox map is inexact")
    return Reference(x, y, value, problem.fixed_point_residual(x, y), iterations)
