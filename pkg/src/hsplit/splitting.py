"""Error-tolerant backward-backward splitting and its convergence diagnostics.

The problem is to minimize

    Phi(x, y) = f(x) + g(y) + d(x, y)**2 / (2 gamma)

over pairs of points of a CAT(0) space. One iteration computes the exact
targets ``prox_g(x_n)`` and ``prox_f(y_n)`` and then displaces each by an
error of prescribed size:

    y_n     = perturb(prox_{gamma g}(x_n), delta_n)
    x_{n+1} = perturb(prox_{gamma f}(y_n), eps_n)

With summable errors the iterates converge to a minimizer. Every space in
this package is locally compact, so convergence is certified metrically.

The ``check_*`` functions audit a finished :class:`IterateTrace` against the
inequalities that the convergence theory guarantees.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, InvalidReferenceError
from .functions import Indicator, Zero, _check_gamma

log = logging.getLogger(__name__)

INF = math.inf
RTOL = 1e-10


@dataclass(frozen=True)
class SplitProblem:
    space: object
    f: object
    g: object
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_gamma(self.gamma))

    def phi(self, x, y):
        fx = self.f(x)
        if fx == INF:
            return INF
        gy = self.g(y)
        if gy == INF:
            return INF
        return fx + gy + self.space.distance(x, y) ** 2 / (2.0 * self.gamma)

    def prox_f(self, y):
        return self.f.prox(self.gamma, y)

    def prox_g(self, x):
        return self.g.prox(self.gamma, x)

    def fixed_point_residual(self, x, y):
        """``d(x, prox_f(y)) + d(y, prox_g(x))``; zero exactly at minimizers."""
        d = self.space.distance
        return d(x, self.prox_f(y)) + d(y, self.prox_g(x))

    @property
    def uniformly_convex(self):
        return self.f.modulus is not None or self.g.modulus is not None


def phi(problem, x, y):
    return problem.phi(x, y)


def exact_step(problem, x):
    """One error-free iteration: ``(y_n, x_{n+1})`` from ``x_n``."""
    y = problem.prox_g(x)
    return y, problem.prox_f(y)


def proximal_point_problem(space, f, gamma):
    """Backward-backward with g = 0 is the proximal point algorithm on f."""
    return SplitProblem(space, f, Zero(space), gamma)


def alternating_projections_problem(C, D, gamma=1.0):
    """Backward-backward with two indicators is alternating projections."""
    return SplitProblem(C.space, Indicator(C), Indicator(D), gamma)


# -- error model -------------------------------------------------------------

@dataclass(frozen=True)
class ErrorSchedule:
    """Magnitudes ``(delta_n, eps_n)`` of the prox errors at iteration n.

    ``inverse_square`` uses ``delta_n = eps_n = c / (n + 1)**2``. A ``custom``
    schedule lists the pairs explicitly; past its end the final pair is held,
    so it is summable only when the final pair is zero.
    """

    kind: str = "none"
    c: float = 0.0
    values: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "inverse_square", "custom"):
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "inverse_square" and not (self.c >= 0 and math.isfinite(self.c)):
            raise InvalidInputError("inverse_square constant must be a nonnegative real")
        if self.kind == "custom":
            vals = tuple((float(d), float(e)) for d, e in self.values)
            if not vals:
                raise InvalidInputError("custom schedule needs at least one (delta, eps) pair")
            if any(not (d >= 0 and e >= 0) for d, e in vals):
                raise InvalidInputError("error magnitudes must be nonnegative")
            object.__setattr__(self, "values", vals)

    @classmethod
    def none(cls, seed=0):
        return cls("none", seed=seed)

    @classmethod
    def inverse_square(cls, c, seed=0):
        return cls("inverse_square", c=float(c), seed=seed)

    @classmethod
    def custom(cls, values, seed=0):
        return cls("custom", values=tuple(values), seed=seed)

    def magnitudes(self, n):
        if self.kind == "none":
            return 0.0, 0.0
        if self.kind == "inverse_square":
            m = self.c / (n + 1) ** 2
            return m, m
        return self.values[min(n, len(self.values) - 1)]

    @property
    def error_free(self):
        if self.kind == "none":
            return True
        if self.kind == "inverse_square":
            return self.c == 0.0
        return all(d == 0.0 and e == 0.0 for d, e in self.values)

    @property
    def summable(self):
        if self.kind == "custom":
            return self.values[-1] == (0.0, 0.0)
        return True


def perturb(space, target, magnitude, rng):
    """Displace ``target`` by ``magnitude`` along a random geodesic direction.

    Bounded geometries (trees) may clip the displacement; callers record the
    realized distance, not the requested one.
    """
    magnitude = float(magnitude)
    if not magnitude >= 0:
        raise InvalidInputError(f"error magnitude must be nonnegative, got {magnitude!r}")
    if magnitude == 0.0:
        return target
    return space.perturb(target, magnitude, rng)


@dataclass(frozen=True)
class StoppingRule:
    """Stop at ``max_iterations`` or once
    ``d(x_{n+1}, x_n) + d(y_n, y_{n-1}) < displacement_tol`` (n >= 1), or
    ``|Phi(x_{n+1}, y_n) - optimal_value| < objective_tol`` when both are given.
    Runs whose ``Phi(x_{n+1}, y_n)`` drops below ``divergence_floor`` are
    flagged unbounded and stopped.
    """

    max_iterations: int = 1000
    displacement_tol: float = 0.0
    objective_tol: Optional[float] = None
    optimal_value: Optional[float] = None
    divergence_floor: float = -1e15

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise InvalidInputError("max_iterations must be at least 1")
        if self.displacement_tol < 0 or (self.objective_tol is not None and self.objective_tol < 0):
            raise InvalidInputError("tolerances must be nonnegative")


@dataclass
class IterateTrace:
    """Everything a run produced.

    With N iterations: ``xs`` and ``ys`` hold x_0..x_N and y_0..y_N;
    ``gx[n] = prox_g(x_n)`` (n <= N), ``fy[n] = prox_f(y_n)``,
    ``xt[n] = prox_f(prox_g(x_n))`` and ``yt[n] = prox_g(prox_f(y_n))``
    (n < N). ``delta[n] = d(y_n, gx[n])`` and ``eps[n] = d(x_{n+1}, fy[n])``
    are the realized error sizes.
    """

    problem: SplitProblem
    schedule: ErrorSchedule
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    gx: list = field(default_factory=list)
    fy: list = field(default_factory=list)
    xt: list = field(default_factory=list)
    yt: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    phi_xy: list = field(default_factory=list)
    phi_xnext_y: list = field(default_factory=list)
    disp_x: list = field(default_factory=list)
    disp_y: list = field(default_factory=list)
    reference: Optional[tuple] = None
    dist_x_ref: Optional[list] = None
    dist_y_ref: Optional[list] = None
    stop_reason: str = ""
    unbounded: bool = False

    @property
    def iterations(self):
        return len(self.xs) - 1

    @property
    def error_free(self):
        return all(d == 0.0 for d in self.delta) and all(e == 0.0 for e in self.eps)

    @property
    def guarantees_void(self):
        return not self.schedule.summable

    def exact_values(self):
        """``Phi(prox_f(prox_g(x_n)), prox_g(x_n))`` for n < N."""
        phi_ = self.problem.phi
        return [phi_(a, b) for a, b in zip(self.xt, self.gx)]

    def mirror_values(self):
        """``Phi(prox_f(y_n), prox_g(prox_f(y_n)))`` for n < N."""
        phi_ = self.problem.phi
        return [phi_(a, b) for a, b in zip(self.fy, self.yt)]


def run(problem, x0, schedule=None, stop=None, reference=None):
    """Run the backward-backward iteration from ``x0``.

    ``reference`` is an optional solution pair ``(x_bar, y_bar)`` whose
    distances to the iterates are recorded.
    """
    schedule = schedule or ErrorSchedule.none()
    stop = stop or StoppingRule()
    space = problem.space
    space.check(x0, "x0")
    d = space.distance
    rng = np.random.default_rng(schedule.seed)
    if not schedule.summable:
        log.warning("error schedule is not summable; convergence guarantees are void")

    tr = IterateTrace(problem, schedule, reference=reference)
    x = x0
    y_prev = None
    tr.stop_reason = "max_iterations"
    for n in range(int(stop.max_iterations)):
        delta_n, eps_n = schedule.magnitudes(n)
        gx = problem.prox_g(x)
        y = perturb(space, gx, delta_n, rng)
        fy = problem.prox_f(y)
        x_next = perturb(space, fy, eps_n, rng)
        dr = 0.0 if y is gx else d(y, gx)
        er = 0.0 if x_next is fy else d(x_next, fy)

        tr.xs.append(x)
        tr.ys.append(y)
        tr.gx.append(gx)
        tr.fy.append(fy)
        tr.xt.append(fy if dr == 0.0 else problem.prox_f(gx))
        tr.delta.append(dr)
        tr.eps.append(er)
        tr.phi_xy.append(problem.phi(x, y))
        v = problem.phi(x_next, y)
        tr.phi_xnext_y.append(v)
        dx = d(x_next, x)
        tr.disp_x.append(dx)
        x = x_next

        if v < stop.divergence_floor:
            tr.unbounded = True
            tr.stop_reason = "unbounded"
            break
        if (stop.objective_tol is not None and stop.optimal_value is not None
                and abs(v - stop.optimal_value) < stop.objective_tol):
            tr.stop_reason = "objective_tol"
            break
        if y_prev is not None and dx + d(y, y_prev) < stop.displacement_tol:
            tr.stop_reason = "displacement_tol"
            break
        y_prev = y

    # close the last pair (x_N, y_N)
    n = len(tr.xs)
    delta_n, _ = schedule.magnitudes(n)
    gx = problem.prox_g(x)
    y = perturb(space, gx, delta_n, rng)
    tr.xs.append(x)
    tr.ys.append(y)
    tr.gx.append(gx)
    tr.delta.append(0.0 if y is gx else d(y, gx))
    tr.phi_xy.append(problem.phi(x, y))

    for k in range(n):
        tr.yt.append(tr.gx[k + 1] if tr.eps[k] == 0.0 else problem.prox_g(tr.fy[k]))
        tr.disp_y.append(d(tr.ys[k + 1], tr.ys[k]))
    if reference is not None:
        xb, yb = reference
        tr.dist_x_ref = [d(p, xb) for p in tr.xs]
        tr.dist_y_ref = [d(p, yb) for p in tr.ys]
    log.info("run finished after %d iterations (%s)", tr.iterations, tr.stop_reason)
    return tr


# -- diagnostics ------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    verdict: str  # "pass" | "fail" | "not_applicable"
    first_violation: Optional[int] = None
    max_violation: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    @property
    def ok(self):
        return self.verdict != "fail"

    def as_dict(self):
        return {"verdict": self.verdict, "first_violation": self.first_violation,
                "max_violation": self.max_violation, "detail": self.detail}


def _na(name, why):
    return CheckReport(name, "not_applicable", detail={"reason": why})


def _excess(a, b, rtol=RTOL, scale=None):
    """How much ``a <= b`` is violated beyond ``rtol * (1 + scale)``; <= 0 means fine."""
    if b == INF or a == -INF:
        return -INF
    if a == INF:
        return INF
    if scale is None:
        scale = max(abs(a), abs(b))
    return (a - b) - rtol * (1.0 + scale)


class _Tally:
    def __init__(self, name):
        self.name = name
        self.first = None
        self.worst = -INF

    def add(self, n, excess):
        if excess > self.worst:
            self.worst = excess
        if excess > 0 and self.first is None:
            self.first = n

    def report(self, **detail):
        verdict = "pass" if self.first is None else "fail"
        worst = self.worst if math.isfinite(self.worst) else (0.0 if self.worst < 0 else INF)
        return CheckReport(self.name, verdict, self.first, worst, detail)


def check_monotone_decrease(trace, rtol=RTOL):
    """``Phi(x_{n+1}, y_{n+1}) <= Phi(x_{n+1}, y_n) <= Phi(x_n, y_n)`` for every n."""
    name = "monotone_decrease"
    if not trace.error_free:
        return _na(name, "requires an error-free trace")
    t = _Tally(name)
    for n in range(trace.iterations):
        a, b, c = trace.phi_xy[n + 1], trace.phi_xnext_y[n], trace.phi_xy[n]
        t.add(n, max(_excess(a, b, rtol), _excess(b, c, rtol)))
    return t.report(checked=trace.iterations)


def check_displacement_summability(trace):
    """Explicit bounds on the partial sums of squared displacements.

    Over the telescoping range n = 1..N-1::

        sum d(x_{n+1}, x_n)^2 <= 9 sum_{n<N} (delta_n + eps_n)^2
                                 + 6 gamma (V_0 - V_{N-1}),

    ``V_n = Phi(prox_f(prox_g(x_n)), prox_g(x_n))``; the y-sequence obeys the
    mirrored bound with errors ``delta_n + eps_{n-1}``. Error-free traces must
    also meet ``sum d(x_{n+1}, x_n)^2 <= 2 gamma (Phi(x_1, y_0) - Phi(x_N, y_{N-1}))``
    and its mirror ``2 gamma (Phi(x_1, y_1) - Phi(x_N, y_N))``.
    The n = 0 term is excluded: it is not controlled by the telescoped
    inequality, and including it breaks the error-free bound (it is reported
    under ``detail['with_first_term']`` for reference).
    """
    name = "displacement_summability"
    N = trace.iterations
    gam = trace.problem.gamma
    if N < 2:
        return CheckReport(name, "pass", detail={"reason": "fewer than two iterations"})
    dx2 = np.square(trace.disp_x)
    dy2 = np.square(trace.disp_y)
    delta = np.asarray(trace.delta)
    eps = np.asarray(trace.eps)

    V = trace.exact_values()
    W = trace.mirror_values()
    sum_x = float(dx2[1:].sum())
    sum_y = float(dy2[1:].sum())
    bound_x = 9.0 * float(np.square(delta[:N] + eps[:N]).sum()) + 6.0 * gam * (V[0] - V[N - 1])
    mirror_err = delta[1:N + 1] + eps[:N]
    bound_y = 9.0 * float(np.square(mirror_err).sum()) + 6.0 * gam * (W[0] - W[N - 1])

    t = _Tally(name)
    t.add(0, _excess(sum_x, bound_x))
    t.add(1, _excess(sum_y, bound_y))
    detail = {"sum_x": sum_x, "bound_x": bound_x, "sum_y": sum_y, "bound_y": bound_y}
    if trace.error_free:
        tight_x = 2.0 * gam * (trace.phi_xnext_y[0] - trace.phi_xnext_y[N - 1])
        tight_y = 2.0 * gam * (trace.phi_xy[1] - trace.phi_xy[N])
        t.add(2, _excess(sum_x, tight_x))
        t.add(3, _excess(sum_y, tight_y))
        detail.update(tight_bound_x=tight_x, tight_bound_y=tight_y)
        detail["with_first_term"] = {
            "sum_x": float(dx2.sum()),
            "tight_bound_x": tight_x,
            "holds": bool(dx2.sum() <= tight_x * (1 + RTOL) + RTOL),
        }
    return t.report(**detail)


def _require_fixed_point(problem, xbar, ybar, tol):
    r = problem.fixed_point_residual(xbar, ybar)
    if not r <= tol:
        raise InvalidReferenceError(f"reference has fixed-point residual {r:.3e} > {tol:.1e}")
    return r


def check_fejer(trace, xbar, ybar, rtol=RTOL, fixed_point_tol=1e-8):
    """``d(x_{n+1}, x_bar) <= d(y_n, y_bar) <= d(x_n, x_bar)`` for every n."""
    name = "fejer"
    if not trace.error_free:
        return _na(name, "requires an error-free trace")
    r = _require_fixed_point(trace.problem, xbar, ybar, fixed_point_tol)
    d = trace.problem.space.distance
    dx = [d(p, xbar) for p in trace.xs]
    dy = [d(p, ybar) for p in trace.ys]
    t = _Tally(name)
    for n in range(trace.iterations):
        scale = max(dx[n], dy[n], dx[n + 1])
        t.add(n, max(_excess(dx[n + 1], dy[n], rtol, scale), _excess(dy[n], dx[n], rtol, scale)))
    N = trace.iterations
    t.add(N, _excess(dy[N], dx[N], rtol, max(dy[N], dx[N])))
    return t.report(reference_residual=r)


def check_quasi_fejer(trace, xbar, ybar, rtol=RTOL, fixed_point_tol=1e-8):
    """``d(x_n, x_bar) - sum_{k<n} (delta_k + eps_k)`` is nonincreasing.

    Equivalent to ``d(x_{n+1}, x_bar) <= d(x_n, x_bar) + delta_n + eps_n``;
    applies to runs with or without errors.
    """
    name = "quasi_fejer"
    r = _require_fixed_point(trace.problem, xbar, ybar, fixed_point_tol)
    d = trace.problem.space.distance
    dx = [d(p, xbar) for p in trace.xs]
    t = _Tally(name)
    for n in range(trace.iterations):
        slack = trace.delta[n] + trace.eps[n]
        t.add(n, _excess(dx[n + 1], dx[n] + slack, rtol, max(dx[n], dx[n + 1])))
    return t.report(reference_residual=r)


def check_value_convergence(trace, ell, reference=None, tol=1e-6, rtol=RTOL):
    """``Phi(prox_f(prox_g(x_n)), prox_g(x_n)) -> ell``.

    Passes when the mean over the last 10% of iterations (at least one) is
    within ``tol`` of ``ell``, as is its f/g mirror, and, when ``reference``
    is given, every term satisfies
    ``ell <= V_n <= ell + (d(x_n, x_bar)^2 - d(x~_{n+1}, x_bar)^2) / (2 gamma)``.
    Error-free traces additionally need the tail of ``Phi(x_n, y_n)`` within tol.
    """
    name = "value_convergence"
    if ell == -INF:
        return _na(name, "optimal value is -inf; only the averaged bound applies")
    N = trace.iterations
    if N < 1:
        return _na(name, "empty trace")
    V = trace.exact_values()
    W = trace.mirror_values()
    k = max(1, N // 10)
    tail_v = float(np.mean(V[-k:]))
    tail_w = float(np.mean(W[-k:]))
    t = _Tally(name)
    t.add(N - 1, abs(tail_v - ell) - tol)
    t.add(N - 1, abs(tail_w - ell) - tol)
    detail = {"tail_mean": tail_v, "mirror_tail_mean": tail_w, "ell": ell, "tail_length": k}
    if trace.error_free:
        tail_xy = float(np.mean(trace.phi_xy[-k:]))
        t.add(N, abs(tail_xy - ell) - tol)
        detail["tail_mean_xy"] = tail_xy
    if reference is not None:
        xbar, _ = reference
        d = trace.problem.space.distance
        gam = trace.problem.gamma
        sandwich = _Tally("sandwich")
        for n in range(N):
            upper = ell + (d(trace.xs[n], xbar) ** 2 - d(trace.xt[n], xbar) ** 2) / (2.0 * gam)
            e = max(_excess(ell, V[n], rtol), _excess(V[n], upper, rtol))
            sandwich.add(n, e)
            t.add(n, e)
        detail["sandwich_first_violation"] = sandwich.first
    return t.report(**detail)


def check_averaged_rate(trace, test_points, rtol=1e-9):
    """``mean_{n<N} Phi(x_{n+1}, y_n) <= Phi(x, y) + d(x_0, x)^2 / (2 gamma N)``."""
    name = "averaged_rate"
    if not trace.error_free:
        return _na(name, "requires an error-free trace")
    N = trace.iterations
    if N < 1:
        return _na(name, "empty trace")
    mean = float(np.mean(trace.phi_xnext_y))
    prob = trace.problem
    d = prob.space.distance
    t = _Tally(name)
    for i, (x, y) in enumerate(test_points):
        rhs = prob.phi(x, y) + d(trace.xs[0], x) ** 2 / (2.0 * prob.gamma * N)
        t.add(i, _excess(mean, rhs, rtol))
    return t.report(mean=mean, points=len(test_points))


def check_strong_convergence_uniform(trace, xbar, ybar, tol=1e-6):
    """Final pair within ``tol`` of the unique solution (needs a modulus on f or g)."""
    name = "strong_convergence"
    if not trace.problem.uniformly_convex:
        return _na(name, "neither f nor g is uniformly convex")
    d = trace.problem.space.distance
    dist = d(trace.xs[-1], xbar) + d(trace.ys[-1], ybar)
    return CheckReport(name, "pass" if dist <= tol else "fail",
                       None if dist <= tol else trace.iterations, dist - tol,
                       {"final_distance": dist, "tol": tol})


def limit_pair(trace):
    """Exact-target estimate of the limit: ``(prox_f(prox_g(x_N)), prox_g(x_N))``."""
    gx = trace.gx[-1]
    return trace.problem.prox_f(gx), gx


def check_metric_convergence(trace, ell, tol=1e-6, displacement_tol=1e-6):
    """Metric convergence of the pair and optimality of its limit.

    The last displacement ``d(x_N, x_{N-1}) + d(y_N, y_{N-1})`` must be below
    ``displacement_tol`` and Phi at :func:`limit_pair` within ``tol`` of ``ell``.
    """
    name = "metric_convergence"
    if ell is None or ell == -INF:
        return _na(name, "no finite optimal value")
    N = trace.iterations
    if N < 1:
        return _na(name, "empty trace")
    last = trace.disp_x[-1] + trace.disp_y[-1]
    lx, ly = limit_pair(trace)
    val = trace.problem.phi(lx, ly)
    t = _Tally(name)
    t.add(N, last - displacement_tol)
    t.add(N, abs(val - ell) - tol if val != INF else INF)
    return t.report(last_displacement=last, limit_value=val, ell=ell)


def default_test_points(problem, sampler, rng, count=10):
    """Feasible test pairs ``(prox_f(p), prox_g(q))`` for random p, q."""
    pts = []
    for _ in range(count):
        p = sampler(rng)
        q = sampler(rng)
        pts.append((problem.prox_f(p), problem.prox_g(q)))
    return pts


def run_diagnostics(trace, reference=None, ell=None, test_points=(), tolerances=None):
    """All checks that apply to the trace; returns ``{name: CheckReport}``."""
    tol = {"value": 1e-6, "limit": 1e-6, "strong": 1e-6, "displacement": 1e-6}
    tol.update(tolerances or {})
    reports = {}
    r = check_monotone_decrease(trace)
    reports[r.name] = r
    r = check_displacement_summability(trace)
    reports[r.name] = r
    if reference is not None:
        xb, yb = reference
        for r in (check_fejer(trace, xb, yb), check_quasi_fejer(trace, xb, yb),
                  check_strong_convergence_uniform(trace, xb, yb, tol["strong"])):
            reports[r.name] = r
    if ell is not None:
        r = check_value_convergence(trace, ell, reference, tol["value"])
        reports[r.name] = r
        r = check_metric_convergence(trace, ell, tol["limit"], tol["displacement"])
        reports[r.name] = r
    if test_points:
        r = check_averaged_rate(trace, test_points)
        reports[r.name] = r
    return reports
