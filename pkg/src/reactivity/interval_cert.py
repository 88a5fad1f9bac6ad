"""Widest invariant interval pairs for logistic-family maps.

Both problems look for ``[a, b]`` and ``[c, d]`` with
``f0([a, b]) ⊆ [c, d]``, ``f1([c, d]) ⊆ [a, b]`` and a p-step derivative
bound ``|D f^(p)| <= 1``, maximising ``(b - a) + (d - c)``:

* ``TimeInvariant(alpha, p, eps)`` -- one logistic map ``f0 = f1``, intervals
  kept on either side of the fixed point ``(alpha-1)/alpha`` by ``eps``, and
  the derivative bound enforced on ``[a, b]`` only.
* ``TimeVarying(e, p, base)`` -- ``g`` (base+e) maps ``[a, b]`` to ``[c, d]``
  and ``h`` (base-e) maps back; the bound is enforced on both intervals for
  ``h∘g∘...`` and ``g∘h∘...`` respectively.

The derivative bound is checked on a refined uniform grid and the observed
maximum is inflated by 1%, so certification is numerical, not rigorous.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

DERIV_GRID = 10_000
DERIV_REFINE_TOL = 1e-6
DERIV_INFLATION = 1.01
MAX_GRID = 2 ** 22


@dataclass(frozen=True)
class TimeInvariant:
    alpha: float
    p: int = 2
    eps: float = 1e-6
    kind = "time-invariant"

    @property
    def param(self) -> float:
        return self.alpha

    @property
    def fixed_point(self) -> float:
        return (self.alpha - 1.0) / self.alpha

    @property
    def alphas(self) -> tuple:
        return (self.alpha,)

    @property
    def box_ab(self) -> tuple:
        return (0.0, self.fixed_point - self.eps)

    @property
    def box_cd(self) -> tuple:
        return (self.fixed_point + self.eps, 1.0)

    check_cd_derivative = False

    def with_p(self, p):
        return replace(self, p=p)


@dataclass(frozen=True)
class TimeVarying:
    e: float
    p: int = 2
    base: float = 3.075
    kind = "time-varying"

    @property
    def param(self) -> float:
        return self.e

    @property
    def alphas(self) -> tuple:
        return (self.base + self.e, self.base - self.e)

    box_ab = (0.0, 1.0)
    box_cd = (0.0, 1.0)
    check_cd_derivative = True

    def with_p(self, p):
        return replace(self, p=p)


def _alpha_cycle(problem_or_alpha):
    if isinstance(problem_or_alpha, (TimeInvariant, TimeVarying)):
        return problem_or_alpha.alphas
    return (float(problem_or_alpha),)


def _check_even(problem):
    if problem.p < 2 or problem.p % 2:
        raise ValueError("interval certification needs an even p >= 2")


def interval_image_quadratic(alpha: float, l, u):
    """Exact image of ``x -> alpha x (1 - x)`` over ``[l, u]``; vectorised."""
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(l > u):
        raise ValueError("interval with l > u")
    fl = alpha * l * (1.0 - l)
    fu = alpha * u * (1.0 - u)
    lo = np.minimum(fl, fu)
    hi = np.maximum(fl, fu)
    # The parabola's vertex lies at 0.5.
    hi = np.where((l <= 0.5) & (0.5 <= u), np.maximum(hi, alpha / 4.0), hi)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def deriv_abs(alphas, x, p: int, phase: int = 0) -> np.ndarray:
    """``|d/dx f^(p)(x)|`` for maps cycling through ``alphas`` from ``phase``."""
    y = np.asarray(x, dtype=float)
    d = np.ones_like(y)
    m = len(alphas)
    for j in range(p):
        a = alphas[(phase + j) % m]
        d = d * (a * (1.0 - 2.0 * y))
        y = a * y * (1.0 - y)
    return np.abs(d)


def sup_abs_deriv_product(problem, interval, p: int | None = None,
                          grid: int = DERIV_GRID, phase: int = 0) -> float:
    """Grid estimate of ``sup |D f^(p)|`` over ``interval``, inflated by 1%.

    The grid is doubled until the maximum moves by less than 1e-6.
    ``problem`` is a problem instance or a bare logistic parameter.
    """
    alphas = _alpha_cycle(problem)
    if p is None:
        p = problem.p
    l, u = float(interval[0]), float(interval[1])
    if l > u:
        raise ValueError("interval with l > u")
    if l == u:
        return float(deriv_abs(alphas, np.array([l]), p, phase)[0]) * DERIV_INFLATION
    n = grid
    prev = float(np.max(deriv_abs(alphas, np.linspace(l, u, n + 1), p, phase)))
    while n < MAX_GRID:
        n *= 2
        cur = float(np.max(deriv_abs(alphas, np.linspace(l, u, n + 1), p, phase)))
        if abs(cur - prev) < DERIV_REFINE_TOL:
            prev = cur
            break
        prev = cur
    return prev * DERIV_INFLATION


@dataclass(frozen=True)
class IntervalPair:
    a: float
    b: float
    c: float
    d: float
    problem: TimeInvariant | TimeVarying
    certified: bool = False
    sup_deriv: tuple = ()
    violations: tuple = field(default=())

    feasible = True

    @property
    def width(self) -> float:
        return (self.b - self.a) + (self.d - self.c)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class Infeasible:
    problem: TimeInvariant | TimeVarying
    reason: str = "no certified candidate"

    feasible = False
    certified = False
    width = math.nan


def _box_violations(problem, a, b, c, d):
    out = []
    if isinstance(problem, TimeInvariant):
        lo_ab, hi_ab = problem.box_ab
        lo_cd, hi_cd = problem.box_cd
        if a < lo_ab:
            out.append("0 <= a")
        if b > hi_ab:
            out.append("b <= (alpha-1)/alpha - eps")
        if c < lo_cd:
            out.append("c >= (alpha-1)/alpha + eps")
        if d > hi_cd:
            out.append("d <= 1")
    else:
        if a < 0.0:
            out.append("0 <= a")
        if d > 1.0:
            out.append("d <= 1")
    return out


def _image_violations(problem, a, b, c, d):
    out = []
    alphas = problem.alphas
    f0, f1 = alphas[0], alphas[-1]
    lo, hi = interval_image_quadratic(f0, a, b)
    if lo < c or hi > d:
        out.append("f([a,b]) in [c,d]")
    lo, hi = interval_image_quadratic(f1, c, d)
    if lo < a or hi > b:
        out.append("f([c,d]) in [a,b]")
    return out


def certify(pair: IntervalPair) -> IntervalPair:
    """Verify the box, mapping and derivative constraints of ``pair``.

    Returns a copy with ``certified`` set and every violated constraint
    named in ``violations``.
    """
    problem = pair.problem
    _check_even(problem)
    a, b, c, d = pair.as_tuple()
    if not (a <= b and c <= d):
        raise ValueError("interval pair must satisfy a <= b and c <= d")
    violations = _box_violations(problem, a, b, c, d)
    violations += _image_violations(problem, a, b, c, d)
    sups = ()
    if not violations:
        s_ab = sup_abs_deriv_product(problem, (a, b), problem.p, phase=0)
        sups = (s_ab,)
        if s_ab > 1.0:
            violations.append("|Df^(p)| <= 1 on [a,b]")
        if problem.check_cd_derivative:
            s_cd = sup_abs_deriv_product(problem, (c, d), problem.p, phase=1)
            sups = (s_ab, s_cd)
            if s_cd > 1.0:
                violations.append("|Df^(p)| <= 1 on [c,d]")
    return replace(pair, certified=not violations, sup_deriv=sups,
                   violations=tuple(violations))


# ------------------------------------------------------------------ search

class _RangeMax:
    """Sparse table over a sampled |Df^(p)| profile for O(1) vectorised range maxima."""

    def __init__(self, alphas, p, phase, lo, hi, fine=8001):
        self.alphas, self.p, self.phase = alphas, p, phase
        self.xs = np.linspace(lo, hi, fine)
        table = [deriv_abs(alphas, self.xs, p, phase)]
        w = 1
        while 2 * w <= fine:
            prev = table[-1]
            table.append(np.maximum(prev[:-w], prev[w:]))
            w *= 2
        self.table = table

    def __call__(self, l, u):
        l = np.asarray(l, dtype=float)
        u = np.asarray(u, dtype=float)
        i0 = np.searchsorted(self.xs, l, side="left")
        i1 = np.searchsorted(self.xs, u, side="right")
        n = np.maximum(i1 - i0, 1)
        lev = np.floor(np.log2(n)).astype(int)
        out = np.zeros(np.broadcast(l, u).shape)
        for k in np.unique(lev):
            m = lev == k
            t = self.table[k]
            a = np.minimum(i0[m], t.size - 1)
            b = np.clip(i1[m] - (1 << k), 0, t.size - 1)
            out[m] = np.maximum(t[a], t[b])
        empty = i1 <= i0
        out[empty] = 0.0
        # Endpoints are evaluated exactly.
        ends = np.maximum(deriv_abs(self.alphas, l, self.p, self.phase),
                          deriv_abs(self.alphas, u, self.p, self.phase))
        return np.maximum(out, ends)


def _pair_derivative_ok(problem, grid, phase, limit):
    """Screen every grid pair ``(lo <= hi)`` against the derivative bound."""
    rmax = _RangeMax(problem.alphas, problem.p, phase, grid[0], grid[-1])
    i_lo, i_hi = np.triu_indices(grid.size)
    return i_lo, i_hi, rmax(grid[i_lo], grid[i_hi]) <= limit


def coarse_candidates(problem, points: int = 50):
    """Exhaustive search of the ``points^4`` grid over the constraint boxes.

    The constraints split into conditions on ``(a, b)``, on ``(c, d)`` and
    couplings between the two pairs, so the grid is evaluated as a
    (pairs_ab x pairs_cd) feasibility matrix. Returns candidate tuples
    ordered by decreasing width.
    """
    A = np.linspace(*problem.box_ab, points)
    C = np.linspace(*problem.box_cd, points)
    limit = 1.0 / DERIV_INFLATION
    ia, ib, ok_ab = _pair_derivative_ok(problem, A, 0, limit)
    a, b = A[ia][ok_ab], A[ib][ok_ab]
    ic, id_ = np.triu_indices(points)
    c, d = C[ic], C[id_]
    if problem.check_cd_derivative:
        _, _, ok_cd = _pair_derivative_ok(problem, C, 1, limit)
        c, d = c[ok_cd], d[ok_cd]
    if a.size == 0 or c.size == 0:
        return []
    alphas = problem.alphas
    lo1, hi1 = interval_image_quadratic(alphas[0], a, b)
    lo2, hi2 = interval_image_quadratic(alphas[-1], c, d)
    feas = ((c[None, :] <= lo1[:, None]) & (hi1[:, None] <= d[None, :])
            & (a[:, None] <= lo2[None, :]) & (hi2[None, :] <= b[:, None]))
    rows, cols = np.nonzero(feas)
    if rows.size == 0:
        return []
    widths = (b - a)[rows] + (d - c)[cols]
    order = np.argsort(-widths, kind="stable")
    return [(float(a[rows[k]]), float(b[rows[k]]), float(c[cols[k]]), float(d[cols[k]]))
            for k in order]


def image_candidates(problem, points: int = 400):
    """Candidates with ``[c, d]`` equal to the image of ``[a, b]``.

    The image is the smallest admissible ``[c, d]`` for a given ``[a, b]``,
    so an ``(a, b)`` grid pair is feasible for some ``(c, d)`` iff it is
    feasible with the image. Catches thin feasible sets a 4-D grid misses.
    """
    A = np.linspace(*problem.box_ab, points)
    limit = 1.0 / DERIV_INFLATION
    ia, ib, ok = _pair_derivative_ok(problem, A, 0, limit)
    a, b = A[ia][ok], A[ib][ok]
    if a.size == 0:
        return []
    alphas = problem.alphas
    c, d = interval_image_quadratic(alphas[0], a, b)
    lo_cd, hi_cd = problem.box_cd
    keep = (c >= lo_cd) & (d <= hi_cd)
    lo2, hi2 = interval_image_quadratic(alphas[-1], c, d)
    keep &= (lo2 >= a) & (hi2 <= b)
    if problem.check_cd_derivative and np.any(keep):
        rmax = _RangeMax(alphas, problem.p, 1, *problem.box_cd)
        keep[keep] = rmax(c[keep], d[keep]) <= limit
    idx = np.nonzero(keep)[0]
    widths = (b - a)[idx] + (d - c)[idx]
    order = idx[np.argsort(-widths, kind="stable")]
    return [(float(a[k]), float(b[k]), float(c[k]), float(d[k])) for k in order]


def _moves():
    # Widening moves, pairs of widening moves, and widen-one/shrink-another-by-half.
    widen = [(0, -1.0), (1, 1.0), (2, -1.0), (3, 1.0)]
    out = []
    for i, s in widen:
        v = [0.0] * 4
        v[i] = s
        out.append(v)
    for (i, s), (j, t) in itertools.combinations(widen, 2):
        v = [0.0] * 4
        v[i], v[j] = s, t
        out.append(v)
    for i, s in widen:
        for j, t in widen:
            if i != j:
                v = [0.0] * 4
                v[i], v[j] = s, -0.5 * t
                out.append(v)
    return np.array(out)


MOVES = _moves()


def _clamp(problem, x):
    lo_ab, hi_ab = problem.box_ab
    lo_cd, hi_cd = problem.box_cd
    a = min(max(x[0], lo_ab), hi_ab)
    b = min(max(x[1], lo_ab), hi_ab)
    c = min(max(x[2], lo_cd), hi_cd)
    d = min(max(x[3], lo_cd), hi_cd)
    return float(a), float(b), float(c), float(d)


def refine(pair: IntervalPair, step: float, min_step: float = 1e-5) -> IntervalPair:
    """Pattern-search ascent on the width keeping every iterate certified."""
    problem = pair.problem
    best = pair
    while step >= min_step:
        improved = True
        while improved:
            improved = False
            x = np.array(best.as_tuple())
            for mv in MOVES:
                a, b, c, d = _clamp(problem, x + step * mv)
                if a > b or c > d or (b - a) + (d - c) <= best.width:
                    continue
                if _box_violations(problem, a, b, c, d) or _image_violations(problem, a, b, c, d):
                    continue
                cand = certify(IntervalPair(a, b, c, d, problem))
                if cand.certified:
                    best = cand
                    improved = True
                    break
        step /= 2.0
    return best


def maximize_width(problem, grid_points: int = 50, min_step: float = 1e-5,
                   seeds=(), max_attempts: int = 500):
    """Widest certified pair found by exhaustive coarse grid + pattern search.

    ``seeds`` are extra candidate tuples ``(a, b, c, d)`` (for instance the
    optimum of a divisor ``p``, which stays feasible for its multiples).
    Returns an ``IntervalPair`` or ``Infeasible``.
    """
    _check_even(problem)
    starts = []
    for gen in (coarse_candidates(problem, grid_points), image_candidates(problem)):
        for n, cand in enumerate(gen):
            if n >= max_attempts:
                break
            pair = certify(IntervalPair(*cand, problem))
            if pair.certified:
                starts.append(pair)
                break
    for seed in seeds:
        pair = certify(IntervalPair(*map(float, seed), problem))
        if pair.certified:
            starts.append(pair)
    if not starts:
        return Infeasible(problem)
    spacing = max(problem.box_ab[1] - problem.box_ab[0],
                  problem.box_cd[1] - problem.box_cd[0]) / (grid_points - 1)
    return max((refine(st, spacing / 2.0, min_step) for st in starts),
               key=lambda r: r.width)


# ------------------------------------------------------------------ sweeps

SWEEP_COLUMNS = ("param", "p", "feasible", "w_star", "a", "b", "c", "d")


def param_grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    if n < 0 or step <= 0:
        raise ValueError("invalid sweep range")
    return np.round(lo + step * np.arange(n + 1), 12)


def make_problem(family: str, param: float, p: int, **kw):
    if family == "time-invariant":
        return TimeInvariant(float(param), p, **kw)
    if family == "time-varying":
        return TimeVarying(float(param), p, **kw)
    raise ValueError(f"unknown problem family {family!r}")


def _row(problem, result):
    if result.feasible:
        return dict(param=problem.param, p=problem.p, feasible=True, w_star=result.width,
                    a=result.a, b=result.b, c=result.c, d=result.d)
    nan = math.nan
    return dict(param=problem.param, p=problem.p, feasible=False, w_star=nan,
                a=nan, b=nan, c=nan, d=nan)


def _sweep_cell(args):
    family, param, ps, kw, grid_points = args
    rows, done = [], {}
    for p in sorted(ps):
        problem = make_problem(family, param, p, **kw)
        seeds = [r.as_tuple() for q, r in done.items() if p % q == 0 and r.feasible]
        res = maximize_width(problem, grid_points, seeds=seeds)
        done[p] = res
        rows.append(_row(problem, res))
    return rows


def sweep(family: str, lo: float, hi: float, step: float, ps=(2, 4),
          grid_points: int = 50, workers: int | None = None, **kw) -> list:
    """One row per (param, p), sorted by (param, p). Results for a divisor of
    ``p`` seed the search at ``p``. ``workers > 1`` fans cells out to processes."""
    params = param_grid(lo, hi, step)
    cells = [(family, float(v), tuple(ps), kw, grid_points) for v in params]
    if workers is None:
        workers = int(os.environ.get("REACTIVITY_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_sweep_cell, cells))
    else:
        chunks = [_sweep_cell(c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["param"], r["p"]))
    return rows
