"""Mean reactivity along orbits, sup-mean / lim-mean classification,
empirical contraction checks, fixed points and periodic orbits."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import MapSystem, as_state, orbit, p_compose, p_jacobian
from .errors import ConvergenceError
from .norms import NormSpec, reactivity_linear, vector_norm


class Classification(str, Enum):
    SUP_MEAN_CONTRACTIVE = "SupMeanContractive"
    SUP_MEAN_REACTIVE = "SupMeanReactive"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class ReactivitySeries:
    p: int
    norm: NormSpec
    values: np.ndarray
    source: str
    k0: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("reactivity series has non-finite values")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class MeanReport:
    prefix_means: np.ndarray
    sup_mean: float
    lim_mean_estimate: float
    converged: bool
    classification: Classification
    tolerance_band: float
    window: int

    @property
    def contraction_factor(self) -> float:
        """``lambda = sup_mean + 1`` used by the contraction inequality."""
        return self.sup_mean + 1.0


def stepwise_reactivity(sys: MapSystem, norm: NormSpec, x0, k0: int = 0,
                        window: int = 1, p: int = 1) -> ReactivitySeries:
    """``r_k`` of the p-iteration linearisation for ``k = k0 .. k0+window-1``.

    ``x0`` is the state at time ``k0``.
    """
    if window < 1 or p < 1:
        raise ValueError("window and p must be >= 1")
    xs = orbit(sys, x0, k0, window)
    vals = np.array([
        reactivity_linear(norm, p_jacobian(sys, k0 + i, xs[i], p)) for i in range(window)
    ])
    return ReactivitySeries(p, norm, vals, f"jacobian:{sys.name}", k0)


def mean_report(series: ReactivitySeries | np.ndarray, band: float = 1e-9,
                converge_tol: float = 1e-3) -> MeanReport:
    """Prefix means, their running sup, and a lim-mean estimate.

    ``converged`` compares the final prefix mean with the one a decade
    earlier (window ``N`` vs ``N // 10``); windows shorter than 10 never
    count as converged.
    """
    vals = series.values if isinstance(series, ReactivitySeries) else np.asarray(series, float)
    if vals.size == 0:
        raise ValueError("empty reactivity series")
    prefix = np.cumsum(vals) / np.arange(1, vals.size + 1)
    sup_mean = float(np.max(prefix))
    lim = float(prefix[-1])
    n = vals.size
    converged = n >= 10 and abs(prefix[-1] - prefix[n // 10 - 1]) < converge_tol
    if sup_mean < -band:
        cls = Classification.SUP_MEAN_CONTRACTIVE
    elif sup_mean > band:
        cls = Classification.SUP_MEAN_REACTIVE
    else:
        cls = Classification.INCONCLUSIVE
    return MeanReport(prefix, sup_mean, lim, bool(converged), cls, band, n)


@dataclass(frozen=True)
class ContractionCheck:
    holds: bool
    worst_ratio: float
    worst_k: int


def verify_contraction_inequality(sys: MapSystem, norm: NormSpec, x0, y0, K: int,
                                  lam: float, k0: int = 0) -> ContractionCheck:
    """Check ``||x_k - y_k|| <= lam^k ||x_0 - y_0||`` for ``k = 1..K``."""
    if lam < 0:
        raise ValueError("contraction factor must be nonnegative")
    x0 = as_state(sys, x0)
    y0 = as_state(sys, y0)
    gap0 = vector_norm(norm, x0 - y0)
    if gap0 == 0.0:
        raise ValueError("x0 and y0 must differ")
    xs = orbit(sys, x0, k0, K + 1)
    ys = orbit(sys, y0, k0, K + 1)
    holds = True
    worst, worst_k = -np.inf, 0
    for k in range(1, K + 1):
        gap = vector_norm(norm, xs[k] - ys[k])
        bound = lam ** k * gap0
        ratio = gap / bound if bound > 0 else (0.0 if gap == 0 else np.inf)
        if gap > bound * (1.0 + 1e-9):
            holds = False
        if ratio > worst:
            worst, worst_k = ratio, k
    return ContractionCheck(holds, float(worst), worst_k)


@dataclass(frozen=True)
class FixedPoint:
    x_star: np.ndarray
    iterations: int
    cauchy_residual: float


def find_fixed_point(sys: MapSystem, x0, tol: float = 1e-12,
                     max_iter: int = 1_000_000) -> FixedPoint:
    """Picard iteration ``z_{k+1} = f(z_k)`` until successive iterates are within tol."""
    if not sys.time_invariant:
        raise ValueError("find_fixed_point needs a time-invariant system")
    z = as_state(sys, x0)
    res = np.inf
    for it in range(1, max_iter + 1):
        z_next = p_compose(sys, 0, z, 1)
        res = float(np.linalg.norm(z_next - z))
        z = z_next
        if res < tol:
            return FixedPoint(z, it, res)
    raise ConvergenceError(
        f"no fixed point within {max_iter} iterations (residual {res:.3e}); "
        "the map may not be contractive or may have a periodic attractor",
        last_iterate=z,
        residual=res,
    )


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: np.ndarray
    iterations: int


def _divisors(p):
    return [d for d in range(1, p + 1) if p % d == 0]


def detect_periodic_orbit(sys: MapSystem, p: int, x0, tol: float = 1e-10,
                          max_iter: int = 100_000) -> PeriodicOrbit:
    """Converge the p-composition from ``x0`` (phase k=0) and report the
    minimal period ``d | p`` of the limit point together with its orbit."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not sys.time_invariant and (sys.period is None or p % sys.period):
        raise ValueError("time-varying systems need a period that divides p")
    z = as_state(sys, x0)
    res = np.inf
    for it in range(1, max_iter + 1):
        z_next = p_compose(sys, 0, z, p)
        res = float(np.linalg.norm(z_next - z))
        z = z_next
        if res < tol:
            break
    else:
        raise ConvergenceError(
            f"p-composition did not converge in {max_iter} iterations",
            last_iterate=z,
            residual=res,
        )
    pts = orbit(sys, z, 0, p + 1)
    for d in _divisors(p):
        if all(np.linalg.norm(pts[j + d] - pts[j]) < tol for j in range(p + 1 - d)):
            return PeriodicOrbit(d, pts[:d].copy(), it)
    return PeriodicOrbit(p, pts[:p].copy(), it)

