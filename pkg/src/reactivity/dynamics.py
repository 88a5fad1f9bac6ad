"""Discrete-time systems ``x_{k+1} = f_k(x_k)``: orbits, p-fold compositions,
Jacobian products and the built-in catalogue (logistic, time-varying
logistic, Henon, linear time-varying, alternating maps).

Built-in ``eval``/``jacobian`` rules broadcast over leading axes, so a
stack of states with shape ``(n, m)`` maps to ``(n, m)`` and Jacobians to
``(n, m, m)``. Only the net_sync module relies on that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError
from .linalg_core import as_matrix, as_vector

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MapSystem:
    dim: int
    eval: Callable[[int, np.ndarray], np.ndarray]
    jacobian: Callable[[int, np.ndarray], np.ndarray]
    time_invariant: bool = True
    name: str = "map"
    # Number of distinct maps cycled by k (time-periodic systems); None if aperiodic.
    period: int | None = 1
    vectorized: bool = False

    def __repr__(self):
        return f"MapSystem({self.name}, dim={self.dim})"


def as_state(sys: MapSystem, x) -> np.ndarray:
    x = as_vector(x)
    if x.size != sys.dim:
        raise ValueError(f"{sys.name}: state has dimension {x.size}, expected {sys.dim}")
    return x


def check_state(x, step):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"orbit diverged at step {step}", step=step, state=x)


# ---------------------------------------------------------------- built-ins

def _quadratic(alpha: float, name: str) -> MapSystem:
    def f(k, x):
        return alpha * x * (1.0 - x)

    def jac(k, x):
        return (alpha * (1.0 - 2.0 * x))[..., None]

    return MapSystem(1, f, jac, True, name, 1, True)


def logistic(alpha: float) -> MapSystem:
    if not 0.0 <= alpha <= 4.0:
        raise ValueError("logistic map needs alpha in [0, 4] to keep [0, 1] invariant")
    return _quadratic(alpha, f"logistic({alpha:g})")


def time_varying_logistic(e: float, base: float = 3.075) -> MapSystem:
    """``g`` (parameter base+e) at even k, ``h`` (base-e) at odd k."""
    g = _quadratic(base + e, f"g({base + e:g})")
    h = _quadratic(base - e, f"h({base - e:g})")
    sys = alternating_map([g, h])
    return MapSystem(1, sys.eval, sys.jacobian, False, f"logistic-tv(e={e:g})", 2, True)


def henon(a: float = 1.4, b: float = 0.3) -> MapSystem:
    def f(k, s):
        x, y = s[..., 0], s[..., 1]
        return np.stack([y + 1.0 - a * x * x, b * x], axis=-1)

    def jac(k, s):
        x = s[..., 0]
        J = np.zeros(x.shape + (2, 2))
        J[..., 0, 0] = -2.0 * a * x
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = b
        return J

    return MapSystem(2, f, jac, True, f"henon({a:g},{b:g})", 1, True)


def linear(A) -> MapSystem:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("linear map needs a square matrix")

    def f(k, x):
        return x @ A.T

    def jac(k, x):
        return np.broadcast_to(A, np.shape(x)[:-1] + A.shape).copy()

    return MapSystem(A.shape[0], f, jac, True, "linear", 1, True)


def linear_tv(rule: Callable[[int], np.ndarray], dim: int | None = None,
              name: str = "linear-tv") -> MapSystem:
    if dim is None:
        dim = as_matrix(rule(0)).shape[0]

    def f(k, x):
        return as_matrix(rule(k)) @ x

    def jac(k, x):
        return as_matrix(rule(k))

    return MapSystem(dim, f, jac, False, name, None)


def example1_matrix(lam: float, k: int) -> np.ndarray:
    return np.array([[0.5, lam ** k], [0.0, 0.5]])


def example1_linear(lam: float) -> MapSystem:
    """``A_k = [[0.5, lam^k], [0, 0.5]]``."""
    return linear_tv(lambda k: example1_matrix(lam, k), 2, f"example1({lam:g})")


def alternating_map(systems: Sequence[MapSystem]) -> MapSystem:
    """Cycle through time-invariant maps: ``f_k = systems[k mod m]``."""
    systems = list(systems)
    if len(systems) < 2:
        raise ValueError("alternating map needs at least two members")
    dim = systems[0].dim
    if any(s.dim != dim for s in systems):
        raise ValueError("alternating map members must share a dimension")
    if not all(s.time_invariant for s in systems):
        raise ValueError("alternating map members must be time-invariant")
    m = len(systems)

    def f(k, x):
        return systems[k % m].eval(k, x)

    def jac(k, x):
        return systems[k % m].jacobian(k, x)

    name = "alt(" + ",".join(s.name for s in systems) + ")"
    return MapSystem(dim, f, jac, False, name, m, all(s.vectorized for s in systems))


def scalar_map(f: Callable[[float], float], df: Callable[[float], float],
               name: str = "scalar") -> MapSystem:
    """Wrap a plain scalar function and its derivative as a 1-D system."""
    return MapSystem(
        1,
        lambda k, x: np.array([f(float(x[0]))]),
        lambda k, x: np.array([[df(float(x[0]))]]),
        True,
        name,
    )


# ---------------------------------------------------------------- operations

def orbit(sys: MapSystem, x0, start_k: int = 0, length: int = 1) -> np.ndarray:
    """States ``x_{start_k}, ..., x_{start_k+length-1}`` as rows, ``x0`` first."""
    if length < 1:
        raise ValueError("orbit length must be at least 1")
    x = as_state(sys, x0)
    out = np.empty((length, sys.dim))
    out[0] = x
    for i in range(1, length):
        k = start_k + i - 1
        x = np.asarray(sys.eval(k, x), dtype=float).reshape(sys.dim)
        check_state(x, k + 1)
        out[i] = x
    return out


def p_compose(sys: MapSystem, k: int, x, p: int) -> np.ndarray:
    """``f_{k+p-1} o ... o f_k (x)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    x = as_state(sys, x)
    for j in range(k, k + p):
        x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
        check_state(x, j + 1)
    return x


def p_jacobian(sys: MapSystem, k: int, x, p: int) -> np.ndarray:
    """``Df_{k+p-1}(x_{k+p-1}) ... Df_k(x_k)`` along the orbit from ``x = x_k``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    x = as_state(sys, x)
    P = np.eye(sys.dim)
    for j in range(k, k + p):
        J = np.asarray(sys.jacobian(j, x), dtype=float).reshape(sys.dim, sys.dim)
        P = J @ P
        if j < k + p - 1:
            x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
            check_state(x, j + 1)
    return P


def linear_p_matrix(rule: Callable[[int], np.ndarray], k: int, p: int) -> np.ndarray:
    """Ordered product ``A_{k+p-1} ... A_{k+1} A_k``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    P = as_matrix(rule(k))
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("A_k must be square")
    for j in range(k + 1, k + p):
        A = as_matrix(rule(j))
        if A.shape != (n, n):
            raise ValueError(f"A_{j} has shape {A.shape}, expected {(n, n)}")
        P = A @ P
    return P


def p_iteration(sys: MapSystem, p: int) -> MapSystem:
    """The p-iteration system: step ``j`` applies ``f^{(p)}_{jp}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return sys
    ti = sys.time_invariant or (sys.period is not None and p % sys.period == 0)
    return MapSystem(
        sys.dim,
        lambda j, x: p_compose(sys, j * p, x, p),
        lambda j, x: p_jacobian(sys, j * p, x, p),
        ti,
        f"{sys.name}^({p})",
        1 if ti else None,
    )
