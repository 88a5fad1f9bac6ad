"""Finite-time Lyapunov exponents, the maximum FTLE, long-horizon MLE
estimates and the reactivity/FTLE identity for p-iteration systems.

Long Jacobian products are accumulated with a scalar rescaling every
``RESCALE_EVERY`` steps: the running product ``P`` is stored as
``exp(log_scale) * M`` with ``max|M| = 1``. Unlike re-orthonormalising a
frame, this keeps ``sigma_1(P) = exp(log_scale) * sigma_1(M)`` exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import MapSystem, as_state, check_state, p_jacobian
from .errors import OverflowGuardError
from .linalg_core import spectral_norm

RESCALE_EVERY = 10
OVERFLOW_GUARD = 1e100


class Convention(str, Enum):
    ONE_OVER_P = "one-over-p"
    PAPER_ONE_OVER_2P = "one-over-2p"

    def factor(self, p: int) -> float:
        return 1.0 / p if self is Convention.ONE_OVER_P else 1.0 / (2 * p)


@dataclass(frozen=True, eq=False)
class FtleResult:
    p: int
    value: float
    convention: Convention
    x0: np.ndarray
    direction: np.ndarray | None = None
    annihilated: bool = False

    def __post_init__(self):
        if self.direction is not None and abs(np.linalg.norm(self.direction) - 1.0) > 1e-12:
            raise ValueError("FTLE direction must be a unit vector")


def ftle_direction(sys: MapSystem, x0, u0, p: int,
                   convention: Convention = Convention.ONE_OVER_P, k0: int = 0) -> FtleResult:
    """Directional FTLE ``(1/p) log ||Df^(p)(x0) u0||_2`` with per-step renormalisation."""
    if p < 1:
        raise ValueError("p must be >= 1")
    convention = Convention(convention)
    x = as_state(sys, x0)
    u = np.asarray(u0, dtype=float).reshape(sys.dim)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("u0 must have unit Euclidean norm")
    v = u.copy()
    log_growth = 0.0
    for j in range(k0, k0 + p):
        J = np.asarray(sys.jacobian(j, x), dtype=float).reshape(sys.dim, sys.dim)
        v = J @ v
        g = np.linalg.norm(v)
        if g == 0.0:
            return FtleResult(p, -math.inf, convention, as_state(sys, x0), u, True)
        log_growth += math.log(g)
        v /= g
        if j < k0 + p - 1:
            x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
            check_state(x, j + 1)
    return FtleResult(p, convention.factor(p) * log_growth, convention, as_state(sys, x0), u)


@dataclass(frozen=True, eq=False)
class ScaledProduct:
    """``Df^(p) = exp(log_scale) * matrix``; ``checkpoints`` maps step -> log sigma_1."""

    matrix: np.ndarray
    log_scale: float
    annihilated: bool
    checkpoints: dict

    @property
    def log_sigma1(self) -> float:
        if self.annihilated:
            return -math.inf
        s = spectral_norm(self.matrix)
        return -math.inf if s == 0.0 else self.log_scale + math.log(s)


def jacobian_product_scaled(sys: MapSystem, x0, p: int, k0: int = 0,
                            rescale_every: int = RESCALE_EVERY,
                            checkpoints=()) -> ScaledProduct:
    if p < 1:
        raise ValueError("p must be >= 1")
    x = as_state(sys, x0)
    M = np.eye(sys.dim)
    log_scale = 0.0
    wanted = set(int(c) for c in checkpoints)
    marks = {}
    for i, j in enumerate(range(k0, k0 + p), start=1):
        J = np.asarray(sys.jacobian(j, x), dtype=float).reshape(sys.dim, sys.dim)
        M = J @ M
        if i % rescale_every == 0 or i == p or i in wanted:
            s = float(np.max(np.abs(M)))
            if s == 0.0:
                return ScaledProduct(M, -math.inf, True, marks)
            M /= s
            log_scale += math.log(s)
            if i in wanted:
                marks[i] = log_scale + math.log(spectral_norm(M))
        if i < p:
            x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
            check_state(x, j + 1)
    return ScaledProduct(M, log_scale, False, marks)


def mftle(sys: MapSystem, x0, p: int,
          convention: Convention = Convention.ONE_OVER_P, k0: int = 0) -> FtleResult:
    """Maximum FTLE ``(1/p) log sigma_1(Df^(p)(x0))`` (halved for the 1/(2p) convention)."""
    convention = Convention(convention)
    prod = jacobian_product_scaled(sys, x0, p, k0)
    value = convention.factor(p) * prod.log_sigma1
    return FtleResult(p, value, convention, as_state(sys, x0), None,
                      annihilated=value == -math.inf)


def mftle_direct(sys: MapSystem, x0, p: int, k0: int = 0) -> float:
    """Unscaled reference path: ``(1/p) log sigma_1`` of the plain product."""
    s = spectral_norm(p_jacobian(sys, k0, x0, p))
    return -math.inf if s == 0.0 else math.log(s) / p


@dataclass(frozen=True)
class MleEstimate:
    value: float
    trace: dict
    burn_in: int
    horizon: int
    annihilated: bool


def mle_estimate(sys: MapSystem, x0, horizon: int = 100_000, burn_in: int = 1000) -> MleEstimate:
    """Maximum Lyapunov exponent: the one-over-p MFTLE at a long horizon after
    discarding ``burn_in`` steps. ``trace`` holds the running value at
    horizon/10, horizon/2 and horizon."""
    if horizon < 1000:
        raise ValueError("horizon must be at least 1000")
    x = as_state(sys, x0)
    for j in range(burn_in):
        x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
        check_state(x, j + 1)
    marks = (horizon // 10, horizon // 2, horizon)
    prod = jacobian_product_scaled(sys, x, horizon, k0=burn_in, checkpoints=marks)
    if prod.annihilated:
        return MleEstimate(-math.inf, {m: -math.inf for m in marks}, burn_in, horizon, True)
    trace = {m: prod.checkpoints[m] / m for m in marks}
    return MleEstimate(trace[horizon], trace, burn_in, horizon, False)


@dataclass(frozen=True)
class BridgeReport:
    p: int
    mftle_value: float
    r2_value: float
    consistency_residual: float
    one_over_2p_value: float
    one_over_2p_residual: float


def reactivity_ftle_bridge(sys: MapSystem, x0, p: int, k0: int = 0) -> BridgeReport:
    """Compare the MFTLE with ``log(r_2 + 1)`` of the p-step Jacobian.

    Under the one-over-p convention the identity is
    ``MFTLE = (1/p) log(r_2 + 1)``; the 1/(2p) variant is reported alongside.
    """
    x = as_state(sys, x0)
    P = np.eye(sys.dim)
    for j in range(k0, k0 + p):
        J = np.asarray(sys.jacobian(j, x), dtype=float).reshape(sys.dim, sys.dim)
        P = J @ P
        if np.max(np.abs(P)) >= OVERFLOW_GUARD:
            raise OverflowGuardError(
                f"Jacobian product exceeds {OVERFLOW_GUARD:g} at step {j - k0 + 1}; "
                "use mle_estimate for long horizons"
            )
        if j < k0 + p - 1:
            x = np.asarray(sys.eval(j, x), dtype=float).reshape(sys.dim)
            check_state(x, j + 1)
    sigma = spectral_norm(P)
    r2 = sigma - 1.0
    ftle = mftle(sys, x0, p, Convention.ONE_OVER_P, k0).value
    half = mftle(sys, x0, p, Convention.PAPER_ONE_OVER_2P, k0).value
    ident = math.log(r2 + 1.0) if r2 + 1.0 > 0 else -math.inf
    return BridgeReport(p, ftle, r2, _residual(ftle, ident / p),
                        half, _residual(half, ident / (2 * p)))


def _residual(lhs, rhs):
    return 0.0 if lhs == rhs else abs(lhs - rhs)
