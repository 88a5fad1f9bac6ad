"""Weighted L1 / L2 / L-infinity norms, induced operator norms and the
reactivity of linear maps.

For a weight matrix ``Q`` the vector norm is ``||Q v||`` and the induced
operator norm of ``A`` is the plain norm of ``Q A Q^-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg_core import as_matrix, as_vector, inverse, spectral_norm, symmetric_eigenvalues


class NormFamily(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A weighted norm. ``weight=None`` means the identity in any dimension."""

    family: NormFamily = NormFamily.L2
    weight: np.ndarray | None = None
    weight_inverse: np.ndarray | None = field(default=None, init=False)

    def __post_init__(self):
        object.__setattr__(self, "family", NormFamily(self.family))
        if self.weight is None:
            return
        Q = as_matrix(self.weight)
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("norm weight must be square")
        Qinv = inverse(Q)
        if self.family is NormFamily.L2:
            if np.max(np.abs(Q - Q.T)) > 1e-12:
                raise ValueError("L2 weight must be symmetric positive definite")
            if symmetric_eigenvalues(Q)[0] <= 0.0:
                raise ValueError("L2 weight must be symmetric positive definite")
        object.__setattr__(self, "weight", Q)
        object.__setattr__(self, "weight_inverse", Qinv)

    @property
    def dim(self) -> int | None:
        return None if self.weight is None else self.weight.shape[0]

    def _check_dim(self, n):
        if self.weight is not None and n != self.weight.shape[0]:
            raise ValueError(f"dimension {n} does not match weight of size {self.weight.shape[0]}")

    def conjugate(self, A) -> np.ndarray:
        """``Q A Q^-1`` (just ``A`` for the unweighted norm)."""
        A = as_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("operator norm needs a square matrix")
        self._check_dim(A.shape[0])
        if self.weight is None:
            return A
        return self.weight @ A @ self.weight_inverse

    def __repr__(self):
        w = "I" if self.weight is None else np.array2string(self.weight, separator=",")
        return f"NormSpec({self.family.value}, Q={w})"


L2 = NormSpec(NormFamily.L2)


def vector_norm(norm: NormSpec, v) -> float:
    v = as_vector(v)
    norm._check_dim(v.size)
    w = v if norm.weight is None else norm.weight @ v
    if norm.family is NormFamily.L1:
        return float(np.sum(np.abs(w)))
    if norm.family is NormFamily.L2:
        return float(np.linalg.norm(w))
    return float(np.max(np.abs(w)))


def operator_norm(norm: NormSpec, A) -> float:
    M = norm.conjugate(A)
    if norm.family is NormFamily.L1:
        return float(np.max(np.sum(np.abs(M), axis=0)))
    if norm.family is NormFamily.L2:
        return spectral_norm(M)
    return float(np.max(np.sum(np.abs(M), axis=1)))


def reactivity_linear(norm: NormSpec, A) -> float:
    """Reactivity ``r = ||A|| - 1`` in the given norm."""
    return operator_norm(norm, A) - 1.0


def log_reactivity_linear(norm: NormSpec, A) -> float:
    """Logarithmic reactivity ``log ||A||``."""
    L = operator_norm(norm, A)
    if L == 0.0:
        raise ValueError("logarithmic reactivity is undefined for a zero operator norm")
    return math.log(L)
