"""Reactivity, contraction and finite-time Lyapunov analysis of discrete-time
maps, invariant-interval certification for logistic-family maps, and
synchronization of coupled-map networks."""

from .dynamics import MapSystem
from .errors import (ConvergenceError, DivergenceError, NumericalError, OverflowGuardError,
                     SingularMatrixError)
from .norms import NormFamily, NormSpec

__version__ = "0.1.0"
