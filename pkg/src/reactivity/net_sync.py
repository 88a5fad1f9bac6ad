"""Synchronization of networks of identical coupled maps

    x^i_{k+1} = F(x^i_k) - kappa * sum_j L_ij H(x^j_k)

on undirected graphs: Laplacian spectra, attractor sampling, beta
statistics of p-step Jacobians, coupling-strength bounds, transverse
reactivity and direct simulation of the synchronization error.

The transverse variational system is block diagonal in the Laplacian
eigenbasis, one ``m x m`` block ``DF - kappa lambda_i DH`` per nonzero
eigenvalue, so eigenvectors are never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DIVERGENCE_LIMIT, MapSystem, as_state, check_state, p_jacobian
from .errors import OverflowGuardError
from .linalg_core import as_matrix, kron, spectral_norm, spectral_norm_2x2_batch, symmetric_eigenvalues

ZERO_EIG_TOL = 1e-8
SEED_BOX = 1e-3


# ---------------------------------------------------------------- graphs

@dataclass(frozen=True, eq=False)
class Network:
    n: int
    adjacency: np.ndarray
    laplacian: np.ndarray
    name: str = "graph"


def build_network(adjacency, name: str = "graph") -> Network:
    A = as_matrix(adjacency)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("adjacency must be square")
    if np.max(np.abs(A - A.T)) > 1e-12:
        raise ValueError("adjacency must be symmetric (undirected graph)")
    if np.any(A < 0):
        raise ValueError("adjacency entries must be nonnegative")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    L = -A.copy()
    L[np.diag_indices(n)] = A.sum(axis=1)
    return Network(n, A, L, name)


def wheel(rim: int) -> np.ndarray:
    """Hub (node 0) joined to every node of a ``rim``-cycle."""
    if rim < 3:
        raise ValueError("wheel needs a rim of at least 3 nodes")
    n = rim + 1
    A = np.zeros((n, n))
    A[0, 1:] = A[1:, 0] = 1.0
    for i in range(rim):
        j = (i + 1) % rim
        A[1 + i, 1 + j] = A[1 + j, 1 + i] = 1.0
    return A


def complete(n: int) -> np.ndarray:
    return np.ones((n, n)) - np.eye(n)


def path(n: int) -> np.ndarray:
    A = np.zeros((n, n))
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = 1.0
    return A


GRAPHS = {
    "wheel5": lambda: build_network(wheel(4), "wheel5"),
    "k3": lambda: build_network(complete(3), "k3"),
    "path3": lambda: build_network(path(3), "path3"),
}


@dataclass(frozen=True, eq=False)
class SpectrumInfo:
    eigenvalues: np.ndarray
    lambda2: float
    lambda_n: float
    ratio: float
    connected: bool

    @property
    def transverse(self) -> np.ndarray:
        return self.eigenvalues[1:]


def spectrum(net: Network) -> SpectrumInfo:
    ev = symmetric_eigenvalues(net.laplacian)
    if abs(ev[0]) > ZERO_EIG_TOL:
        raise ValueError(f"smallest Laplacian eigenvalue {ev[0]:.3e} is not zero")
    ev[0] = 0.0
    lam2 = float(ev[1]) if ev.size > 1 else 0.0
    lam_n = float(ev[-1])
    connected = lam2 > ZERO_EIG_TOL
    ratio = lam_n / lam2 if connected else math.inf
    return SpectrumInfo(ev, lam2, lam_n, ratio, connected)


# ---------------------------------------------------------------- attractor

@dataclass(frozen=True, eq=False)
class AttractorSample:
    """``points`` in orbit order; ``tail`` holds the iterates that follow."""

    points: np.ndarray
    burn_in: int
    count: int
    seed: int | None
    x0: np.ndarray
    tail: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def extended(self, extra: int) -> np.ndarray:
        if extra > self.tail.shape[0]:
            raise ValueError(f"sample carries only {self.tail.shape[0]} forward iterates")
        return np.concatenate([self.points, self.tail[:extra]], axis=0)


def _step(F: MapSystem, k, x):
    return np.asarray(F.eval(k, x), dtype=float).reshape(F.dim)


def sample_attractor(F: MapSystem, x0, burn_in: int = 1000, count: int = 100_000,
                     seed: int | None = None, extra: int = 0) -> AttractorSample:
    """Orbit points after ``burn_in`` steps; ``seed`` perturbs ``x0`` uniformly
    within ``+-SEED_BOX`` per coordinate. ``extra`` further iterates are kept
    for p-step Jacobians of the last points."""
    if not F.time_invariant:
        raise ValueError("attractor sampling needs a time-invariant map")
    if count < 1:
        raise ValueError("count must be at least 1")
    x_init = as_state(F, x0)
    x = x_init.copy()
    if seed is not None:
        x = x + np.random.default_rng(seed).uniform(-SEED_BOX, SEED_BOX, F.dim)
    for k in range(burn_in):
        x = _step(F, k, x)
        check_state(x, k + 1)
    out = np.empty((count + extra, F.dim))
    for i in range(count + extra):
        out[i] = x
        x = _step(F, burn_in + i, x)
        check_state(x, burn_in + i + 1)
    return AttractorSample(out[:count], burn_in, count, seed, x_init, out[count:])


def extend_sample(F: MapSystem, sample: AttractorSample, extra: int) -> AttractorSample:
    """Sample with at least ``extra`` forward iterates after its last point."""
    have = sample.tail.shape[0]
    if have >= extra:
        return sample
    rows = [sample.tail] if have else []
    x = sample.tail[-1] if have else sample.points[-1]
    k = sample.burn_in + sample.count + have - 1
    more = np.empty((extra - have, F.dim))
    for i in range(extra - have):
        x = _step(F, k + i, x)
        check_state(x, k + i + 1)
        more[i] = x
    tail = np.concatenate(rows + [more], axis=0)
    return AttractorSample(sample.points, sample.burn_in, sample.count, sample.seed,
                           sample.x0, tail)


# ---------------------------------------------------------------- beta

@dataclass(frozen=True)
class BetaStats:
    p: int
    beta_mean: float
    beta_max: float
    sample_size: int


def _batch_sigma1(M):
    m = M.shape[-1]
    if m == 1:
        return np.abs(M[:, 0, 0])
    if m == 2:
        return spectral_norm_2x2_batch(M)
    return np.array([spectral_norm(A) for A in M])


def log_norm_profile(F: MapSystem, sample: AttractorSample, p_max: int) -> np.ndarray:
    """``log ||DF^(p)(s)||_2`` for every sample point and ``p = 1..p_max``.

    Row ``p-1`` holds the values for ``p``. Products run along the stored
    orbit order and are rescaled every step.
    """
    if p_max < 1:
        raise ValueError("p must be >= 1")
    sample = extend_sample(F, sample, p_max - 1)
    pts = sample.extended(p_max - 1)
    n, m = sample.count, F.dim
    if F.vectorized:
        J = np.asarray(F.jacobian(0, pts), dtype=float).reshape(pts.shape[0], m, m)
    else:
        J = np.stack([np.asarray(F.jacobian(0, x), dtype=float).reshape(m, m) for x in pts])
    M = J[:n].copy()
    logs = np.zeros(n)
    out = np.empty((p_max, n))
    with np.errstate(divide="ignore"):
        for p in range(1, p_max + 1):
            if p > 1:
                M = np.einsum("nij,njk->nik", J[p - 1:p - 1 + n], M)
            s = np.max(np.abs(M), axis=(1, 2))
            live = s > 0
            M[live] /= s[live, None, None]
            logs = logs + np.log(s)
            sig = _batch_sigma1(M)
            out[p - 1] = logs + np.log(sig)
    return out


def _stats_from_logs(p, logs):
    with np.errstate(over="ignore"):
        beta = np.exp(logs)
    if not np.all(np.isfinite(beta)):
        raise OverflowGuardError(f"beta^({p}) overflows double precision")
    return BetaStats(p, float(np.mean(beta)), float(np.max(beta)), logs.size)


def beta_profile(F: MapSystem, sample: AttractorSample, p_max: int) -> list:
    """``BetaStats`` for ``p = 1..p_max`` in one pass over the sample."""
    prof = log_norm_profile(F, sample, p_max)
    return [_stats_from_logs(p, prof[p - 1]) for p in range(1, p_max + 1)]


def beta_stats(F: MapSystem, sample: AttractorSample, p: int) -> BetaStats:
    """Mean and max over the sample of ``||DF^(p)(s)||_2``."""
    return _stats_from_logs(p, log_norm_profile(F, sample, p)[p - 1])


def beta_stats_reference(F: MapSystem, sample: AttractorSample, p: int) -> BetaStats:
    """Unbatched ``p_jacobian`` path; slow, used to cross-check ``beta_stats``."""
    sample = extend_sample(F, sample, p - 1)
    vals = np.array([spectral_norm(p_jacobian(F, 0, s, p)) for s in sample.points])
    return BetaStats(p, float(np.mean(vals)), float(np.max(vals)), vals.size)


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class KappaBounds:
    p: int
    L_mean: float
    U_mean: float
    L_max: float
    U_max: float
    S_mean: float
    S_max: float

    @property
    def mean_empty(self) -> bool:
        return not self.L_mean < self.U_mean

    @property
    def max_empty(self) -> bool:
        return not self.L_max < self.U_max

    def nested(self) -> bool:
        """``[L_max, U_max]`` inside ``[L_mean, U_mean]`` (vacuous if empty)."""
        if self.max_empty:
            return True
        return self.L_mean <= self.L_max and self.U_max <= self.U_mean


def _bounds_one(b, lam2, lam_n):
    L = (b - 1.0) / (lam2 * b)
    U = (b + 1.0) / (lam_n * b)
    S = (b + 1.0) / (b - 1.0) if b > 1.0 else math.inf
    return L, U, S


def kappa_bounds(spec: SpectrumInfo, beta: BetaStats) -> KappaBounds:
    """Coupling window from ``b = beta^(1/p)``:
    ``L = (b-1)/(lambda_2 b)``, ``U = (b+1)/(lambda_n b)``, ``S = (b+1)/(b-1)``
    (``S = inf`` when ``b <= 1``)."""
    if not spec.connected:
        raise ValueError("coupling bounds need a connected graph")
    if beta.beta_mean <= 0 or beta.beta_max <= 0:
        raise ValueError("beta values must be positive")
    p = beta.p
    Lm, Um, Sm = _bounds_one(beta.beta_mean ** (1.0 / p), spec.lambda2, spec.lambda_n)
    Lx, Ux, Sx = _bounds_one(beta.beta_max ** (1.0 / p), spec.lambda2, spec.lambda_n)
    return KappaBounds(p, Lm, Um, Lx, Ux, Sm, Sx)


def topology_factor(spec: SpectrumInfo, kappa: float, p: int) -> float:
    """``max_i |1 - kappa lambda_i|^p`` over the transverse eigenvalues."""
    return float(np.max(np.abs(1.0 - kappa * spec.transverse))) ** p


def transverse_reactivity(spec: SpectrumInfo, beta, kappa: float, p: int,
                          sup: bool = True) -> float:
    """``max_i |1 - kappa lambda_i|^p * beta - 1`` for ``H = F``.

    ``beta`` is a ``BetaStats`` (``beta_max`` if ``sup`` else ``beta_mean``)
    or a bare number.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if isinstance(beta, BetaStats):
        b = beta.beta_max if sup else beta.beta_mean
    else:
        b = float(beta)
    return topology_factor(spec, kappa, p) * b - 1.0


def transverse_blocks(F: MapSystem, H: MapSystem, spec: SpectrumInfo, kappa: float, s) -> list:
    s = as_state(F, s)
    DF = np.asarray(F.jacobian(0, s), dtype=float).reshape(F.dim, F.dim)
    DH = np.asarray(H.jacobian(0, s), dtype=float).reshape(H.dim, H.dim)
    return [DF - kappa * lam * DH for lam in spec.transverse]


def general_transverse_step(F: MapSystem, H: MapSystem, spec: SpectrumInfo,
                            kappa: float, s) -> np.ndarray:
    """``Z(s) = I (x) DF(s) - kappa Lambda (x) DH(s)``, assembled blockwise."""
    if F.dim != H.dim:
        raise ValueError("F and H must share a dimension")
    blocks = transverse_blocks(F, H, spec, kappa, s)
    m = F.dim
    Z = np.zeros((len(blocks) * m, len(blocks) * m))
    for i, B in enumerate(blocks):
        Z[i * m:(i + 1) * m, i * m:(i + 1) * m] = B
    return Z


def dense_transverse_step(F: MapSystem, H: MapSystem, spec: SpectrumInfo,
                          kappa: float, s) -> np.ndarray:
    """Same matrix via explicit Kronecker products (small n only)."""
    s = as_state(F, s)
    DF = np.asarray(F.jacobian(0, s), dtype=float).reshape(F.dim, F.dim)
    DH = np.asarray(H.jacobian(0, s), dtype=float).reshape(H.dim, H.dim)
    k = spec.transverse.size
    return kron(np.eye(k), DF) - kappa * kron(np.diag(spec.transverse), DH)


def transverse_sigma1(F: MapSystem, H: MapSystem, spec: SpectrumInfo, kappa: float, s) -> float:
    return max(spectral_norm(B) for B in transverse_blocks(F, H, spec, kappa, s))


# ---------------------------------------------------------------- simulation

@dataclass(frozen=True)
class SyncRecord:
    kappa: float
    E: float
    synchronized: bool
    diverged: bool
    diverged_step: int | None = None


def _apply(F: MapSystem, k, X):
    if F.vectorized:
        return np.asarray(F.eval(k, X), dtype=float).reshape(X.shape)
    return np.stack([_step(F, k, x) for x in X])


def initial_states(sample: AttractorSample, n: int, seed: int = 0) -> np.ndarray:
    """``n`` distinct sample points drawn uniformly (the long-orbit measure)."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(sample.count, size=n, replace=sample.count < n)
    return sample.points[idx].copy()


def simulate_coupled(net: Network, F: MapSystem, H: MapSystem | None, kappa: float, X0,
                     k_f: int = 10_000, k_0: int = 9_000, threshold: float = 1e-10,
                     trajectory: bool = False):
    """Iterate the coupled network from node states ``X0`` (shape ``(n, m)``).

    ``E`` sums the node-average Euclidean distance to the network mean over
    ``k = k_0..k_f`` and divides by ``k_f - k_0``. With ``trajectory=True``
    the final states are returned as well.
    """
    if H is None:
        H = F
    if not 0 <= k_0 < k_f:
        raise ValueError("need 0 <= k_0 < k_f")
    X = np.array(X0, dtype=float).reshape(net.n, F.dim)
    if not np.all(np.isfinite(X)):
        raise ValueError("initial states must be finite")
    A = net.adjacency
    total = 0.0
    rec = None
    for k in range(k_f + 1):
        if k >= k_0:
            dev = X - X.mean(axis=0)
            total += float(np.mean(np.sqrt(np.sum(dev * dev, axis=1))))
        if k == k_f:
            break
        HX = _apply(H, k, X)
        # Diffusive form: exactly zero when all node states coincide.
        X = _apply(F, k, X) + kappa * np.einsum("ij,ijm->im", A, HX[None, :, :] - HX[:, None, :])
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > DIVERGENCE_LIMIT:
            rec = SyncRecord(kappa, math.inf, False, True, k + 1)
            break
    if rec is None:
        E = total / (k_f - k_0)
        rec = SyncRecord(kappa, E, E < threshold, False)
    return (rec, X) if trajectory else rec


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True, eq=False)
class SyncReport:
    spectrum: SpectrumInfo
    bounds: list
    simulations: list
    sample_size: int
    seed: int | None

    def sync_kappas(self) -> list:
        return [r.kappa for r in self.simulations if r.synchronized]

    def contiguous(self) -> bool:
        """Synchronized kappa values form one run in the sorted grid."""
        flags = [r.synchronized for r in sorted(self.simulations, key=lambda r: r.kappa)]
        if True not in flags:
            return True
        first = flags.index(True)
        last = len(flags) - 1 - flags[::-1].index(True)
        return all(flags[first:last + 1])

    def trend_flags(self) -> dict:
        """Observed monotonicity of the mean bounds in ``p`` (flags, not asserts)."""
        U = [b.U_mean for b in self.bounds]
        L = [b.L_mean for b in self.bounds]
        return {
            "U_mean_nondecreasing": all(y >= x - 1e-12 for x, y in zip(U[1:], U[2:])),
            "L_mean_nonincreasing": all(y <= x + 1e-12 for x, y in zip(L[1:], L[2:])),
        }


def sweep_kappa(net: Network, F: MapSystem, ps, kappas=(), sample: AttractorSample | None = None,
                H: MapSystem | None = None, x0=None, seed: int = 0, k_f: int = 10_000,
                k_0: int = 9_000, threshold: float = 1e-10, sample_size: int = 10_000) -> SyncReport:
    """Bounds for every ``p`` in ``ps`` and one simulation per ``kappa``.

    All simulations start from the same seeded draw of attractor points, so
    rows depend only on their own ``(p, kappa)`` key.
    """
    spec = spectrum(net)
    if sample is None:
        start = np.full(F.dim, 0.1) if x0 is None else x0
        sample = sample_attractor(F, start, count=sample_size, seed=seed)
    ps = sorted(set(int(p) for p in ps))
    bounds = []
    if ps:
        prof = beta_profile(F, sample, max(ps))
        bounds = [kappa_bounds(spec, prof[p - 1]) for p in ps]
    X0 = initial_states(sample, net.n, seed)
    sims = [simulate_coupled(net, F, H, float(k), X0, k_f, k_0, threshold)
            for k in sorted(set(float(k) for k in kappas))]
    return SyncReport(spec, bounds, sims, sample.count, sample.seed)
