"""EM-style soft clustering of covariance operators.

Responsibilities start from a Jeffreys Dirichlet(1/2, ..., 1/2) draw.  Each
step re-estimates the cluster operators as responsibility-weighted means,
redraws the weighted Rademacher sums, pools the weak variance across
clusters and recomputes responsibilities with the classifier's label score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import log_scores, normalize_log
from .fda_stats import OperatorSample, rademacher_signs
from .operator_core import CovOperator, PNorm, parse_p, symmetric_norm
from .seeding import STREAM_DATA, STREAM_SIGNS, SeedLike, derive_seed, make_rng

EMPTY_CLUSTER_MASS = 1e-8


@dataclass(frozen=True, eq=False)
class ClusterState:
    rho: np.ndarray  # (n, k)
    tau: np.ndarray
    sigmas: Optional[tuple] = None  # k CovOperators after the first step
    rademacher_norms: Optional[np.ndarray] = None
    sigma_pool: Optional[float] = None
    iteration: int = 0
    reseeded: tuple = field(default_factory=tuple)  # (iteration, cluster, point)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def k(self) -> int:
        return self.rho.shape[1]

    def assignments(self) -> np.ndarray:
        return np.argmax(self.rho, axis=1)


@dataclass(frozen=True)
class IterationSummary:
    iteration: int
    max_change: float
    tau: tuple
    sigma_pool: float
    rademacher_norms: tuple


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    assignments: np.ndarray
    state: ClusterState
    trace: list
    converged: bool

    @property
    def iterations(self) -> int:
        return self.state.iteration


def init_state(n: int, k: int, seed: SeedLike = None) -> ClusterState:
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    if k == 1:
        rho = np.ones((n, 1))
    else:
        rho = make_rng(seed).dirichlet(np.full(k, 0.5), size=n)
    return ClusterState(rho=rho, tau=rho.mean(axis=0))


def _reseed(rho: np.ndarray, stack: np.ndarray, prev: ClusterState, p: float):
    """Hand every (near-)empty cluster the point farthest from its current fit."""
    rho = rho.copy()
    events = []
    mass = rho.sum(axis=0)
    for j in np.flatnonzero(mass < EMPTY_CLUSTER_MASS):
        if prev.sigmas is not None:
            centers = np.stack([op.weighted for op in prev.sigmas])
            d = symmetric_norm(stack[:, None] - centers[None], p)
            score = np.sum(rho * d, axis=1)
        else:
            score = symmetric_norm(stack - stack.mean(axis=0), p)
        taken = {e[2] for e in events}
        order = [i for i in np.argsort(-score, kind="stable") if i not in taken]
        i = int(order[0])
        rho[i] = 0.0
        rho[i, j] = 1.0
        events.append((prev.iteration + 1, int(j), i))
    return rho, tuple(events)


def em_step(state: ClusterState, data: OperatorSample, p_norm: PNorm = 1, seed: SeedLike = None,
            *, n_draws: int = 1, signs: Optional[np.ndarray] = None,
            stack: Optional[np.ndarray] = None) -> ClusterState:
    """One update of tau, the cluster operators, the Rademacher sums and rho.

    ``||R_j||`` is averaged over ``n_draws`` fresh sign vectors.  ``signs``
    (k x n, or n_draws x k x n) fixes the draws; otherwise cluster j draws from
    the stream (seed, j) when seed is an integer.
    """
    p = parse_p(p_norm)
    if stack is None:
        stack = data.stack
    n, k = state.rho.shape
    if len(stack) != n:
        raise ValueError(f"state has {n} rows but data has {len(stack)} operators")

    rho, events = _reseed(state.rho, stack, state, p)
    mass = rho.sum(axis=0)
    tau = mass / n
    weights = rho / mass
    centers = np.einsum("ij,ikl->jkl", weights, stack)
    centers = (centers + centers.transpose(0, 2, 1)) / 2

    if signs is None:
        if n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        if isinstance(seed, (int, np.integer)):
            signs = np.stack([rademacher_signs(make_rng(int(seed), j), (n_draws, n))
                              for j in range(k)], axis=1)
        else:
            signs = rademacher_signs(make_rng(seed), (n_draws, k, n))
    signs = np.asarray(signs, dtype=float)
    if signs.ndim == 2:
        signs = signs[None]
    if signs.shape[1:] != (k, n):
        raise ValueError(f"signs must have shape {(k, n)} or (draws, {k}, {n})")

    rnorms = np.zeros(k)
    for j in range(k):
        dev = stack - centers[j]
        r = np.einsum("di,ikl->dkl", weights[:, j] * signs[:, j], dev)
        rnorms[j] = np.mean(symmetric_norm((r + r.transpose(0, 2, 1)) / 2, p))

    pooled = np.tensordot(tau, centers, axes=1)
    sigma_pool = float(np.sqrt(2.0) * symmetric_norm(pooled, p))

    dist = symmetric_norm(stack[:, None] - centers[None], p)  # (n, k)
    if sigma_pool > 0:
        new_rho = normalize_log(log_scores(dist, rnorms, sigma_pool, n / k))
    else:
        new_rho = np.full((n, k), 1.0 / k)

    grid = data.grid
    return ClusterState(
        rho=new_rho,
        tau=tau,
        sigmas=tuple(CovOperator.from_weighted(grid, c) for c in centers),
        rademacher_norms=rnorms,
        sigma_pool=sigma_pool,
        iteration=state.iteration + 1,
        reseeded=state.reseeded + events,
    )


def run_clustering(data: OperatorSample, k: int, max_iter: int = 20, tol: float = 1e-6,
                   p_norm: PNorm = 1, seed: int = 0, n_draws: int = 1) -> ClusteringResult:
    """Iterate em_step until the largest responsibility change is below tol."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    state = init_state(data.n, k, make_rng(seed, STREAM_DATA))
    stack = data.stack
    trace = []
    converged = False
    for t in range(max_iter):
        new = em_step(state, data, p_norm, derive_seed(seed, STREAM_SIGNS, t), n_draws=n_draws,
                      stack=stack)
        change = float(np.abs(new.rho - state.rho).max())
        trace.append(IterationSummary(new.iteration, change, tuple(new.tau.tolist()),
                                      float(new.sigma_pool), tuple(new.rademacher_norms.tolist())))
        state = new
        if change < tol:
            converged = True
            break
    return ClusteringResult(state.assignments(), state, trace, converged)


def confusion_matrix(truth, assignments, k: Optional[int] = None) -> tuple[list, np.ndarray]:
    """Rows: distinct true labels in first-seen order; columns: clusters 0..k-1."""
    truth = list(truth)
    labels = list(dict.fromkeys(truth))
    k = k or int(np.max(assignments)) + 1
    out = np.zeros((len(labels), k), dtype=int)
    for t, a in zip(truth, assignments):
        out[labels.index(t), int(a)] += 1
    return labels, out


def adjusted_rand_index(truth, assignments) -> float:
    _, table = confusion_matrix(truth, assignments)
    def pairs(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x * (x - 1) / 2))
    n = table.sum()
    total = n * (n - 1) / 2
    both = pairs(table)
    rows, cols = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    expected = rows * cols / total if total else 0.0
    top = (rows + cols) / 2
    if top == expected:
        return 1.0
    return (both - expected) / (top - expected)
