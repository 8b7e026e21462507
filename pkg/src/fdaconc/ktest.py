"""k-sample test for equality of covariance operators.

The concentration test rejects when the summed distances between each
sample covariance and the pooled covariance exceed a data-driven threshold
built from per-sample Rademacher sums and a pooled weak variance.  A
two-sample permutation test is included as the reference it is timed
against.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .concentration import check_alpha, log_term
from .fda_stats import (
    FunctionalSample,
    rademacher_matrix,
    rademacher_signs,
    weak_variance_fourth_moment,
)
from .operator_core import CovOperator, PNorm, check_same_grid, interpolate, parse_p, symmetric_norm
from .seeding import STREAM_DATA, STREAM_PERM, STREAM_SIGNS, SeedLike, derive_seed, make_rng
from .simulate import sample_gaussian

# alpha grid searched for the reported p-value surrogate
P_VALUE_GRID = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class KSampleResult:
    statistic: float
    threshold: float
    reject: bool
    alpha: float
    p_norm: float
    per_sample_norms: tuple
    elapsed: float
    rademacher_term: float = 0.0
    deviation_term: float = 0.0
    sigma_pool: float = 0.0
    p_value: float = 1.0

    def to_json(self) -> dict:
        out = asdict(self)
        out["per_sample_norms"] = list(self.per_sample_norms)
        out["p_norm"] = "inf" if np.isinf(self.p_norm) else self.p_norm
        out["elapsed_ms"] = 1000.0 * out.pop("elapsed")
        return out


def tuning_constants(k: int, tuned: bool = True) -> tuple[float, float]:
    """(Rademacher coefficient, deviation coefficient)."""
    if not tuned:
        return 1.0, 1.0
    return 1.0 - k ** -0.5, (k + 2.0) / (k + 3.0)


def deviation_term(sigma_pool: float, counts: Sequence[int], alpha: float) -> float:
    L = log_term(alpha)
    inv = np.sum(1.0 / np.asarray(counts, dtype=float))
    return float(np.sqrt(sigma_pool ** 2 * inv) * np.sqrt(2 * L) + sigma_pool * inv * L / 3)


def _validate(samples: Sequence[FunctionalSample]) -> None:
    if len(samples) < 2:
        raise ValueError("the k-sample test needs at least 2 samples")
    for s in samples[1:]:
        check_same_grid(samples[0].grid, s.grid)
    for i, s in enumerate(samples):
        if s.n < 2:
            raise ValueError(f"sample {i} has {s.n} curve(s); at least 2 are required")


def k_sample_test(samples: Sequence[FunctionalSample], p_norm: PNorm = 2, alpha: float = 0.05,
                  tuned: bool = True, seed: SeedLike = None, *, sigma_rule: str = "gaussian",
                  n_draws: int = 1) -> KSampleResult:
    """Concentration test of H0: all k covariance operators are equal."""
    t0 = time.perf_counter()
    _validate(samples)
    check_alpha(alpha)
    p = parse_p(p_norm)
    rng = make_rng(seed)
    k = len(samples)
    counts = np.array([s.n for s in samples])

    centered, covs = [], []
    for s in samples:
        xc = s.weighted - s.weighted.mean(axis=0)
        c = xc.T @ xc / s.n
        centered.append(xc)
        covs.append((c + c.T) / 2)
    covs = np.stack(covs)
    pooled = np.tensordot(counts / counts.sum(), covs, axes=1)

    dist = symmetric_norm(covs - pooled, p)
    statistic = float(np.sum(dist))

    rad = np.zeros(k)
    for _ in range(n_draws):
        mats = np.stack([rademacher_matrix(xc, rademacher_signs(rng, len(xc)), pooled)
                         for xc in centered])
        rad += symmetric_norm(mats, p)
    rad_sum = float(np.sum(rad)) / n_draws

    if sigma_rule == "gaussian":
        sigmas = np.sqrt(2.0) * symmetric_norm(covs, p)
    elif sigma_rule == "empirical":
        sigmas = np.array([weak_variance_fourth_moment(s, p) for s in samples])
    else:
        raise ValueError(f"unknown sigma rule {sigma_rule!r}")
    sigma_pool = float(np.sqrt(np.sum(counts * sigmas ** 2) / counts.sum()))

    c_rad, c_dev = tuning_constants(k, tuned)
    rad_term = c_rad * rad_sum
    dev = deviation_term(sigma_pool, counts, alpha)
    threshold = rad_term + c_dev * dev

    p_value = 1.0
    for a in P_VALUE_GRID:
        if statistic > rad_term + c_dev * deviation_term(sigma_pool, counts, a):
            p_value = a
            break

    return KSampleResult(
        statistic=statistic,
        threshold=float(threshold),
        reject=bool(statistic > threshold),
        alpha=float(alpha),
        p_norm=p,
        per_sample_norms=tuple(float(x) for x in dist),
        elapsed=time.perf_counter() - t0,
        rademacher_term=float(rad_term),
        deviation_term=float(c_dev * dev),
        sigma_pool=sigma_pool,
        p_value=p_value,
    )


@dataclass(frozen=True)
class PermutationResult:
    p_value: float
    observed: float
    n_perms: int
    elapsed: float


def _cov(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=0)
    return xc.T @ xc / x.shape[0]


def permutation_test_two_sample(a: FunctionalSample, b: FunctionalSample, p_norm: PNorm = 2,
                                n_perms: int = 100, seed: SeedLike = None) -> PermutationResult:
    """Label-permutation test on ||Sigma_a - Sigma_b||_p."""
    t0 = time.perf_counter()
    check_same_grid(a.grid, b.grid)
    if n_perms < 1:
        raise ValueError("n_perms must be >= 1")
    p = parse_p(p_norm)
    rng = make_rng(seed)
    x = np.vstack([a.weighted, b.weighted])
    na = a.n
    observed = symmetric_norm(_cov(x[:na]) - _cov(x[na:]), p)
    diffs = np.empty((n_perms, x.shape[1], x.shape[1]))
    for m in range(n_perms):
        idx = rng.permutation(len(x))
        diffs[m] = _cov(x[idx[:na]]) - _cov(x[idx[na:]])
    permuted = symmetric_norm(diffs, p)
    exceed = int(np.sum(permuted >= observed))
    return PermutationResult((1 + exceed) / (n_perms + 1), float(observed), n_perms,
                             time.perf_counter() - t0)


@dataclass(frozen=True)
class PowerPoint:
    gamma: float
    power: float
    se: float
    mean_elapsed: float
    n_reps: int


def _power_rep(sigma1, sigma_g, n, alpha, p, method, n_perms, seed, gi, r, tuned):
    a = sample_gaussian(sigma1, n, make_rng(seed, STREAM_DATA, gi, r, 0))
    b = sample_gaussian(sigma_g, n, make_rng(seed, STREAM_DATA, gi, r, 1))
    if method == "concentration":
        res = k_sample_test([a, b], p, alpha, tuned, make_rng(seed, STREAM_SIGNS, gi, r))
        return res.reject, res.elapsed
    if method == "permutation":
        res = permutation_test_two_sample(a, b, p, n_perms, make_rng(seed, STREAM_PERM, gi, r))
        return res.p_value <= alpha, res.elapsed
    raise ValueError(f"unknown method {method!r}")


def power_curve(sigma1: CovOperator, sigma2: CovOperator, gammas: Sequence[float], n: int,
                alpha: float = 0.05, p_norm: PNorm = 2, n_reps: int = 1000,
                method: str = "concentration", seed: int = 0, *, n_perms: int = 100,
                threads: int = 1, tuned: bool = True) -> list[PowerPoint]:
    """Rejection rate of a two-sample test along the Procrustes path sigma1 -> sigma2.

    Replication r at gamma index g uses streams derived from (seed, g, r), so the
    output does not depend on ``threads``.  The data streams do not depend on
    ``method``: both tests see identical samples.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if method not in ("concentration", "permutation"):
        raise ValueError(f"unknown method {method!r}")
    check_alpha(alpha)
    p = parse_p(p_norm)
    out = []
    for gi, gamma in enumerate(gammas):
        sigma_g = interpolate(sigma1, sigma2, float(gamma))
        args = [(sigma1, sigma_g, n, alpha, p, method, n_perms, seed, gi, r, tuned)
                for r in range(n_reps)]
        results = map_reps(_power_rep, args, threads)
        rejects = np.array([rj for rj, _ in results], dtype=float)
        elapsed = np.array([el for _, el in results])
        power = float(rejects.mean())
        se = float(np.sqrt(power * (1 - power) / n_reps))
        out.append(PowerPoint(float(gamma), power, se, float(elapsed.mean()), n_reps))
    return out


def map_reps(fn, arg_list, threads: int = 1) -> list:
    """Apply fn to each argument tuple; results in input order."""
    if threads <= 1:
        return [fn(*args) for args in arg_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda args: fn(*args), arg_list))


def replication_seed(seed: int, *keys: int) -> int:
    return derive_seed(seed, *keys)
