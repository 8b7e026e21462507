"""Sample statistics of functional data.

Means, empirical covariance operators, Rademacher averages and the weak
variance estimators used by the confidence sets, the k-sample test, the
classifier and the clustering loop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from .operator_core import (
    CovOperator,
    Curve,
    Grid,
    PNorm,
    check_same_grid,
    schatten_norm,
    symmetric_norm,
)
from .seeding import SeedLike, make_rng

# above this many curves exhaustive sign enumeration is refused
MAX_ENUMERATION = 20


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """n curves on one grid, stored row-wise in ``values`` (n x d)."""

    grid: Grid
    values: np.ndarray
    label: Optional[Hashable] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("a functional sample needs at least one curve")
        if v.shape[1] != self.grid.size:
            raise ValueError(f"curves have {v.shape[1]} values, grid has {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_curves(cls, curves: Sequence[Curve], label=None) -> "FunctionalSample":
        if not curves:
            raise ValueError("a functional sample needs at least one curve")
        grid = curves[0].grid
        for c in curves[1:]:
            check_same_grid(grid, c.grid)
        return cls(grid, np.stack([c.values for c in curves]), label)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def curves(self) -> list[Curve]:
        return [Curve(self.grid, row) for row in self.values]

    @property
    def weighted(self) -> np.ndarray:
        """Curves in weighted coordinates sqrt(w) * f."""
        return self.values * self.grid.sqrt_weights

    def subset(self, idx) -> "FunctionalSample":
        return FunctionalSample(self.grid, self.values[idx], self.label)

    def scaled(self, c: float) -> "FunctionalSample":
        return FunctionalSample(self.grid, c * self.values, self.label)

    def with_label(self, label) -> "FunctionalSample":
        return FunctionalSample(self.grid, self.values, label)


@dataclass(frozen=True, eq=False)
class OperatorSample:
    """Observed covariance operators S_i, each built from ``ranks[i]`` curves."""

    operators: tuple
    ranks: tuple
    label: Optional[Hashable] = None

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("an operator sample needs at least one operator")
        for op in ops[1:]:
            check_same_grid(ops[0].grid, op.grid)
        ranks = tuple(int(r) for r in self.ranks)
        if len(ranks) != len(ops):
            raise ValueError("need one rank per operator")
        if any(r < 1 for r in ranks):
            raise ValueError("ranks must be positive")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "ranks", ranks)

    @classmethod
    def from_groups(cls, groups: Sequence[FunctionalSample], center: bool = False,
                    label=None) -> "OperatorSample":
        """One operator per group of curves.

        Uncentered by default: simulated groups are mean zero and rank-one
        groups would vanish after centering.
        """
        ops = [empirical_covariance(g, center=center) for g in groups]
        return cls(tuple(ops), tuple(g.n for g in groups), label)

    @property
    def grid(self) -> Grid:
        return self.operators[0].grid

    @property
    def n(self) -> int:
        return len(self.operators)

    def __len__(self) -> int:
        return self.n

    @property
    def stack(self) -> np.ndarray:
        """Weighted matrices, shape (n, d, d)."""
        return np.stack([op.weighted for op in self.operators])

    def with_label(self, label) -> "OperatorSample":
        return OperatorSample(self.operators, self.ranks, label)


@dataclass(frozen=True)
class RademacherDraw:
    signs: np.ndarray
    seed: Optional[int] = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.signs)
        if s.ndim != 1 or not np.all(np.isin(s, (-1, 1))):
            raise ValueError("Rademacher signs must be a vector of +1/-1")
        s = s.astype(float)
        s.flags.writeable = False
        object.__setattr__(self, "signs", s)

    @classmethod
    def draw(cls, n: int, seed: SeedLike = None) -> "RademacherDraw":
        rng = make_rng(seed)
        return cls(rng.choice((-1.0, 1.0), size=n), seed if isinstance(seed, int) else None)

    def __len__(self) -> int:
        return self.signs.size


def rademacher_signs(rng: np.random.Generator, size) -> np.ndarray:
    return rng.choice((-1.0, 1.0), size=size)


def sample_mean(s: FunctionalSample) -> Curve:
    return Curve(s.grid, s.values.mean(axis=0))


def covariance_matrix(x: np.ndarray, center: bool = True) -> np.ndarray:
    """(1/n) sum of outer products of the rows of x, optionally centered."""
    if center:
        x = x - x.mean(axis=0)
    c = x.T @ x / x.shape[0]
    return (c + c.T) / 2


def empirical_covariance(s: FunctionalSample, center: bool = True) -> CovOperator:
    return CovOperator(s.grid, covariance_matrix(s.values, center))


def rademacher_matrix(xc: np.ndarray, signs: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """(1/n) sum_i eps_i (x_i x_i^T - cov) for centered rows x_i."""
    n = xc.shape[0]
    m = (xc.T * signs) @ xc - signs.sum() * cov
    return (m + m.T) / (2 * n)


def rademacher_average(s: FunctionalSample, draw: RademacherDraw) -> CovOperator:
    """R_n = n^-1 sum eps_i {(f_i - fbar)^{x2} - Sigma_hat}."""
    if len(draw) != s.n:
        raise ValueError(f"{len(draw)} signs for {s.n} curves")
    xc = s.values - s.values.mean(axis=0)
    cov = xc.T @ xc / s.n
    return CovOperator(s.grid, rademacher_matrix(xc, draw.signs, cov))


def _centered_weighted(s: FunctionalSample):
    xc = s.weighted - s.weighted.mean(axis=0)
    return xc, xc.T @ xc / s.n


def rademacher_norm_estimate(s: FunctionalSample, p: PNorm, n_draws: int = 32,
                             seed: SeedLike = None) -> float:
    """Monte Carlo mean of ||R_n||_p over independent sign vectors."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    rng = make_rng(seed)
    xc, cov = _centered_weighted(s)
    signs = rademacher_signs(rng, (n_draws, s.n))
    mats = np.stack([rademacher_matrix(xc, e, cov) for e in signs])
    return float(np.mean(symmetric_norm(mats, p)))


def rademacher_norm_exhaustive(s: FunctionalSample, p: PNorm) -> float:
    """Exact expectation of ||R_n||_p over all 2^n sign vectors."""
    if s.n > MAX_ENUMERATION:
        raise ValueError(f"refusing to enumerate 2^{s.n} sign vectors")
    xc, cov = _centered_weighted(s)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=s.n)))
    total = 0.0
    for chunk in np.array_split(signs, max(1, len(signs) // 1024)):
        mats = np.stack([rademacher_matrix(xc, e, cov) for e in chunk])
        total += float(np.sum(symmetric_norm(mats, p)))
    return total / len(signs)


def weak_variance_gaussian(S: CovOperator, p: PNorm) -> float:
    """sqrt(2) ||S||_p, the Gaussian bound on the weak standard deviation."""
    return float(np.sqrt(2.0) * schatten_norm(S, p))


def weak_variance_empirical(s: FunctionalSample, p: PNorm) -> float:
    """sqrt of || n^-1 sum f_i^{x2} - fbar^{x2} ||_p."""
    x = s.weighted
    xbar = x.mean(axis=0)
    m = x.T @ x / s.n - np.outer(xbar, xbar)
    return float(np.sqrt(max(symmetric_norm((m + m.T) / 2, p), 0.0)))


def pooled_weak_variance(sigmas, counts) -> float:
    """sigma_pool^2 = N^-1 sum n_i sigma_i^2 (returned squared)."""
    sig = np.asarray(sigmas, dtype=float)
    cnt = np.asarray(counts, dtype=float)
    if sig.size == 0:
        raise ValueError("no weak variances to pool")
    if sig.shape != cnt.shape:
        raise ValueError("sigmas and counts differ in length")
    if np.any(cnt < 1):
        raise ValueError("counts must be >= 1")
    return float(np.sum(cnt * sig ** 2) / np.sum(cnt))


def weak_variance_fourth_moment(s: FunctionalSample, p: PNorm) -> float:
    """Empirical sqrt|| n^-1 sum Z_i (x) Z_i ||_p with Z_i = (f_i - fbar)^{x2} - Sigma_hat.

    Estimates ||E f^{x4} - Sigma^{x2}||_p^{1/2} from the n x n Gram matrix of
    the Z_i, which shares its nonzero spectrum with the d^2 x d^2 operator.
    """
    xc, cov = _centered_weighted(s)
    # <Z_i, Z_j>_HS = (x_i.x_j)^2 - x_i' C x_i - x_j' C x_j + ||C||_HS^2
    g = xc @ xc.T
    q = np.einsum("ij,jk,ik->i", xc, cov, xc)
    gram = g ** 2 - q[:, None] - q[None, :] + np.sum(cov * cov)
    gram = (gram + gram.T) / (2 * s.n)
    return float(np.sqrt(max(symmetric_norm(gram, p), 0.0)))
