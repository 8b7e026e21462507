"""Closed-form confidence radii from Talagrand's inequality.

Both radii use ``L = -log(2 alpha) >= 0`` so every correction term is
nonnegative and the radius grows as alpha shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .fda_stats import (
    FunctionalSample,
    empirical_covariance,
    rademacher_norm_estimate,
    weak_variance_empirical,
    weak_variance_gaussian,
)
from .operator_core import CovOperator, PNorm, check_same_grid, parse_p, schatten_norm


@dataclass(frozen=True)
class RadiusParams:
    n: int
    rademacher_norm: float
    sigma: float
    alpha: float
    u_bound: Optional[float] = None  # defaults to sigma

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        check_alpha(self.alpha)
        for name in ("rademacher_norm", "sigma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.u_bound is not None and (not math.isfinite(self.u_bound) or self.u_bound < 0):
            raise ValueError(f"u_bound must be finite and >= 0, got {self.u_bound}")

    @property
    def U(self) -> float:
        return self.sigma if self.u_bound is None else self.u_bound


def check_alpha(alpha: float) -> float:
    if not (0 < alpha <= 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2], got {alpha}")
    return alpha


def log_term(alpha: float) -> float:
    return -math.log(2 * check_alpha(alpha))


def confidence_radius_general(p: RadiusParams) -> float:
    """||R_n|| + sqrt((2/n) L (sigma^2 + 2U||R_n||)) + U L / (3n)."""
    L = log_term(p.alpha)
    U = p.U
    dev = math.sqrt(2.0 / p.n * L * (p.sigma ** 2 + 2 * U * p.rademacher_norm))
    return p.rademacher_norm + dev + U * L / (3 * p.n)


def confidence_radius_covariance(p: RadiusParams) -> float:
    """||R_n|| + sigma sqrt(2L/n) + sigma L / (3n)  (U = sigma)."""
    L = log_term(p.alpha)
    return p.rademacher_norm + p.sigma * math.sqrt(2 * L / p.n) + p.sigma * L / (3 * p.n)


def membership(S_hat: CovOperator, S: CovOperator, p_norm: PNorm, radius: float) -> bool:
    check_same_grid(S_hat.grid, S.grid)
    return schatten_norm(S_hat - S, p_norm) <= radius


@dataclass(frozen=True)
class ConfidenceSet:
    center: CovOperator
    radius: float
    p_norm: float
    alpha: float
    rademacher_norm: float
    sigma: float

    def contains(self, S: CovOperator) -> bool:
        return membership(self.center, S, self.p_norm, self.radius)


def covariance_confidence_set(sample: FunctionalSample, p_norm: PNorm, alpha: float, *, n_draws: int = 32,
                              sigma_rule: str = "gaussian", seed=None) -> ConfidenceSet:
    """(1 - alpha) ball around the empirical covariance of ``sample``.

    ``sigma_rule`` is 'gaussian' (sqrt(2)||Sigma_hat||_p) or 'empirical'.
    """
    p = parse_p(p_norm)
    cov = empirical_covariance(sample)
    rn = rademacher_norm_estimate(sample, p, n_draws=n_draws, seed=seed)
    if sigma_rule == "gaussian":
        sigma = weak_variance_gaussian(cov, p)
    elif sigma_rule == "empirical":
        sigma = weak_variance_empirical(sample, p)
    else:
        raise ValueError(f"unknown sigma rule {sigma_rule!r}")
    r = confidence_radius_covariance(RadiusParams(sample.n, rn, sigma, alpha))
    return ConfidenceSet(cov, r, p, alpha, rn, sigma)
