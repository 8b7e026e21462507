"""Random covariance operators and Gaussian / t-process curve samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fda_stats import FunctionalSample
from .operator_core import PSD_RTOL, CovOperator, Grid
from .seeding import SeedLike, make_rng

DEFAULT_DIM = 16


@dataclass(frozen=True)
class DecaySpec:
    """Spectrum scale * m^(-exponent), m = 1..dimension."""

    dimension: int
    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.exponent < 0:
            raise ValueError("decay exponent must be >= 0")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def spectrum(self) -> np.ndarray:
        m = np.arange(1, self.dimension + 1, dtype=float)
        return self.scale * m ** (-float(self.exponent))


def random_orthonormal(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """d x r matrix with Haar-distributed orthonormal columns."""
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    return q * np.sign(np.diag(rr))


def random_covariance(spec: DecaySpec, grid: Grid, seed: SeedLike = None) -> CovOperator:
    """U diag(lambda) U^T for a random basis orthonormal in L2 of the grid."""
    d = grid.size
    if spec.dimension > d:
        raise ValueError(f"decay dimension {spec.dimension} exceeds grid size {d}")
    u = random_orthonormal(d, spec.dimension, make_rng(seed))
    return operator_from_basis(grid, u, spec.spectrum())


def operator_from_basis(grid: Grid, basis: np.ndarray, eigenvalues) -> CovOperator:
    """Operator with the given weighted-coordinate eigenvectors and eigenvalues."""
    m = (basis * np.asarray(eigenvalues, dtype=float)) @ basis.T
    return CovOperator.from_weighted(grid, (m + m.T) / 2)


def _kl_factor(S: CovOperator) -> np.ndarray:
    """Columns sqrt(lambda_m) e_m of the Karhunen-Loeve expansion."""
    vals, vecs = S.spectrum, S.eigenvectors
    top = np.abs(vals).max() if vals.size else 0.0
    if vals.size and vals.min() < -PSD_RTOL * top:
        raise ValueError("cannot sample from an operator that is not PSD")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _gaussian_weighted(S: CovOperator, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.standard_normal((n, S.grid.size))
    return z @ _kl_factor(S).T


def sample_gaussian(S: CovOperator, n: int, seed: SeedLike = None, label=None) -> FunctionalSample:
    """n mean-zero Gaussian curves with covariance S."""
    x = _gaussian_weighted(S, n, make_rng(seed))
    return FunctionalSample(S.grid, x / S.grid.sqrt_weights, label)


def sample_t_process(S: CovOperator, nu: float, n: int, seed: SeedLike = None,
                     label=None) -> FunctionalSample:
    """n mean-zero t-process curves with nu degrees of freedom and covariance S.

    Consumes the generator exactly like :func:`sample_gaussian` before the
    chi-square draws, so with a shared seed each t curve is the Gaussian
    curve times sqrt((nu - 2)/V).
    """
    if not nu > 2:
        raise ValueError("nu must exceed 2 for the covariance to exist")
    rng = make_rng(seed)
    x = _gaussian_weighted(S, n, rng)
    v = rng.chisquare(nu, size=n)
    scale = np.sqrt((nu - 2.0) / nu) / np.sqrt(v / nu)
    return FunctionalSample(S.grid, (x * scale[:, None]) / S.grid.sqrt_weights, label)


def sample_process(S: CovOperator, n: int, seed: SeedLike = None, process: str = "gauss",
                   nu: float = 4.0, label=None) -> FunctionalSample:
    if process in ("gauss", "gaussian"):
        return sample_gaussian(S, n, seed, label)
    if process == "t":
        return sample_t_process(S, nu, n, seed, label)
    raise ValueError(f"unknown process {process!r}")


# Fixed surrogate pair for the two-class experiments: two operators with the
# same m^-2 spectrum whose eigenbases differ by a small random rotation.
SURROGATE_SEED = 20160401
SURROGATE_DECAY = 2.0
SURROGATE_ROTATION = 0.12


def surrogate_pair(grid: Grid | None = None) -> tuple[CovOperator, CovOperator]:
    """Deterministic pair of similar-decay operators standing in for real data."""
    grid = grid or Grid.uniform(DEFAULT_DIM)
    d = grid.size
    rng = make_rng(SURROGATE_SEED)
    lam = DecaySpec(d, SURROGATE_DECAY).spectrum()
    u1 = random_orthonormal(d, d, rng)
    a = rng.standard_normal((d, d))
    skew = (a - a.T) / 2
    skew *= SURROGATE_ROTATION / np.linalg.norm(skew, 2)
    eye = np.eye(d)
    # Cayley transform of a skew matrix is orthogonal
    rot = np.linalg.solve(eye - skew, eye + skew)
    u2 = rot @ u1
    return operator_from_basis(grid, u1, lam), operator_from_basis(grid, u2, lam)


def inflated_average(S1: CovOperator, S2: CovOperator, factor: float = 5.0) -> CovOperator:
    """Average of S1 and S2 with every non-principal eigenvalue scaled by ``factor``."""
    avg = (S1 + S2) * 0.5
    vals = np.array(avg.spectrum)
    vals[1:] *= factor
    return operator_from_basis(avg.grid, avg.eigenvectors, vals)
