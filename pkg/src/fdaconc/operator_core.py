"""Discretized L2(I) linear algebra.

Curves live on a :class:`Grid` with quadrature weights ``w``.  An integral
operator with kernel ``K`` acts as ``f -> K @ (w * f)``; its spectrum is that
of the symmetric matrix ``W^{1/2} K W^{1/2}`` (the *weighted matrix*), so
all Schatten norms agree with the quadrature L2 inner product.  Most
numerics here run on weighted matrices and weighted curve coordinates
``sqrt(w) * f``, in which the L2 inner product is the Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

PNorm = Union[float, int, str]

SYMMETRY_RTOL = 1e-8
PSD_RTOL = 1e-8


def parse_p(p: PNorm) -> float:
    """Normalize a Schatten exponent; accepts numbers and 'inf'/'infinity'."""
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "op", "operator"):
            return np.inf
        if key in ("tr", "trace", "nuclear"):
            return 1.0
        if key in ("hs", "fro"):
            return 2.0
        p = float(key)
    p = float(p)
    if np.isnan(p) or p < 1:
        raise ValueError(f"Schatten exponent must be >= 1, got {p}")
    return p


def p_label(p: PNorm) -> str:
    p = parse_p(p)
    return "inf" if np.isinf(p) else f"{p:g}"


@dataclass(frozen=True, eq=False)
class Grid:
    """Sample locations in I with positive quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).copy()
        wts = np.asarray(self.weights, dtype=float).copy()
        if pts.ndim != 1 or wts.ndim != 1 or pts.shape != wts.shape:
            raise ValueError("grid points and weights must be 1-d arrays of equal length")
        if pts.size < 2:
            raise ValueError("a grid needs at least 2 points")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be finite and strictly increasing")
        if not np.all(np.isfinite(wts)) or np.any(wts <= 0):
            raise ValueError("grid weights must be finite and positive")
        pts.flags.writeable = False
        wts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def uniform(cls, d: int, a: float = 0.0, b: float = 1.0) -> "Grid":
        """Midpoint grid on [a, b] with equal weights (b - a)/d."""
        h = (b - a) / d
        return cls(a + h * (np.arange(d) + 0.5), np.full(d, h))

    @classmethod
    def from_points(cls, points) -> "Grid":
        """Trapezoid-rule weights for arbitrary increasing points."""
        t = np.asarray(points, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least 2 grid points")
        gaps = np.diff(t)
        w = np.zeros_like(t)
        w[:-1] += gaps / 2
        w[1:] += gaps / 2
        return cls(t, w)

    @property
    def size(self) -> int:
        return self.points.size

    def __len__(self) -> int:
        return self.points.size

    @cached_property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    __hash__ = object.__hash__


def check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError("objects live on different grids")


@dataclass(frozen=True, eq=False)
class Curve:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != (self.grid.size,):
            raise ValueError(f"curve has {v.shape} values for a grid of size {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def weighted(self) -> np.ndarray:
        return self.values * self.grid.sqrt_weights

    def __sub__(self, other: "Curve") -> "Curve":
        check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values - other.values)

    def __add__(self, other: "Curve") -> "Curve":
        check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __mul__(self, c: float) -> "Curve":
        return Curve(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Curve":
        return Curve(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class CovOperator:
    """Self-adjoint integral operator given by its kernel on a grid."""

    grid: Grid
    kernel: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        d = self.grid.size
        if k.shape != (d, d):
            raise ValueError(f"kernel shape {k.shape} does not match grid size {d}")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel entries must be finite")
        scale = np.abs(k).max()
        if scale > 0 and np.abs(k - k.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("kernel is not symmetric")
        k = (k + k.T) / 2
        k.flags.writeable = False
        object.__setattr__(self, "kernel", k)

    @classmethod
    def from_weighted(cls, grid: Grid, matrix: np.ndarray) -> "CovOperator":
        s = grid.sqrt_weights
        return cls(grid, np.asarray(matrix) / np.outer(s, s))

    @classmethod
    def zeros(cls, grid: Grid) -> "CovOperator":
        return cls(grid, np.zeros((grid.size, grid.size)))

    @cached_property
    def weighted(self) -> np.ndarray:
        """W^{1/2} K W^{1/2}."""
        s = self.grid.sqrt_weights
        m = self.kernel * np.outer(s, s)
        return (m + m.T) / 2

    @cached_property
    def _eig(self):
        vals, vecs = np.linalg.eigh(self.weighted)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        vals.flags.writeable = False
        vecs.flags.writeable = False
        return vals, vecs

    @property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues, largest first."""
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        """Orthonormal eigenvectors in weighted coordinates (columns)."""
        return self._eig[1]

    def trace(self) -> float:
        return float(np.trace(self.weighted))

    def apply(self, f: Curve) -> Curve:
        check_same_grid(self.grid, f.grid)
        return Curve(self.grid, self.kernel @ (self.grid.weights * f.values))

    def _other(self, other: "CovOperator") -> np.ndarray:
        check_same_grid(self.grid, other.grid)
        return other.kernel

    def __add__(self, other: "CovOperator") -> "CovOperator":
        return CovOperator(self.grid, self.kernel + self._other(other))

    def __sub__(self, other: "CovOperator") -> "CovOperator":
        return CovOperator(self.grid, self.kernel - self._other(other))

    def __mul__(self, c: float) -> "CovOperator":
        return CovOperator(self.grid, float(c) * self.kernel)

    __rmul__ = __mul__

    def __neg__(self) -> "CovOperator":
        return CovOperator(self.grid, -self.kernel)


def inner_product(f: Curve, g: Curve) -> float:
    check_same_grid(f.grid, g.grid)
    return float(np.sum(f.values * g.values * f.grid.weights))


def l2_norm(f: Curve) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def tensor_square(f: Curve) -> CovOperator:
    """The rank one operator phi -> <f, phi> f."""
    return CovOperator(f.grid, np.outer(f.values, f.values))


def spectrum_norm(eigenvalues, p: PNorm) -> float:
    lam = np.abs(np.asarray(eigenvalues, dtype=float))
    p = parse_p(p)
    if lam.size == 0:
        return 0.0
    if np.isinf(p):
        return float(lam.max())
    if p == 1:
        return float(lam.sum())
    top = lam.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((lam / top) ** p) ** (1 / p))


def symmetric_norm(matrix: np.ndarray, p: PNorm) -> float:
    """Schatten norm of a symmetric matrix (or a stack of them, last two axes).

    The Hilbert-Schmidt case skips the eigensolver.
    """
    p = parse_p(p)
    m = np.asarray(matrix, dtype=float)
    if p == 2:
        out = np.sqrt(np.sum(m * m, axis=(-2, -1)))
    else:
        lam = np.abs(np.linalg.eigvalsh(m))
        if np.isinf(p):
            out = lam.max(axis=-1)
        elif p == 1:
            out = lam.sum(axis=-1)
        else:
            out = np.sum(lam ** p, axis=-1) ** (1 / p)
    return float(out) if np.ndim(out) == 0 else out


def schatten_norm(S: CovOperator, p: PNorm) -> float:
    return spectrum_norm(S.spectrum, p)


def _psd_root(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((matrix + matrix.T) / 2)
    top = np.abs(vals).max() if vals.size else 0.0
    if vals.size and vals.min() < -PSD_RTOL * top:
        raise ValueError(
            f"operator has eigenvalue {vals.min():.3g} below the PSD tolerance; not a covariance")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return (root + root.T) / 2


def operator_sqrt(S: CovOperator) -> CovOperator:
    """PSD square root R with R R = S (composition of integral operators)."""
    return CovOperator.from_weighted(S.grid, _psd_root(S.weighted))


def _procrustes_parts(S1: CovOperator, S2: CovOperator):
    check_same_grid(S1.grid, S2.grid)
    b1 = _psd_root(S1.weighted)
    b2 = _psd_root(S2.weighted)
    u, sv, vt = np.linalg.svd(b2.T @ b1)
    # S_opt maximizes tr(B1^T B2 S), so ||B1 - B2 S_opt||_HS is minimal
    return b1, b2, u @ vt, sv


def procrustes_distance(S1: CovOperator, S2: CovOperator) -> float:
    """inf over orthogonal S of ||R1 - R2 S||_HS, with R_i the PSD square roots."""
    b1, b2, s_opt, _ = _procrustes_parts(S1, S2)
    # equals sqrt(tr S1 + tr S2 - 2 sum(sv)) but avoids cancellation near d = 0
    return float(np.linalg.norm(b1 - b2 @ s_opt))


def interpolate(S1: CovOperator, S2: CovOperator, gamma: float) -> CovOperator:
    """Point on the Procrustes path from S1 (gamma=0) to S2 (gamma=1).

    ``R = R1 + gamma (R2 S_opt - R1)`` and the result is ``R R^T``; gamma may
    exceed 1 to extrapolate past S2.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0:
        return S1
    b1, b2, s_opt, _ = _procrustes_parts(S1, S2)
    r = b1 + gamma * (b2 @ s_opt - b1)
    return CovOperator.from_weighted(S1.grid, r @ r.T)
