"""Concentration-based approximate Bayes classifier.

Curve mode compares a new curve with each label's mean curve in L2; operator
mode compares the sample covariance of a group of curves with each label's
mean operator in a Schatten norm.  Either way the label score is

    phi_j = exp(-(n_j / 2) * (max(0, D_j - ||R_j||) / sigma_j)^2)

(the Gaussian tail), or the full Talagrand tail when ``tail="full"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .fda_stats import (
    FunctionalSample,
    OperatorSample,
    RademacherDraw,
    empirical_covariance,
    rademacher_signs,
    weak_variance_empirical,
)
from .operator_core import CovOperator, Curve, Grid, PNorm, check_same_grid, p_label, parse_p, symmetric_norm
from .seeding import STREAM_SIGNS, SeedLike, make_rng

MODEL_FORMAT = "fdaconc-classifier"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrainedClassifier:
    labels: tuple
    mode: str  # "curve" | "operator"
    grid: Grid
    means: np.ndarray  # (k, d) curve values or (k, d, d) kernels
    counts: np.ndarray
    rademacher_norms: np.ndarray
    weak_variances: np.ndarray
    p_norm: float
    tail: str = "gaussian"
    priors: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return len(self.labels)

    def summary(self, label) -> dict:
        j = self.labels.index(label)
        return {"count": int(self.counts[j]), "rademacher_norm": float(self.rademacher_norms[j]),
                "weak_variance": float(self.weak_variances[j])}


@dataclass(frozen=True)
class Prediction:
    label: object
    posterior: np.ndarray
    tie: bool = False


def _curve_summary(s: FunctionalSample, p: float, signs: np.ndarray):
    x = s.weighted
    xbar = x.mean(axis=0)
    rj = (signs @ (x - xbar)) / s.n
    return s.values.mean(axis=0), float(np.linalg.norm(rj)), weak_variance_empirical(s, p)


def operator_summary(stack: np.ndarray, p: float, signs: np.ndarray):
    """Mean, ||R_j||_p and Gaussian weak variance for a stack of weighted matrices."""
    mean = stack.mean(axis=0)
    r = np.tensordot(signs, stack - mean, axes=1) / len(stack)
    return mean, symmetric_norm((r + r.T) / 2, p), float(np.sqrt(2.0) * symmetric_norm(mean, p))


def train(data: Sequence[Union[FunctionalSample, OperatorSample]], p_norm: PNorm = 1,
          seed: SeedLike = None, *, tail: str = "gaussian", priors: Optional[Mapping] = None,
          draws: Optional[Mapping] = None) -> TrainedClassifier:
    """Fit per-label summaries; one labeled sample per class.

    ``draws`` optionally maps label -> RademacherDraw to fix the signs.
    """
    if tail not in ("gaussian", "full"):
        raise ValueError(f"unknown tail {tail!r}")
    if len(data) < 2:
        raise ValueError("classification needs at least 2 labels")
    labels = tuple(s.label for s in data)
    if any(lb is None for lb in labels):
        raise ValueError("every training sample must carry a label")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels; merge samples per label first")
    if all(isinstance(s, FunctionalSample) for s in data):
        mode = "curve"
    elif all(isinstance(s, OperatorSample) for s in data):
        mode = "operator"
    else:
        raise TypeError("training data must be all FunctionalSample or all OperatorSample")
    grid = data[0].grid
    for s in data[1:]:
        check_same_grid(grid, s.grid)
    p = parse_p(p_norm)

    means, rnorms, sigmas, counts = [], [], [], []
    for j, s in enumerate(data):
        if s.n < 2:
            raise ValueError(f"label {s.label!r} has {s.n} observation(s); need at least 2")
        if draws is not None and s.label in draws:
            signs = np.asarray(draws[s.label].signs if isinstance(draws[s.label], RademacherDraw)
                               else draws[s.label], dtype=float)
            if signs.size != s.n:
                raise ValueError(f"{signs.size} signs for label {s.label!r} with {s.n} observations")
        else:
            signs = rademacher_signs(make_rng(seed, STREAM_SIGNS, j) if isinstance(seed, int)
                                     else make_rng(seed), s.n)
        if mode == "curve":
            mean, rn, sig = _curve_summary(s, p, signs)
        else:
            m, rn, sig = operator_summary(s.stack, p, signs)
            mean = CovOperator.from_weighted(grid, m).kernel
        if not sig > 0:
            raise ValueError(f"label {s.label!r} has zero weak variance")
        means.append(mean)
        rnorms.append(rn)
        sigmas.append(sig)
        counts.append(s.n)

    prior_vec = None
    if priors is not None:
        prior_vec = np.array([float(priors[lb]) for lb in labels])
        if np.any(prior_vec <= 0):
            raise ValueError("priors must be positive")
        prior_vec = prior_vec / prior_vec.sum()

    return TrainedClassifier(labels, mode, grid, np.stack(means), np.array(counts, dtype=float),
                             np.array(rnorms), np.array(sigmas), p, tail, prior_vec)


def distances(c: TrainedClassifier, g: Union[Curve, CovOperator, FunctionalSample]) -> np.ndarray:
    """D_j between the observation and each label's mean."""
    if isinstance(g, FunctionalSample):
        if c.mode == "curve":
            raise TypeError("curve-mode classifiers take a single Curve")
        g = empirical_covariance(g, center=False)
    check_same_grid(c.grid, g.grid)
    s = c.grid.sqrt_weights
    if c.mode == "curve":
        if not isinstance(g, Curve):
            raise TypeError("curve-mode classifiers take a Curve")
        return np.linalg.norm((c.means - g.values) * s, axis=1)
    if not isinstance(g, CovOperator):
        raise TypeError("operator-mode classifiers take a CovOperator")
    diffs = (c.means - g.kernel) * np.outer(s, s)
    return np.atleast_1d(symmetric_norm(diffs, c.p_norm))


def log_scores(dist: np.ndarray, rnorms: np.ndarray, sigmas, counts, tail: str = "gaussian") -> np.ndarray:
    """log phi_j; broadcasts over leading axes of ``dist``."""
    r = np.maximum(dist - rnorms, 0.0)
    sigmas = np.asarray(sigmas, dtype=float)
    if tail == "gaussian":
        return -0.5 * counts * (r / sigmas) ** 2
    if tail == "full":
        u = sigmas
        return -counts * r ** 2 / (4 * rnorms * u + 2 * sigmas ** 2 + 2 * r * u / 3)
    raise ValueError(f"unknown tail {tail!r}")


def normalize_log(logphi: np.ndarray) -> np.ndarray:
    """Row-wise softmax; the largest score always maps to exp(0), so no row underflows."""
    z = logphi - logphi.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def posterior(c: TrainedClassifier, g) -> np.ndarray:
    logphi = log_scores(distances(c, g), c.rademacher_norms, c.weak_variances, c.counts, c.tail)
    if c.priors is not None:
        logphi = logphi + np.log(c.priors)
    return normalize_log(logphi)


def classify(c: TrainedClassifier, g) -> Prediction:
    """Maximum-posterior label; ties go to the earliest label."""
    post = posterior(c, g)
    top = np.flatnonzero(np.isclose(post, post.max(), rtol=1e-12, atol=0.0))
    return Prediction(c.labels[int(top[0])], post, len(top) > 1)


def predict_many(c: TrainedClassifier, observations) -> list[Prediction]:
    return [classify(c, g) for g in observations]


def save_model(c: TrainedClassifier, path: Union[str, Path]) -> None:
    blob = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": c.mode,
        "labels": list(c.labels),
        "p_norm": p_label(c.p_norm),
        "tail": c.tail,
        "grid": {"points": c.grid.points.tolist(), "weights": c.grid.weights.tolist()},
        "means": c.means.tolist(),
        "counts": c.counts.tolist(),
        "rademacher_norms": c.rademacher_norms.tolist(),
        "weak_variances": c.weak_variances.tolist(),
        "priors": None if c.priors is None else c.priors.tolist(),
    }
    Path(path).write_text(json.dumps(blob, indent=1) + "\n")


def load_model(path: Union[str, Path]) -> TrainedClassifier:
    blob = json.loads(Path(path).read_text())
    if blob.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path} is not a classifier model file")
    if blob.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {blob.get('version')}")
    grid = Grid(np.array(blob["grid"]["points"]), np.array(blob["grid"]["weights"]))
    priors = blob.get("priors")
    return TrainedClassifier(
        labels=tuple(blob["labels"]),
        mode=blob["mode"],
        grid=grid,
        means=np.array(blob["means"], dtype=float),
        counts=np.array(blob["counts"], dtype=float),
        rademacher_norms=np.array(blob["rademacher_norms"], dtype=float),
        weak_variances=np.array(blob["weak_variances"], dtype=float),
        p_norm=parse_p(blob["p_norm"]),
        tail=blob["tail"],
        priors=None if priors is None else np.array(priors, dtype=float),
    )
