"""Desk-scale Monte Carlo experiments with JSON-lines and CSV output.

Every replication draws from streams keyed by (master seed, stream id, grid
index, replication), so results do not depend on thread count or run order.
Wall-clock timings are nondeterministic and are only stored when
``record_timing`` is set; otherwise ``elapsed`` is null and repeated runs
write byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .classify import classify, train
from .cluster import adjusted_rand_index, run_clustering
from .csvio import ingest_curves
from .fda_stats import OperatorSample
from .ktest import k_sample_test, map_reps, power_curve
from .operator_core import Grid, p_label, parse_p
from .seeding import STREAM_DATA, STREAM_OPERATORS, STREAM_PERM, STREAM_SIGNS, derive_seed, make_rng
from .simulate import DecaySpec, inflated_average, random_covariance, sample_process, surrogate_pair

EXPERIMENTS = ("calibrate", "power", "classify", "cluster", "phoneme_power")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    dim: int = 16
    decay: float = 4.0
    sample_sizes: tuple = (50,)
    reps: int = 100
    p_norms: tuple = (2,)
    alphas: tuple = (0.05,)
    k: int = 4
    gammas: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    methods: tuple = ("concentration",)
    n_perms: int = 100
    group_sizes: tuple = (1, 16)
    n_train: int = 100
    n_test: int = 100
    process: str = "gauss"
    nu: float = 4.0
    per_class: int = 200
    n_classes: int = 3
    rank: int = 4
    max_iter: int = 15
    tol: float = 1e-6
    n_draws: int = 16
    ks: tuple = (2, 3, 4, 5, 6)
    trinary: bool = False
    data_paths: tuple = ()
    threads: int = 1
    record_timing: bool = False
    out: Optional[str] = None

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for name in ("reps", "dim", "n_perms", "n_train", "n_test", "per_class", "rank",
                     "max_iter", "n_draws", "threads", "k", "n_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        for a in self.alphas:
            if not 0 < a <= 0.5:
                raise ValueError(f"alpha must lie in (0, 0.5], got {a}")
        for p in self.p_norms:
            parse_p(p)
        if self.experiment == "phoneme_power":
            if len(self.data_paths) != 2:
                raise ValueError("phoneme_power needs two curve files (null class, alternative class)")
            for pth in self.data_paths:
                if not Path(pth).is_file():
                    raise FileNotFoundError(f"no such data file: {pth}")


@dataclass
class ResultRecord:
    experiment: str
    params: dict
    metric: str
    value: float
    se: float
    seed: int
    elapsed: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.metric} value is not finite")
        if not self.se >= 0:
            raise ValueError("standard error must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        return cls(**json.loads(line))


def _binomial_se(p: float, n: int) -> float:
    return float(math.sqrt(max(p * (1 - p), 0.0) / n))


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return float(x.mean()), se


def _null_operators(cfg: ExperimentConfig, grid: Grid):
    spec = DecaySpec(cfg.dim, cfg.decay)
    return [random_covariance(spec, grid, make_rng(cfg.seed, STREAM_OPERATORS, i)) for i in range(2)]


def _size_rep(cfg, S, grid, ni, n, r):
    samples = [sample_process(S, n, make_rng(cfg.seed, STREAM_DATA, ni, r, i), cfg.process, cfg.nu)
               for i in range(cfg.k)]
    out = []
    for pi, p in enumerate(cfg.p_norms):
        for a in cfg.alphas:
            # same signs for every alpha so the rejections are nested
            res = k_sample_test(samples, p, a, seed=make_rng(cfg.seed, STREAM_SIGNS, ni, r, pi))
            out.append(res.reject)
    return out


def run_calibrate(cfg: ExperimentConfig) -> list[ResultRecord]:
    """Empirical size of the k-sample test under a shared Gaussian covariance."""
    grid = Grid.uniform(cfg.dim)
    S = _null_operators(cfg, grid)[0]
    records = []
    for ni, n in enumerate(cfg.sample_sizes):
        t0 = time.perf_counter()
        rows = np.array(map_reps(_size_rep, [(cfg, S, grid, ni, n, r) for r in range(cfg.reps)],
                                 cfg.threads), dtype=float)
        elapsed = time.perf_counter() - t0
        col = 0
        for p in cfg.p_norms:
            for a in cfg.alphas:
                size = float(rows[:, col].mean())
                col += 1
                records.append(ResultRecord(
                    "calibrate", {"n": n, "k": cfg.k, "p_norm": p_label(parse_p(p)), "alpha": a,
                                  "dim": cfg.dim, "decay": cfg.decay, "reps": cfg.reps},
                    "size", size, _binomial_se(size, cfg.reps), cfg.seed,
                    elapsed if cfg.record_timing else None))
    return records


def run_power(cfg: ExperimentConfig) -> list[ResultRecord]:
    """Power along the Procrustes path between two random operators."""
    grid = Grid.uniform(cfg.dim)
    S1, S2 = _null_operators(cfg, grid)
    n = cfg.sample_sizes[0]
    records = []
    for method in cfg.methods:
        for p in cfg.p_norms:
            for a in cfg.alphas:
                pts = power_curve(S1, S2, cfg.gammas, n, a, p, cfg.reps, method, cfg.seed,
                                  n_perms=cfg.n_perms, threads=cfg.threads)
                for pt in pts:
                    records.append(ResultRecord(
                        "power", {"gamma": pt.gamma, "n": n, "p_norm": p_label(parse_p(p)),
                                  "alpha": a, "method": method, "reps": cfg.reps},
                        "power", pt.power, pt.se, cfg.seed,
                        pt.mean_elapsed if cfg.record_timing else None))
    return records


def _groups(S, count, size, rng, cfg):
    x = sample_process(S, count * size, rng, cfg.process, cfg.nu)
    return [x.subset(slice(i * size, (i + 1) * size)) for i in range(count)]


def _classify_rep(cfg, ops, mi, m, r):
    p = parse_p(cfg.p_norms[0])
    training = []
    for j, S in enumerate(ops):
        g = _groups(S, cfg.n_train, m, make_rng(cfg.seed, STREAM_DATA, mi, r, j, 0), cfg)
        training.append(OperatorSample.from_groups(g, label=j))
    model = train(training, p, seed=derive_seed(cfg.seed, STREAM_SIGNS, mi, r))
    hits = 0
    for j, S in enumerate(ops):
        g = _groups(S, cfg.n_test, m, make_rng(cfg.seed, STREAM_DATA, mi, r, j, 1), cfg)
        for op in OperatorSample.from_groups(g).operators:
            hits += classify(model, op).label == j
    return hits / (len(ops) * cfg.n_test)


def run_classify(cfg: ExperimentConfig) -> list[ResultRecord]:
    """Accuracy on the fixed surrogate pair (plus an inflated third class if trinary)."""
    ops = surrogate_pair(Grid.uniform(cfg.dim))
    if cfg.trinary:
        ops = ops + (inflated_average(*ops),)
    records = []
    for mi, m in enumerate(cfg.group_sizes):
        t0 = time.perf_counter()
        acc = map_reps(_classify_rep, [(cfg, ops, mi, m, r) for r in range(cfg.reps)], cfg.threads)
        elapsed = time.perf_counter() - t0
        mean, se = _mean_se(acc)
        params = {"group_size": m, "n_train": cfg.n_train, "n_test": cfg.n_test,
                  "p_norm": p_label(parse_p(cfg.p_norms[0])), "process": cfg.process,
                  "classes": len(ops), "reps": cfg.reps}
        records.append(ResultRecord("classify", params, "accuracy", mean, se, cfg.seed,
                                    elapsed if cfg.record_timing else None))
        sd = float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0
        records.append(ResultRecord("classify", params, "accuracy_sd", sd, 0.0, cfg.seed, None))
    return records


def cluster_dataset(cfg: ExperimentConfig, r: int):
    """Rank-``cfg.rank`` observed operators from ``n_classes`` random covariances."""
    grid = Grid.uniform(cfg.dim)
    spec = DecaySpec(cfg.dim, cfg.decay)
    ops, truth = [], []
    for c in range(cfg.n_classes):
        S = random_covariance(spec, grid, make_rng(cfg.seed, STREAM_OPERATORS, r, c))
        x = sample_process(S, cfg.per_class * cfg.rank, make_rng(cfg.seed, STREAM_DATA, r, c),
                           cfg.process, cfg.nu)
        groups = [x.subset(slice(i * cfg.rank, (i + 1) * cfg.rank)) for i in range(cfg.per_class)]
        ops.extend(OperatorSample.from_groups(groups).operators)
        truth.extend([c] * cfg.per_class)
    return OperatorSample(tuple(ops), (cfg.rank,) * len(ops)), truth


def _cluster_rep(cfg, r):
    data, truth = cluster_dataset(cfg, r)
    res = run_clustering(data, cfg.n_classes, cfg.max_iter, cfg.tol, cfg.p_norms[0],
                         derive_seed(cfg.seed, STREAM_PERM, r), cfg.n_draws)
    return adjusted_rand_index(truth, res.assignments), res.iterations


def run_cluster(cfg: ExperimentConfig) -> list[ResultRecord]:
    t0 = time.perf_counter()
    out = map_reps(_cluster_rep, [(cfg, r) for r in range(cfg.reps)], cfg.threads)
    elapsed = time.perf_counter() - t0
    params = {"dim": cfg.dim, "rank": cfg.rank, "per_class": cfg.per_class, "k": cfg.n_classes,
              "p_norm": p_label(parse_p(cfg.p_norms[0])), "max_iter": cfg.max_iter,
              "n_draws": cfg.n_draws}
    records = [ResultRecord("cluster", dict(params, run=r), "ari", float(ari), 0.0, cfg.seed, None)
               for r, (ari, _) in enumerate(out)]
    perfect = float(np.mean([ari == 1.0 for ari, _ in out]))
    records.append(ResultRecord("cluster", dict(params, reps=cfg.reps), "perfect_fraction", perfect,
                                _binomial_se(perfect, cfg.reps), cfg.seed,
                                elapsed if cfg.record_timing else None))
    return records


def _phoneme_rep(cfg, null_x, alt_x, k, r, size):
    rng = make_rng(cfg.seed, STREAM_DATA, k, r)
    out = []
    for alt in (False, True):
        idx = rng.permutation(null_x.n)
        samples = [null_x.subset(idx[i * size:(i + 1) * size]) for i in range(k - 1)]
        last = alt_x.subset(rng.permutation(alt_x.n)[:size]) if alt else \
            null_x.subset(idx[(k - 1) * size:k * size])
        res = k_sample_test(samples + [last], cfg.p_norms[0], cfg.alphas[0],
                            seed=make_rng(cfg.seed, STREAM_SIGNS, k, r, int(alt)))
        out.append(res.reject)
    return out


def run_phoneme_power(cfg: ExperimentConfig) -> list[ResultRecord]:
    """k-1 disjoint sets from the first class plus one from the second (or first, for size)."""
    null_x = ingest_curves(cfg.data_paths[0])
    alt_x = ingest_curves(cfg.data_paths[1], grid=null_x.grid)
    size = cfg.sample_sizes[0]
    if max(cfg.ks) * size > null_x.n:
        raise ValueError(f"need {max(cfg.ks) * size} curves in {cfg.data_paths[0]}, found {null_x.n}")
    if size > alt_x.n:
        raise ValueError(f"need {size} curves in {cfg.data_paths[1]}, found {alt_x.n}")
    records = []
    for k in cfg.ks:
        rows = np.array(map_reps(_phoneme_rep, [(cfg, null_x, alt_x, k, r, size)
                                                for r in range(cfg.reps)], cfg.threads), dtype=float)
        params = {"k": k, "set_size": size, "alpha": cfg.alphas[0],
                  "p_norm": p_label(parse_p(cfg.p_norms[0])), "reps": cfg.reps}
        for col, metric in ((0, "size"), (1, "power")):
            v = float(rows[:, col].mean())
            records.append(ResultRecord("phoneme_power", params, metric, v,
                                        _binomial_se(v, cfg.reps), cfg.seed, None))
    return records


RUNNERS = {
    "calibrate": run_calibrate,
    "power": run_power,
    "classify": run_classify,
    "cluster": run_cluster,
    "phoneme_power": run_phoneme_power,
}


def write_records(records: list[ResultRecord], out_dir, name: str) -> tuple[Path, Path]:
    """``name``.jsonl with one record per line and ``name``.csv with flattened params."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        jpath, cpath = out_dir / f"{name}.jsonl", out_dir / f"{name}.csv"
        with open(jpath, "w") as fh:
            for rec in records:
                fh.write(rec.to_json() + "\n")
        keys = sorted({k for rec in records for k in rec.params})
        with open(cpath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys + ["metric", "value", "se"])
            for rec in records:
                w.writerow([rec.params.get(k, "") for k in keys] + [rec.metric, repr(rec.value), repr(rec.se)])
    except OSError as exc:
        raise OSError(f"cannot write results under {out_dir}: {exc.strerror or exc}") from exc
    return jpath, cpath


def read_records(path) -> list[ResultRecord]:
    with open(path) as fh:
        return [ResultRecord.from_json(line) for line in fh if line.strip()]


def run_experiment(config: ExperimentConfig) -> list[ResultRecord]:
    config.validate()
    records = RUNNERS[config.experiment](config)
    if config.out is not None:
        write_records(records, config.out, config.experiment)
    return records
