"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line to ``LINES``; conftest prints them in the
terminal summary.  ``python tests/test_acceptance.py`` runs them as a script.
Set FDACONC_PHONEME_NULL and FDACONC_PHONEME_ALT to curve CSVs to run the
phoneme protocol; otherwise that criterion is reported as excluded.
"""

import os
import time

import numpy as np
import pytest

from fdaconc.classify import operator_summary
from fdaconc.cluster import ClusterState, em_step, init_state
from fdaconc.experiments import ExperimentConfig, run_experiment
from fdaconc.fda_stats import (
    FunctionalSample,
    OperatorSample,
    RademacherDraw,
    empirical_covariance,
    rademacher_average,
    rademacher_norm_exhaustive,
)
from fdaconc.operator_core import Grid, interpolate, procrustes_distance, schatten_norm
from fdaconc.simulate import DecaySpec, random_covariance, sample_gaussian

from conftest import random_psd
from test_operator_core import angle_grid_distance

pytestmark = pytest.mark.slow

LINES: list = []
THREADS = max(1, min(8, os.cpu_count() or 1))


def report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {num} {'PASS' if ok else 'FAIL'}: {name}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_norm_identities():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    order_ok = True
    for _ in range(200):
        d = int(rng.integers(2, 13))
        S = random_psd(rng, d, rank=int(rng.integers(1, d + 1)))
        n = {p: schatten_norm(S, p) for p in (1, 2, np.inf)}
        big = np.kron(S.weighted, S.weighted)
        for p, v in n.items():
            lam = np.linalg.eigvalsh(big)
            tv = np.max(np.abs(lam)) if p == np.inf else np.sum(np.abs(lam) ** p) ** (1 / p)
            worst = max(worst, abs(tv - v ** 2) / max(v ** 2, 1e-300))
        slack = 1e-12 * n[1]
        order_ok &= n[np.inf] <= n[2] + slack and n[2] <= n[1] + slack
    elapsed = time.perf_counter() - t0
    report(1, "tensor-power norms and ordering",
           worst <= 1e-10 and order_ok and elapsed < 10,
           f"max rel err {worst:.2e}, ordering {'ok' if order_ok else 'violated'}, {elapsed:.2f}s")


def test_interpolation_and_procrustes():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 9))
        S1, S2 = random_psd(rng, d), random_psd(rng, d, rank=int(rng.integers(1, d + 1)))
        for gamma, target in ((0.0, S1), (1.0, S2)):
            got = interpolate(S1, S2, gamma).weighted
            worst = max(worst, np.linalg.norm(got - target.weighted) / np.linalg.norm(target.weighted))
    gap = 0.0
    for _ in range(10):
        S1, S2 = random_psd(rng, 2), random_psd(rng, 2, rank=int(rng.integers(1, 3)))
        gap = max(gap, abs(procrustes_distance(S1, S2) - angle_grid_distance(S1, S2)))
    report(2, "interpolation endpoints and Procrustes oracle", worst <= 1e-8 and gap <= 1e-4,
           f"endpoint rel HS err {worst:.2e}, angle-grid gap {gap:.2e}")


def test_size_calibration():
    cfg = ExperimentConfig("calibrate", seed=0, k=4, dim=16, decay=4.0, sample_sizes=(50, 200),
                           p_norms=(2,), alphas=(0.01, 0.05), reps=2000, threads=THREADS)
    recs = run_experiment(cfg)
    bad = [r for r in recs if r.value > r.params["alpha"] + 2 * r.se]
    detail = ", ".join(f"n={r.params['n']} a={r.params['alpha']}: {r.value:.4f}" for r in recs)
    report(3, "k-sample test size", len(recs) == 4 and not bad, detail)


def test_power_curve_shape():
    cfg = ExperimentConfig("power", seed=0, sample_sizes=(50,), p_norms=(2, "inf"), alphas=(0.05,),
                           reps=1000, threads=THREADS)
    recs = run_experiment(cfg)
    problems, parts = [], []
    for p in ("2", "inf"):
        rows = sorted((r for r in recs if r.params["p_norm"] == p), key=lambda r: r.params["gamma"])
        pw = np.array([r.value for r in rows])
        se = np.array([r.se for r in rows])
        parts.append(f"p={p}: " + " ".join(f"{v:.3f}" for v in pw))
        if pw[0] > 0.05 + 2 * se[0]:
            problems.append(f"p={p} size")
        if np.any(pw[1:] < pw[:-1] - 2 * np.hypot(se[1:], se[:-1])):
            problems.append(f"p={p} monotonicity")
        if pw[-1] < 0.5:
            problems.append(f"p={p} power at 0.5")
    report(4, "power curve shape", not problems, "; ".join(parts + problems))


def test_speed_vs_permutation():
    cfg = ExperimentConfig("power", seed=0, sample_sizes=(50,), methods=("concentration", "permutation"),
                           n_perms=100, reps=20, record_timing=True)
    recs = run_experiment(cfg)
    conc = np.mean([r.elapsed for r in recs if r.params["method"] == "concentration"])
    perm = np.mean([r.elapsed for r in recs if r.params["method"] == "permutation"])
    report(5, "speed vs permutation", conc <= perm / 5,
           f"concentration {1e3 * conc:.2f} ms, permutation {1e3 * perm:.2f} ms, ratio {perm / conc:.1f}x")


def test_classification_accuracy():
    cfg = ExperimentConfig("classify", seed=0, group_sizes=(1, 16), n_train=100, n_test=100,
                           p_norms=(1,), reps=30, threads=THREADS)
    acc = {r.params["group_size"]: r.value for r in run_experiment(cfg) if r.metric == "accuracy"}
    report(6, "classification accuracy", acc[16] >= 0.87 and acc[1] >= 0.5,
           f"group size 16: {acc[16]:.3f}, group size 1: {acc[1]:.3f}")


def test_clustering_separation():
    cfg = ExperimentConfig("cluster", seed=0, dim=32, decay=4.0, per_class=200, n_classes=3, rank=4,
                           p_norms=(1,), max_iter=15, reps=10, threads=THREADS)
    recs = run_experiment(cfg)
    aris = [r.value for r in recs if r.metric == "ari"]
    perfect = sum(a == 1.0 for a in aris)
    report(7, "clustering separation", perfect >= 8,
           f"{perfect}/10 runs with ARI 1, min ARI {min(aris):.3f}")


def test_oracle_equivalences():
    import itertools

    rng = np.random.default_rng(303)
    msgs, ok = [], True

    s = FunctionalSample(Grid.uniform(3), rng.standard_normal((12, 3)))
    vals = [schatten_norm(rademacher_average(s, RademacherDraw(e)), 1)
            for e in itertools.product((-1, 1), repeat=12)]
    gap = abs(rademacher_norm_exhaustive(s, 1) - np.mean(vals))
    ok &= gap <= 1e-12 * np.mean(vals)
    msgs.append(f"enumeration gap {gap:.1e}")

    g = Grid.uniform(5)
    S = random_covariance(DecaySpec(5, 2.0), g, seed=1)
    groups = [sample_gaussian(S, 3, seed=10 + i) for i in range(16)]
    data = OperatorSample.from_groups(groups)
    st0 = init_state(data.n, 3, seed=7)
    new = em_step(st0, data, seed=8)
    col = np.zeros(3)
    for row in st0.rho:
        col += row
    tau_ok = np.allclose(new.tau, col / data.n, rtol=0, atol=1e-15)
    ok &= tau_ok
    msgs.append(f"tau {'exact' if tau_ok else 'mismatch'}")

    x = rng.standard_normal((25, 7))
    m = x.mean(axis=0)
    acc = sum(np.outer(r - m, r - m) for r in x) / 25
    cov_gap = np.max(np.abs(empirical_covariance(FunctionalSample(Grid.uniform(7), x)).kernel - acc))
    ok &= cov_gap <= 1e-12
    msgs.append(f"covariance gap {cov_gap:.1e}")

    labels = np.repeat([0, 1], data.n // 2)
    rho = np.eye(2)[labels]
    signs = np.where(rng.random((2, data.n)) < 0.5, -1.0, 1.0)
    hard = em_step(ClusterState(rho, rho.mean(axis=0)), data, 1, signs=signs)
    worst = 0.0
    for j in range(2):
        mask = labels == j
        mean, rnorm, _ = operator_summary(data.stack[mask], 1.0, signs[j, mask])
        worst = max(worst, np.max(np.abs(hard.sigmas[j].weighted - mean)) / np.max(np.abs(mean)),
                    abs(hard.rademacher_norms[j] - rnorm) / rnorm)
    ok &= worst <= 1e-10
    msgs.append(f"hard-assignment gap {worst:.1e}")
    report(8, "oracle equivalences", bool(ok), ", ".join(msgs))


def test_phoneme_protocol():
    paths = os.environ.get("FDACONC_PHONEME_NULL"), os.environ.get("FDACONC_PHONEME_ALT")
    if not all(paths):
        line = "criterion 9 EXCLUDED: phoneme corpus not supplied"
        LINES.append(line)
        print(line)
        pytest.skip("phoneme corpus not supplied")
    cfg = ExperimentConfig("phoneme_power", data_paths=paths, ks=(2, 3, 4, 5, 6), reps=500,
                           p_norms=(2,), threads=THREADS)
    recs = run_experiment(cfg)
    power = [r.value for r in recs if r.metric == "power"]
    line = "criterion 9 INFO: phoneme power k=2..6: " + " ".join(f"{v:.3f}" for v in power)
    LINES.append(line)
    print(line)


if __name__ == "__main__":
    import sys

    fns = [v for k, v in sorted(globals().items()) if k.startswith("test_") and callable(v)]
    failed = 0
    for fn in fns:
        try:
            fn()
        except AssertionError:
            failed += 1
        except pytest.skip.Exception:
            pass
    sys.exit(1 if failed else 0)
