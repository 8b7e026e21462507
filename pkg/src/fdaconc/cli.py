"""Command-line interface.

Exit codes: 0 success, 1 invalid input or arguments, 2 file-system errors.
``--out`` names a file for single-output commands (ktest, permtest, power,
classify) and a directory for the others.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .classify import load_model, predict_many, save_model
from .classify import train as train_classifier
from .cluster import confusion_matrix, run_clustering
from .csvio import (
    CurveFormatError,
    ingest_curves,
    ingest_grouped_curves,
    ingest_operator,
    write_curves,
    write_operator,
)
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .fda_stats import OperatorSample
from .ktest import k_sample_test, permutation_test_two_sample, power_curve
from .operator_core import Grid, p_label, parse_p
from .seeding import STREAM_DATA, STREAM_OPERATORS, make_rng
from .simulate import DecaySpec, random_covariance, sample_process

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pnorms(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _out_dir(args) -> Path:
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _curve_format(args) -> str:
    return "grid" if args.grid_header else "rows"


def cmd_simulate(args) -> int:
    grid = Grid.uniform(args.dim)
    S = random_covariance(DecaySpec(args.dim, args.decay, args.scale), grid,
                          make_rng(args.seed, STREAM_OPERATORS))
    x = sample_process(S, args.n, make_rng(args.seed, STREAM_DATA), args.process, args.nu)
    d = _out_dir(args)
    write_curves(d / "curves.csv", x, with_grid=args.grid_header)
    write_operator(d / "operator.csv", S)
    print(json.dumps({"curves": str(d / "curves.csv"), "operator": str(d / "operator.csv"),
                      "n": x.n, "dim": args.dim}))
    return EXIT_OK


def cmd_ktest(args) -> int:
    fmt = _curve_format(args)
    samples = [ingest_curves(p, fmt) for p in args.inputs]
    res = k_sample_test(samples, args.p_norm, args.alpha, args.tuned, make_rng(args.seed))
    _emit(json.dumps(res.to_json(), sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_permtest(args) -> int:
    fmt = _curve_format(args)
    if len(args.inputs) != 2:
        raise UsageError("permtest compares exactly two samples")
    a, b = (ingest_curves(p, fmt) for p in args.inputs)
    res = permutation_test_two_sample(a, b, args.p_norm, args.perms, make_rng(args.seed))
    blob = {"p_value": res.p_value, "statistic": res.observed, "n_perms": res.n_perms,
            "reject": res.p_value <= args.alpha, "alpha": args.alpha,
            "p_norm": p_label(parse_p(args.p_norm)), "elapsed_ms": 1000.0 * res.elapsed}
    _emit(json.dumps(blob, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    grid = Grid.uniform(args.dim)
    spec = DecaySpec(args.dim, args.decay)
    S1 = random_covariance(spec, grid, make_rng(args.seed, STREAM_OPERATORS, 0))
    S2 = random_covariance(spec, grid, make_rng(args.seed, STREAM_OPERATORS, 1))
    pts = power_curve(S1, S2, args.gammas, args.n, args.alpha, args.p_norm, args.reps,
                      args.method, args.seed, n_perms=args.perms, threads=args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "power", "se", "mean_elapsed_ms"])
    for pt in pts:
        w.writerow([pt.gamma, pt.power, pt.se, 1000.0 * pt.mean_elapsed])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _groups_of(sample, size: int):
    if size < 1:
        raise UsageError("--group-size must be >= 1")
    if sample.n % size:
        raise ValueError(f"{sample.n} curves do not split into groups of {size}")
    return [sample.subset(slice(i, i + size)) for i in range(0, sample.n, size)]


def _parse_labeled(items):
    out = []
    for item in items:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"expected LABEL=PATH, got {item!r}")
        out.append((label, path))
    return out


def cmd_classify_train(args) -> int:
    fmt = _curve_format(args)
    data = []
    for label, path in _parse_labeled(args.data):
        s = ingest_curves(path, fmt, label=label)
        if args.group_size:
            data.append(OperatorSample.from_groups(_groups_of(s, args.group_size), label=label))
        else:
            data.append(s)
    model = train_classifier(data, args.p_norm, args.seed, tail=args.tail)
    if args.out is None:
        raise UsageError("classify train needs --out for the model file")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out)
    print(json.dumps({"model": args.out, "labels": list(model.labels), "mode": model.mode}))
    return EXIT_OK


def cmd_classify_predict(args) -> int:
    model = load_model(args.model)
    s = ingest_curves(args.input, _curve_format(args), grid=None if args.grid_header else model.grid)
    if model.mode == "operator":
        size = args.group_size or 1
        obs = _groups_of(s, size)
    else:
        obs = s.curves
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [f"posterior_{lb}" for lb in model.labels])
    for pred in predict_many(model, obs):
        w.writerow([pred.label] + [repr(float(v)) for v in pred.posterior])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cluster_input(args):
    src = Path(args.input)
    if src.is_dir():
        files = sorted(src.glob("*.csv"))
        if not files:
            raise ValueError(f"{src}: no operator CSV files")
        first = ingest_operator(files[0])
        ops = [first] + [ingest_operator(f, first.grid) for f in files[1:]]
        return OperatorSample(tuple(ops), (1,) * len(ops)), [f.name for f in files]
    if not src.exists():
        raise FileNotFoundError(f"no such file or directory: {src}")
    ids, groups = ingest_grouped_curves(src, _curve_format(args))
    return OperatorSample.from_groups(groups), ids


def cmd_cluster(args) -> int:
    data, ids = _cluster_input(args)
    res = run_clustering(data, args.k, args.max_iter, args.tol, args.p_norm, args.seed, args.draws)
    blob = {"ids": ids, "assignments": res.assignments.tolist(), "tau": res.state.tau.tolist(),
            "iterations": res.iterations, "converged": res.converged,
            "reseeded": [list(e) for e in res.state.reseeded]}
    d = _out_dir(args)
    (d / "clusters.json").write_text(json.dumps(blob) + "\n")
    if args.truth:
        truth = [line.strip() for line in Path(args.truth).read_text().splitlines() if line.strip()]
        if len(truth) != data.n:
            raise ValueError(f"{args.truth}: {len(truth)} labels for {data.n} operators")
        labels, table = confusion_matrix(truth, res.assignments, args.k)
        with open(d / "confusion.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label"] + [f"cluster_{j}" for j in range(args.k)])
            for lb, row in zip(labels, table):
                w.writerow([lb] + row.tolist())
    print(json.dumps(blob))
    return EXIT_OK


def _experiment_config(args, experiment: str) -> ExperimentConfig:
    kw = {"experiment": experiment, "seed": args.seed, "threads": args.threads,
          "out": str(args.out or "."), "record_timing": args.timing}
    for name in ("dim", "decay", "reps", "k", "n_perms", "n_train", "n_test", "per_class",
                 "rank", "max_iter", "n_draws", "process", "nu", "sample_sizes", "alphas",
                 "p_norms", "gammas", "group_sizes", "ks", "data_paths", "methods", "trinary"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    return ExperimentConfig(**kw)


def _summarize(records) -> None:
    for rec in records:
        params = " ".join(f"{k}={v}" for k, v in sorted(rec.params.items()))
        print(f"{rec.metric} {rec.value:.4f} (se {rec.se:.4f}) {params}")


def cmd_calibrate(args) -> int:
    _summarize(run_experiment(_experiment_config(args, "calibrate")))
    return EXIT_OK


def cmd_experiment(args) -> int:
    _summarize(run_experiment(_experiment_config(args, args.name)))
    return EXIT_OK


def _globals(defaults: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    p = _Parser(add_help=False)
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    p.add_argument("--seed", type=int, **({"default": 0} if defaults else kw), help="master seed")
    p.add_argument("--threads", type=int, **({"default": 1} if defaults else kw))
    p.add_argument("--out", **({"default": None} if defaults else kw))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdaconc", parents=[_globals(True)],
                     description="Concentration-based inference for covariance operators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    g = [_globals(False)]

    def curves_flag(p):
        p.add_argument("--grid-header", action="store_true",
                       help="first CSV row holds grid points (trapezoid weights)")

    p = sub.add_parser("simulate", parents=g, help="draw curves from a random covariance")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--decay", type=float, default=4.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--process", choices=("gauss", "t"), default="gauss")
    p.add_argument("--nu", type=float, default=4.0)
    curves_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ktest", parents=g, help="k-sample covariance equality test")
    p.add_argument("inputs", nargs="+", help="one curves CSV per sample")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--p-norm", default="2")
    p.add_argument("--tuned", dest="tuned", action="store_true", default=True)
    p.add_argument("--untuned", dest="tuned", action="store_false")
    curves_flag(p)
    p.set_defaults(func=cmd_ktest)

    p = sub.add_parser("permtest", parents=g, help="two-sample permutation test")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--p-norm", default="2")
    p.add_argument("--perms", type=int, default=100)
    curves_flag(p)
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("power", parents=g, help="power along a Procrustes path")
    p.add_argument("--gammas", type=_floats, default=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5))
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--method", choices=("concentration", "permutation"), default="concentration")
    p.add_argument("--decay", type=float, default=4.0)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--p-norm", default="2")
    p.add_argument("--perms", type=int, default=100)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("classify", help="train or apply the concentration classifier")
    csub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    t = csub.add_parser("train", parents=g)
    t.add_argument("data", nargs="+", metavar="LABEL=PATH")
    t.add_argument("--group-size", type=int, default=0,
                   help="consecutive curves per observed operator; 0 classifies single curves")
    t.add_argument("--p-norm", default="1")
    t.add_argument("--tail", choices=("gaussian", "full"), default="gaussian")
    curves_flag(t)
    t.set_defaults(func=cmd_classify_train)
    pr = csub.add_parser("predict", parents=g)
    pr.add_argument("--model", required=True)
    pr.add_argument("input")
    pr.add_argument("--group-size", type=int, default=0)
    curves_flag(pr)
    pr.set_defaults(func=cmd_classify_predict)

    p = sub.add_parser("cluster", parents=g, help="EM clustering of covariance operators")
    p.add_argument("input", help="curves CSV with a leading group-id column, or a directory of operator CSVs")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--p-norm", default="1")
    p.add_argument("--draws", type=int, default=1, help="sign draws averaged per cluster and step")
    p.add_argument("--truth", help="one true label per operator, for a confusion matrix")
    curves_flag(p)
    p.set_defaults(func=cmd_cluster)

    def experiment_flags(p, calibrate: bool):
        p.add_argument("--dim", type=int)
        p.add_argument("--decay", type=float)
        p.add_argument("--reps", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--n", dest="sample_sizes", type=_ints)
        p.add_argument("--alphas", type=_floats)
        p.add_argument("--p-norms", dest="p_norms", type=_pnorms)
        p.add_argument("--process", choices=("gauss", "t"))
        p.add_argument("--nu", type=float)
        p.add_argument("--timing", action="store_true", help="store wall-clock times in the records")
        if calibrate:
            return
        p.add_argument("--gammas", type=_floats)
        p.add_argument("--methods", type=_pnorms)
        p.add_argument("--perms", dest="n_perms", type=int)
        p.add_argument("--group-sizes", dest="group_sizes", type=_ints)
        p.add_argument("--n-train", dest="n_train", type=int)
        p.add_argument("--n-test", dest="n_test", type=int)
        p.add_argument("--per-class", dest="per_class", type=int)
        p.add_argument("--rank", type=int)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--draws", dest="n_draws", type=int)
        p.add_argument("--ks", type=_ints)
        p.add_argument("--trinary", action="store_true", default=None,
                       help="classify: add a third class with inflated minor eigenvalues")
        p.add_argument("--data", dest="data_paths", nargs=2, metavar=("NULL_CSV", "ALT_CSV"))

    p = sub.add_parser("calibrate", parents=g, help="empirical size of the k-sample test")
    experiment_flags(p, True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("experiment", parents=g, help="run a named desk-scale experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    experiment_flags(p, False)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, CurveFormatError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
