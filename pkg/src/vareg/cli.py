"""Command-line entry point: ``vareg {generate,calibrate,bench,probe}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .baselines import fit_standardizer, make_trainer
from .bench import BenchConfig, render_report, run_bench
from .cvar import CvarConfig, fit_cvar
from .datagen import SCENARIOS, DatasetSpec, generate, read_csv, write_dataset
from .merge import merge
from .probe import coverage_probe, run_probe_suite
from .vennabers import IvarConfig, epsilon_to_m, fit_bounded, fit_unbounded

log = logging.getLogger("vareg")

FULL_TRIALS = 100


def _bounds(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--bounds expects LO,HI") from None
    return lo, hi


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_generate(args) -> int:
    spec = DatasetSpec(args.scenario, args.n, d=args.d, sigma=args.sigma, seed=args.seed)
    ds = generate(spec)
    if args.out in (None, "-"):
        write_dataset(sys.stdout, ds)
    else:
        write_dataset(args.out, ds)
        log.info("wrote %d training + %d test rows to %s", len(ds.train_labels), len(ds.test_labels), args.out)
    return 0


def _resolve_m(args, k: int) -> int:
    if args.epsilon is not None:
        return epsilon_to_m(args.epsilon, k)
    return 1 if args.m is None else args.m


def cmd_calibrate(args) -> int:
    x_train, y_train, names = read_csv(args.train, args.label_column)
    x_test, _, test_names = read_csv(args.test, args.label_column, require_label=False)
    if test_names != names:
        raise ValueError(f"test features {test_names} do not match training features {names}")
    scaler = fit_standardizer(x_train)
    x_train, x_test = scaler.transform(x_train), scaler.transform(x_test)
    trainer = make_trainer(args.base)
    lines = []
    if args.method == "cvar":
        fold_size = len(y_train) // args.folds
        m = None if args.bounds else _resolve_m(args, fold_size)
        cfg = CvarConfig(folds=args.folds, winsor_m=m, merge_mode=args.merge,
                         fold_seed=args.seed, bounds=args.bounds)
        points = fit_cvar(x_train, y_train, trainer, cfg).predict(x_test)
        lines.append("point")
        lines.extend(repr(float(p)) for p in points)
    else:
        k = args.calibration_size or max(3, len(y_train) // 5)
        if args.bounds:
            model = fit_bounded(x_train, y_train, trainer, IvarConfig(k, bounds=args.bounds, split_seed=args.seed))
        else:
            model = fit_unbounded(x_train, y_train, trainer,
                                  IvarConfig(k, winsor_m=_resolve_m(args, k), split_seed=args.seed))
        lower, upper = model.predict_intervals(x_test)
        y_low, y_high = model.anchors
        points = np.atleast_1d(merge(y_low, y_high, lower, upper, args.merge))
        lines.append("lower,upper,point")
        lines.extend(",".join(repr(float(v)) for v in trio) for trio in zip(lower, upper, points))
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _bench_config(args) -> BenchConfig:
    values: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values = json.load(fh)
        known = {f.name for f in fields(BenchConfig)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    overrides = {
        "scenarios": args.scenario, "sizes": args.n, "sigmas": args.sigma, "bases": args.base,
        "folds": args.folds, "merge_mode": args.merge, "trials": args.trials, "base_seed": args.seed,
    }
    if args.method:
        overrides["methods"] = [m if m != "cvar" else f"cvar-m{args.m}" for m in args.method]
    if args.full:
        overrides["trials"] = FULL_TRIALS
    values.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("scenarios", "sizes", "sigmas", "bases", "methods"):
        if key in values:
            v = values[key]
            values[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
    return BenchConfig(**values)


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    log.info("running %d trials per cell", cfg.trials)
    report = run_bench(cfg, jobs=args.jobs)
    _write(render_report(report, args.format), args.out)
    return 0


def cmd_probe(args) -> int:
    rng = np.random.default_rng(args.seed)
    summary = run_probe_suite(rng, bags=args.bags, max_k=args.max_k, m=args.m)
    lines = [
        f"auto-calibration: {summary.bags} bags, {summary.groups} selector groups, "
        f"max |mean - S| = {summary.max_calibration_error:.3g}",
        f"selector in interval: {summary.selector_violations} violations",
        f"interval ordering: {summary.ordering_violations} violations",
    ]
    for m in args.coverage_m:
        freq, bound = coverage_probe(rng, draws=args.draws, k=args.k, m=m)
        verdict = "ok" if freq <= bound else "FAIL"
        lines.append(f"coverage k={args.k} m={m}: P(Y != Y') = {freq:.5f} <= {bound:.5f} {verdict}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vareg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV (training rows first)")
    g.add_argument("--scenario", choices=SCENARIOS, required=True)
    g.add_argument("--n", type=int, default=10000)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--sigma", type=float, default=3.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("calibrate", help="fit an IVAR or CVAR on a training CSV and predict a test CSV")
    c.add_argument("--train", required=True)
    c.add_argument("--test", required=True)
    c.add_argument("--label-column", default="label")
    c.add_argument("--base", choices=("ols", "ridge", "knn"), default="ols")
    c.add_argument("--method", choices=("none", "ivar", "cvar"), default="ivar",
                   help="none/ivar: intervals from one IVAR; cvar: merged cross estimates")
    c.add_argument("--calibration-size", type=int)
    mgroup = c.add_mutually_exclusive_group()
    # Default stays None so argparse can tell an explicit "--m 1" apart from no flag.
    mgroup.add_argument("--m", type=int, help="winsorization depth (default 1)")
    mgroup.add_argument("--epsilon", type=float)
    mgroup.add_argument("--bounds", type=_bounds, help="LO,HI; write --bounds=-1,1 when LO is negative")
    c.add_argument("--folds", type=int, default=10)
    c.add_argument("--merge", choices=("exact", "approx"), default="approx")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    b = sub.add_parser("bench", help="repeated-trial RMSE table")
    b.add_argument("--config", help="JSON object with BenchConfig fields; flags override it")
    b.add_argument("--scenario", action="append", choices=SCENARIOS)
    b.add_argument("--n", action="append", type=int)
    b.add_argument("--sigma", action="append", type=float)
    b.add_argument("--base", action="append", choices=("ols", "ridge", "knn"))
    b.add_argument("--method", action="append",
                   help="none, cvar (uses --m) or cvar-m<N>; repeatable")
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--folds", type=int)
    b.add_argument("--merge", choices=("exact", "approx"))
    b.add_argument("--trials", type=int)
    b.add_argument("--full", action="store_true", help=f"run {FULL_TRIALS} trials")
    b.add_argument("--seed", type=int)
    b.add_argument("--format", choices=("csv", "md"), default="csv")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    p = sub.add_parser("probe", help="validity checks: auto-calibration and coverage")
    p.add_argument("--bags", type=int, default=200)
    p.add_argument("--max-k", type=int, default=8)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--k", type=int, default=99)
    p.add_argument("--coverage-m", type=int, action="append", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "coverage_m", "unset") is None:
        args.coverage_m = [1, 10]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        parser.exit(2, f"vareg: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
