"""Command line surface: a thin client over the service handlers.

Subcommands build the same request models the HTTP endpoints accept,
invoke the shared handlers in process, and deal with files and exit
codes.  Exit status: 0 success, 1 usage or format error, 2 runtime or
numeric failure.  SPM_SEED overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import BENCH_METRICS
from .checks import SUITES
from .io import (
    format_float,
    read_spd_dataset,
    write_history_jsonl,
    write_results,
)
from .service import handlers
from .service import schemas as sc
from .synthetic import TARGET_KINDS

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """Argparse with the exit-code contract: usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _default_seed() -> int:
    return int(os.environ.get("SPM_SEED", "42"))


def build_parser() -> _Parser:
    parser = _Parser(prog="spm",
                     description="Learnable spline-pullback metrics on "
                                 "SPD matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench-adversarial",
                       help="run the alternating-bands benchmark")
    b.add_argument("--metrics", default=",".join(BENCH_METRICS),
                   help="comma-separated list, e.g. sspm,le,lc,pcm0.5")
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--count", type=int, default=1000)
    b.add_argument("--max-epochs", type=int, default=None)
    b.add_argument("--out", default="bench_results.json")

    f = sub.add_parser("fit1d", help="fit the curve to a 1D target")
    f.add_argument("--kind", required=True, choices=TARGET_KINDS)
    f.add_argument("--points", type=int, default=256)
    f.add_argument("--lr", type=float, default=0.1)
    f.add_argument("--steps", type=int, default=2000)
    f.add_argument("--grid-degree", type=int, default=3)
    f.add_argument("--grid-size", type=int, default=10)
    f.add_argument("--grid-range", type=float, nargs=2,
                   default=(-15.0, 15.0), metavar=("LO", "HI"))
    f.add_argument("--out", default="fit1d.json")

    e = sub.add_parser("export-spline",
                       help="sample a stored curve to CSV for inspection")
    e.add_argument("model", help="spline model JSON path")
    e.add_argument("--samples", type=int, default=200)
    e.add_argument("--out", default="spline.csv")

    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("suite", help=f"one of {', '.join(sorted(SUITES))}")

    p = sub.add_parser("probe", help="train a probe on SPD dataset files")
    p.add_argument("train", help="training dataset path")
    p.add_argument("test", help="test dataset path")
    p.add_argument("--metric", default="sspm")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--allow-negative-theta", action="store_true")
    p.add_argument("--project", action="store_true",
                   help="clamp non-positive-definite inputs instead of "
                        "rejecting them")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--metric-lr-scale", type=float, default=1.0)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--out", default="probe_results.json")
    p.add_argument("--model-out", default=None)
    p.add_argument("--history-out", default=None)

    g = sub.add_parser("gen-bands",
                       help="generate the alternating-bands dataset files")
    g.add_argument("--count", type=int, default=1000)
    g.add_argument("--dim", type=int, default=4)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--split", type=float, default=0.2,
                   help="test fraction of the stratified split")
    g.add_argument("--train-out", default="bands_train.spd")
    g.add_argument("--test-out", default="bands_test.spd")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return parser


def _cmd_bench(args) -> int:
    tokens = [t for t in args.metrics.split(",") if t]
    from .bench import parse_metric_token
    try:
        for token in tokens:
            parse_metric_token(token)
    except ValueError as exc:
        print(f"invalid metric flag: {exc}", file=sys.stderr)
        return USAGE_ERROR
    req = sc.BenchRequest(metrics=tokens,
                          seed=args.seed if args.seed is not None
                          else _default_seed(),
                          count=args.count, max_epochs=args.max_epochs)
    try:
        resp = handlers.do_bench(req)
    except Exception as exc:
        print(f"benchmark failed: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    write_results(args.out, resp.model_dump())
    for name, score in resp.metrics.items():
        print(f"{name}: train_acc={score.train_acc:.4f} "
              f"test_acc={score.test_acc:.4f}")
    print(f"results written to {args.out}")
    return 0


def _cmd_fit1d(args) -> int:
    lo, hi = args.grid_range
    req = sc.Fit1dRequest(kind=args.kind, points=args.points,
                          learning_rate=args.lr, steps=args.steps,
                          grid=sc.GridSettings(
                              degree=args.grid_degree,
                              interior_intervals=args.grid_size,
                              lo=lo, hi=hi))
    try:
        resp = handlers.do_fit1d(req)
    except ValueError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return USAGE_ERROR
    write_results(args.out, resp.model_dump())
    line = (f"{resp.kind}: sup_error={resp.sup_error:.3e} "
            f"min_derivative={resp.min_derivative:.3e}")
    if resp.derivative_ratio is not None:
        line += f" derivative_ratio={resp.derivative_ratio:.3f}"
    print(line)
    print(f"fit written to {args.out}")
    return 0


def _cmd_export(args) -> int:
    try:
        text = Path(args.model).read_text()
        from .io import loads_spline_model
        grid, params = loads_spline_model(text)
    except (OSError, ValueError) as exc:
        print(f"cannot read model: {exc}", file=sys.stderr)
        return USAGE_ERROR
    req = sc.ExportSplineRequest(
        model=sc.SplineModelPayload(
            degree=grid.degree, interior_intervals=grid.interior_intervals,
            range=(grid.lo, grid.hi), c0_raw=params.c0_raw,
            step_weights=params.step_weights.tolist(),
            min_step=params.min_step),
        samples=args.samples)
    resp = handlers.do_export_spline(req)
    lines = ["log_lambda,f_value,f_derivative"]
    for row in resp.rows:
        lines.append(",".join(format_float(v) for v in
                              (row.log_lambda, row.f_value,
                               row.f_derivative)))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"{len(resp.rows)} samples written to {args.out}")
    return 0


def _cmd_check(args) -> int:
    try:
        resp = handlers.do_check(sc.CheckRequest(suite=args.suite))
    except KeyError as exc:
        print(f"unknown suite: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    width = max(len(c.name) for c in resp.checks)
    for c in resp.checks:
        flag = "pass" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {c.value:.3e} vs {c.threshold:.3e}  "
              f"[{flag}]")
    print(f"suite {resp.suite}: {'pass' if resp.passed else 'FAIL'}")
    return 0 if resp.passed else USAGE_ERROR


def _cmd_probe(args) -> int:
    try:
        train_text = Path(args.train).read_text()
        test_text = Path(args.test).read_text()
        train_ds = read_spd_dataset(args.train, project=args.project)
        test_ds = read_spd_dataset(args.test, project=args.project)
    except (OSError, ValueError) as exc:
        print(f"cannot load dataset: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if train_ds.dim != test_ds.dim:
        print(f"dimension mismatch: train dim {train_ds.dim} vs test dim "
              f"{test_ds.dim}", file=sys.stderr)
        return RUNTIME_ERROR
    if args.theta is not None and args.theta <= 0:
        if not args.allow_negative_theta:
            print("non-positive theta requires --allow-negative-theta",
                  file=sys.stderr)
            return USAGE_ERROR
        print("warning: non-positive theta bounds the map's image from "
              "above; inverse operations reject values beyond it",
              file=sys.stderr)
    req = sc.ProbeRequest(
        train_text=train_text, test_text=test_text, metric=args.metric,
        theta=args.theta, allow_negative_theta=args.allow_negative_theta,
        project=args.project,
        seed=args.seed if args.seed is not None else _default_seed(),
        config=sc.TrainSettings(metric_lr_scale=args.metric_lr_scale,
                                max_epochs=args.max_epochs))
    try:
        resp = handlers.do_probe(req)
    except ValueError as exc:
        print(f"probe failed: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:
        print(f"probe failed: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    payload = resp.model_dump()
    history = payload.pop("history")
    model = payload.pop("model")
    write_results(args.out, payload)
    if args.model_out:
        Path(args.model_out).write_text(json.dumps(model, indent=2,
                                                   sort_keys=True) + "\n")
    if args.history_out:
        write_history_jsonl(args.history_out, history)
    score = resp.metrics["probe"]
    print(f"train_acc={score.train_acc:.4f} test_acc={score.test_acc:.4f}")
    print(f"results written to {args.out}")
    return 0


def _cmd_gen_bands(args) -> int:
    from .io import write_spd_dataset
    from .synthetic import canonical_bands, gen_bands_dataset
    from .training import LabeledSpdDataset, stratified_split

    seed = args.seed if args.seed is not None else _default_seed()
    try:
        ds = gen_bands_dataset(args.count, args.dim, canonical_bands(), seed)
    except ValueError as exc:
        print(f"cannot generate dataset: {exc}", file=sys.stderr)
        return USAGE_ERROR
    train_idx, test_idx = stratified_split(ds.labels, args.split, seed)
    write_spd_dataset(args.train_out, LabeledSpdDataset(
        ds.matrices[train_idx], ds.labels[train_idx]))
    write_spd_dataset(args.test_out, LabeledSpdDataset(
        ds.matrices[test_idx], ds.labels[test_idx]))
    print(f"{len(train_idx)} train samples to {args.train_out}, "
          f"{len(test_idx)} test samples to {args.test_out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    commands = {
        "bench-adversarial": _cmd_bench,
        "fit1d": _cmd_fit1d,
        "export-spline": _cmd_export,
        "check": _cmd_check,
        "probe": _cmd_probe,
        "gen-bands": _cmd_gen_bands,
        "serve": _cmd_serve,
    }
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
