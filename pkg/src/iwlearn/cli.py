"""Command-line front end.

Subcommands: ``train``, ``sweep``, ``active``, ``report`` and ``synth``.
Exit codes: 0 success, 2 bad flags, 3 data errors, 4 divergence.
"""

import argparse
import json
import math
import os
import sys

from . import data, harness
from .active import ActiveConfig
from .learner import (DivergenceError, LearnerConfig, RegConfig, Schedule,
                      UpdateRule, evaluate, train_pass)
from .losses import LabelError, LossKind

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _words(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="training file")
    p.add_argument("--test", required=True, help="test file")
    p.add_argument("--binary-labels", action="store_true",
                   help="map labels in {-1,+1} to {0,1} on load")
    p.add_argument("--quantile-tau", type=float, default=0.5)
    p.add_argument("--clip-eps", type=float, default=1e-6,
                   help="prediction clip for the logarithmic losses")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="l2 strength")
    p.add_argument("--boundary", type=float, default=None,
                   help="decision threshold (default: 0, or 0.5 for {0,1}-label losses)")


def _add_grid_flags(p):
    p.add_argument("--losses", type=_words, default=("squared",))
    p.add_argument("--rules", type=_words, default=("invariant",))
    p.add_argument("--mus", type=_floats, default=harness.DEFAULT_MUS)
    p.add_argument("--taus", type=_floats, default=harness.DEFAULT_TAUS)
    p.add_argument("--powers", type=_floats, default=harness.DEFAULT_POWERS)
    p.add_argument("--out", required=True, help="CSV records file (JSON sidecar written next to it)")


def build_parser():
    parser = argparse.ArgumentParser(prog="iwlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one pass and evaluate")
    _add_data_flags(p)
    p.add_argument("--loss", default="squared")
    p.add_argument("--rule", default="invariant", choices=[r.value for r in UpdateRule])
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--power", type=float, default=0.5)
    p.add_argument("--out", help="CSV record file (default: stdout)")
    p.add_argument("--model", help="write the trained weights here as JSON")

    p = sub.add_parser("sweep", help="one run per schedule grid cell")
    _add_data_flags(p)
    _add_grid_flags(p)

    p = sub.add_parser("active", help="active learning over schedules x C0 values")
    _add_data_flags(p)
    _add_grid_flags(p)
    p.add_argument("--c0s", type=_floats, default=harness.DEFAULT_C0S)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-importance", type=float, default=1e6)

    p = sub.add_parser("report", help="robustness, frontier and label-complexity summaries")
    p.add_argument("--passive", required=True, help="records from `sweep`")
    p.add_argument("--active", help="records from `active`")
    p.add_argument("--tol", type=float, default=0.001)
    p.add_argument("--target-acc", type=float,
                   help="accuracy for the label-complexity ratio (default: best passive - 0.005)")
    p.add_argument("--out", help="JSON report (default: stdout)")

    p = sub.add_parser("synth", help="write a synthetic train/test pair")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--n", type=int, default=20_000)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--importance-values", type=_floats, default=(1.0,))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    return parser


def _kind(name, args):
    try:
        kind = LossKind.parse(name)
    except ValueError as err:
        raise UsageError(str(err)) from None
    if ":" in name:
        return kind
    try:
        return LossKind(kind.name, quantile_tau=args.quantile_tau, clip_eps=args.clip_eps)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _rule(name):
    try:
        return UpdateRule(name)
    except ValueError:
        raise UsageError(f"unknown rule {name!r}") from None


def _load(args):
    train = data.load_dataset(args.data)
    test = data.load_dataset(args.test)
    if args.binary_labels:
        train, test = data.to_binary_labels(train), data.to_binary_labels(test)
    return train, test


def _check_labels(kinds, *datasets):
    for kind in kinds:
        for ds in datasets:
            for i, ex in enumerate(ds):
                try:
                    kind.check_label(ex.label)
                except LabelError as err:
                    raise LabelError(f"example {i}: {err}") from None


def _grid(args):
    try:
        return harness.SweepGrid(
            mus=args.mus, taus=args.taus, powers=args.powers,
            rules=tuple(_rule(r) for r in args.rules),
            losses=tuple(_kind(k, args) for k in args.losses))
    except ValueError as err:
        raise UsageError(str(err)) from None


def _boundary(args, kinds):
    if args.boundary is not None:
        return args.boundary
    bounds = {k.boundary for k in kinds}
    if len(bounds) > 1:
        raise UsageError("losses with different label sets need an explicit --boundary")
    return bounds.pop()


def _config_dict(args):
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(vars(args).items())}


def cmd_train(args):
    kind = _kind(args.loss, args)
    try:
        cfg = LearnerConfig(kind, _rule(args.rule), Schedule(args.mu, args.tau, args.power),
                            RegConfig(args.lam))
    except ValueError as err:
        raise UsageError(str(err)) from None
    if args.model and args.out and (os.path.abspath(args.model)
                                    == os.path.abspath(harness.sidecar_path(args.out))):
        raise UsageError("--model would overwrite the JSON sidecar of --out")
    train, test = _load(args)
    _check_labels([kind], train, test)
    boundary = _boundary(args, [kind])
    model, pv = train_pass(train, cfg)
    acc, loss = evaluate(model, test, kind, boundary)
    record = harness.RunRecord.for_config(cfg, test_accuracy=acc, test_loss=loss,
                                          pv_loss=pv, labels=len(train))
    if args.model:
        with open(args.model, "w", encoding="utf-8") as fh:
            json.dump({"config": _config_dict(args),
                       "weights": model.dense_weights().tolist()}, fh)
            fh.write("\n")
    if args.out:
        harness.write_records(args.out, [record], _config_dict(args))
    else:
        harness.write_records_to(sys.stdout, [record])
    return EXIT_OK


def cmd_sweep(args):
    grid = _grid(args)
    train, test = _load(args)
    _check_labels(grid.losses, train, test)
    try:
        reg = RegConfig(args.lam)
    except ValueError as err:
        raise UsageError(str(err)) from None
    records = harness.run_sweep(train, test, grid, reg, _boundary(args, grid.losses))
    harness.write_records(args.out, records, _config_dict(args))
    return EXIT_OK


def cmd_active(args):
    grid = _grid(args)
    try:
        reg = RegConfig(args.lam)
        for c0 in args.c0s:
            ActiveConfig(c0, max_importance=args.max_importance)
    except ValueError as err:
        raise UsageError(str(err)) from None
    if not args.c0s:
        raise UsageError("--c0s is empty")
    train, test = _load(args)
    _check_labels(grid.losses, train, test)
    records = harness.run_active_sweep(train, test, grid, args.c0s, args.seed,
                                       _boundary(args, grid.losses), args.max_importance, reg)
    harness.write_records(args.out, records, _config_dict(args))
    return EXIT_OK


def _finite(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def build_report(passive, active=None, tol=0.001, target_acc=None):
    """Summaries keyed by ``loss/rule``; NaN and inf become null."""
    report = {"near_optimal_fraction": {}, "best_accuracy": {}}
    for (loss, rule), recs in sorted(harness.group_by(passive, "loss", "rule").items()):
        key = f"{loss}/{rule}"
        ok = [r.test_accuracy for r in recs if not r.diverged]
        report["near_optimal_fraction"][key] = _finite(harness.near_optimal_fraction(recs, tol))
        report["best_accuracy"][key] = max(ok) if ok else None
    if active is None:
        return report
    ok = [r.test_accuracy for r in passive if not r.diverged]
    if target_acc is None and ok:
        target_acc = max(ok) - 0.005
    report["target_accuracy"] = target_acc
    report["frontier"] = {}
    report["label_complexity_ratio"] = {}
    for (loss, rule), recs in sorted(harness.group_by(active, "loss", "rule").items()):
        key = f"{loss}/{rule}"
        report["frontier"][key] = [list(pt) for pt in
                                   harness.pareto_frontier(harness.frontier_points(recs))]
        same_loss = [r for r in passive if r.loss == loss]
        ratio = (harness.label_complexity_ratio(same_loss, recs, target_acc)
                 if target_acc is not None else None)
        report["label_complexity_ratio"][key] = ratio
    return report


def cmd_report(args):
    passive = harness.read_records(args.passive)
    active = harness.read_records(args.active) if args.active else None
    report = build_report(passive, active, args.tol, args.target_acc)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args):
    try:
        spec = data.SynthSpec(args.dim, args.n, args.margin, args.label_noise,
                              args.importance_values, args.seed)
        train, test = data.split(data.synth_generate(spec), args.test_fraction, args.seed)
    except ValueError as err:
        raise UsageError(str(err)) from None
    data.write_dataset(args.train_out, train)
    data.write_dataset(args.test_out, test)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "active": cmd_active,
            "report": cmd_report, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)   # exits with 2 on bad flags
    try:
        return COMMANDS[args.command](args)
    except UsageError as err:
        parser.error(str(err))
    except DivergenceError as err:
        print(f"iwlearn: diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (data.ParseError, LabelError, OSError, KeyError, ValueError) as err:
        print(f"iwlearn: data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
