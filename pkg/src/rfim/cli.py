"""Command-line entry point: ``rfim {train,grid,verify,whiten}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiment as ex
from .verify import SUITES, report, verify
from .whitening import Whitener


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--method", choices=ex.LOGISTIC_METHODS + ex.MLP_METHODS)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)


def _config(args):
    cfg = ex.ExperimentConfig.from_json(args.config) if args.config else ex.ExperimentConfig()
    overrides = dict(seed=args.seed, method=args.method, epochs=args.epochs,
                     batch_size=args.batch_size, lr=args.lr)
    if getattr(args, "repeats", None) is not None:
        overrides["repeats"] = args.repeats
    return cfg.replace(**overrides)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(args):
    cfg = _config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    rec = ex.run(cfg)
    ex.emit_curves(rec, args.out_dir / "curve.csv", cfg.smooth_window)
    summary = rec.summary()
    if rec.iterations:
        summary["tau_sharp"] = ex.tau_sharp_ratio(rec, cfg.tau)
    _write_json(args.out_dir / "summary.json", summary)
    status = f"diverged at iteration {rec.diverged_at}" if rec.diverged else f"final_cost={rec.final_cost:.6g}"
    print(f"{cfg.method} seed={rec.seed} iterations={rec.iterations} {status}")
    return 1 if rec.diverged else 0


def cmd_grid(args):
    cfg = _config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    result = ex.run_grid(cfg)
    with open(args.out_dir / "grid.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["lr", "momentum", "final_cost", "valid", "clamped"], lineterminator="\n")
        w.writeheader()
        for row in result.table():
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    for row in result.table():
        flag = "" if row["valid"] else "  INVALID (diverged)"
        print(f"lr={row['lr']:g} momentum={row['momentum']:g} final_cost={row['final_cost']:.6g}{flag}")
    if result.best is None:
        print("no valid grid cell")
        return 1
    best = result.best
    curve = best.mean_costs
    ex.emit_curves(curve, args.out_dir / "best_curve.csv", cfg.smooth_window)
    mean, std = ex.tau_sharp_ratio(curve, cfg.tau)
    _write_json(args.out_dir / "summary.json", {
        "method": cfg.method, "best": best.row(), "tau": cfg.tau,
        "tau_sharp": [mean, std], "repeats": cfg.repeats, "config": cfg.resolved(),
    })
    print(f"best lr={best.lr:g} momentum={best.momentum:g} final_cost={best.final_cost:.6g} "
          f"tau_sharp({cfg.tau:g})={mean:.4g}+-{std:.2g}")
    return 0


def cmd_verify(args):
    results = verify(args.suite or SUITES, nu_scale=args.nu_scale, seed=args.seed or 0)
    print(report(results))
    return 0 if all(r.passed for r in results) else 1


def _load_matrix(path):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path, delimiter=",", ndmin=2)


def cmd_whiten(args):
    if args.input is not None:
        X = _load_matrix(args.input)
    else:
        cfg = _config(args)
        X = ex.load_dataset(cfg, cfg.seed).features
    wh = Whitener(args.threshold).fit(X)
    print(f"features={wh.n_features_in_} retained={wh.n_components_} dropped={wh.n_dropped_}")
    if args.save:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        np.save(args.out_dir / "whitened.npy", wh.transform(X))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rfim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="one seeded run; writes curve.csv and summary.json")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="learning-rate/momentum grid averaged over repeats")
    _add_common(p)
    p.add_argument("--repeats", type=int)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("verify", help="check closed forms against brute-force oracles")
    p.add_argument("--suite", action="append", choices=SUITES)
    p.add_argument("--seed", type=int)
    p.add_argument("--nu-scale", type=float, default=1.0,
                   help="multiply analytic metrics by this factor (mutation check)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("whiten", help="fit a whitener and report the retained dimensions")
    _add_common(p)
    p.add_argument("--input", type=Path, help=".npy or comma-separated feature matrix")
    p.add_argument("--threshold", type=float, default=1e-8)
    p.add_argument("--save", action="store_true", help="write whitened.npy to --out-dir")
    p.set_defaults(func=cmd_whiten)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ex.ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
