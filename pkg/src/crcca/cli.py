"""Command-line interface: ``crcca synth|fit|eval|sweep|rd-solve``.

Data come from ``--x``/``--y`` CSV files or, when both are omitted, from the
synthetic generator (``--n``, ``--data-seed``). Set ``CRCCA_NUM_THREADS`` to
run sweep repetitions in parallel.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_csv, save_csv
from .experiment import ExperimentConfig, evaluate_model, fit_model, load_data, run
from .persistence import load_model, save_model
from .rd_solver import default_support, moments, solve_rd
from .synthgen import QUADRANT_NAMES, generate, quadrant_labels


def _data_args(p):
    p.add_argument("--x", help="CSV with one row per sample for view x")
    p.add_argument("--y", help="CSV with one row per sample for view y")
    p.add_argument("--header", action="store_true", help="CSV files start with a header row")
    p.add_argument("--n", type=int, help="synthetic sample count when --x/--y are omitted (default 5000)")
    p.add_argument("--data-seed", type=int, help="synthetic generator seed (default 0)")


def _method_args(p, lists):
    nargs = "+" if lists else None
    p.add_argument("--config", help="JSON file with experiment settings; flags override it")
    p.add_argument("--method", choices=["linear", "ace", "crcca"])
    p.add_argument("--dims", type=int, help="number of components d")
    p.add_argument("--levels", type=int, nargs=nargs, help="quantizer levels per dimension (crcca)")
    p.add_argument("--k", type=int, nargs=nargs, help="nearest neighbours (ace)")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--ridge", type=float)
    p.add_argument("--seed", type=int, help="split seed; repetition r uses seed + r")


def build_parser():
    parser = argparse.ArgumentParser(prog="crcca", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic paired dataset as x.csv, y.csv and labels.csv")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("fit", help="fit one model on all given rows and save it as JSON")
    _data_args(p)
    _method_args(p, lists=False)
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("eval", help="evaluate a saved model on data")
    _data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="also write the metrics JSON here")

    p = sub.add_parser("sweep", help="repeated split/fit/select/test runs with a report")
    _data_args(p)
    _method_args(p, lists=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--out", help="directory for report.json and curve.csv")

    p = sub.add_parser("rd-solve", help="constrained rate-distortion on a finite source")
    p.add_argument("--prior", required=True,
                   help="CSV rows 'p, v_1, ..., v_m': probability then source point")
    p.add_argument("--support", help="CSV of reproduction points (default: grid over source range +-1 std)")
    p.add_argument("--grid-points", type=int, help="default support points per dimension")
    p.add_argument("--distortion", type=float, required=True, help="bound D on E||U - V||^2")
    p.add_argument("--unconstrained", action="store_true", help="drop the mean/second-moment constraints")
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", help="write the result JSON here")
    return parser


def _config_from_args(args, lists):
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = ExperimentConfig.from_dict(base)
    over = {}
    for name in ("method", "dims", "max_iters", "tol", "ridge", "reps", "levels", "k"):
        val = getattr(args, name, None)
        if val is not None:
            over[name] = val if lists or name not in ("levels", "k") else (val,)
    if args.x is not None or args.y is not None:
        over.update(x_path=args.x, y_path=args.y)
    if args.header:
        over["has_header"] = True
    if args.n is not None:
        over["synth_n"] = args.n
    if args.data_seed is not None:
        over["synth_seed"] = args.data_seed
    if getattr(args, "seed", None) is not None:
        over["split"] = replace(cfg.split, seed=args.seed)
    if getattr(args, "out", None) is not None and lists:
        over["out_dir"] = args.out
    return replace(cfg, **over) if over else cfg


def _dump(obj, out=None):
    text = json.dumps(obj, indent=2)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def cmd_synth(args):
    data = generate(args.n, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(out / "x.csv", data.x, data.x_names)
    save_csv(out / "y.csv", data.y, data.y_names)
    save_csv(out / "labels.csv", quadrant_labels(data.x), ["quadrant"])
    print(f"wrote {data.n} rows to {out / 'x.csv'}, {out / 'y.csv'} and {out / 'labels.csv'} "
          f"(quadrant 0..3 = {', '.join(QUADRANT_NAMES)})")
    return 0


def cmd_fit(args):
    cfg = _config_from_args(args, lists=False)
    data = load_data(cfg)
    param = {"crcca": cfg.levels[0], "ace": cfg.k[0], "linear": None}[cfg.method]
    model = fit_model(cfg.method, data, cfg, param)
    save_model(model, args.out)
    _dump({"method": cfg.method, "model": args.out, "train": evaluate_model(model, data)})
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    cfg = ExperimentConfig(x_path=args.x, y_path=args.y, has_header=args.header,
                           synth_n=args.n or 5000, synth_seed=args.data_seed or 0)
    _dump(evaluate_model(model, load_data(cfg)), args.out)
    return 0


def cmd_sweep(args):
    cfg = _config_from_args(args, lists=True)
    report = run(cfg)
    summary = {"aggregate": report["aggregate"], "errors": report["errors"]}
    if cfg.out_dir:
        summary["report"] = str(Path(cfg.out_dir) / "report.json")
    _dump(summary)
    return 1 if report["errors"] else 0


def cmd_rd_solve(args):
    table, _ = load_csv(args.prior, has_header=args.header)
    if table.shape[1] < 2:
        raise ValueError("prior CSV needs a probability column and at least one coordinate")
    prior, source = table[:, 0], table[:, 1:]
    if abs(prior.sum() - 1.0) > 1e-6:
        raise ValueError(f"prior column sums to {prior.sum():.10g}, expected 1")
    prior = prior / prior.sum()  # absorb CSV rounding
    if args.support:
        support, _ = load_csv(args.support, has_header=args.header)
    else:
        support = default_support(source, prior, args.grid_points)
    sol = solve_rd(prior, source, support, args.distortion, constrained=not args.unconstrained)
    out = sol.as_dict()
    out["support"] = np.asarray(sol.channel.support).tolist()
    mean, second = moments(sol.channel)
    out["mean"], out["second_moment"] = mean.tolist(), second.tolist()
    _dump(out, args.out)
    return 0


COMMANDS = {"synth": cmd_synth, "fit": cmd_fit, "eval": cmd_eval, "sweep": cmd_sweep,
            "rd-solve": cmd_rd_solve}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
