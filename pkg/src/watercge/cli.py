"""Command-line entry point: ``watercge sam|run|sensitivity``.

Exit codes: 0 success, 2 input contract violation, 3 solver failure,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .accounts import aggregate, load_aggregation_map, load_sam, save_sam, validate
from .balance import balance, write_report
from .calibrate import write_calibration_report
from .config import ModelConfig, load_config
from .errors import ContractError, InvariantError, SolverError
from .scenarios import (
    build_model, build_sam, scenario_specs, sensitivity_rainfed, sensitivity_valuation, run_sweep, write_sweep,
)
from .solve import SolverConfig

log = logging.getLogger("watercge")

EXIT_OK, EXIT_CONTRACT, EXIT_SOLVER, EXIT_INTERNAL = 0, 2, 3, 4


def parse_grid(text: str) -> list[float]:
    """Shock grid in percent: ``-40..40`` (step 10), ``-40..40:5``, ``0`` or ``-40,0,40``."""
    text = text.strip()
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            lo, hi = (float(v) for v in span.split(".."))
            step = float(step) if step else 10.0
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(round((hi - lo) / step))
            if abs(lo + n * step - hi) > 1e-9 * max(1.0, abs(hi)):
                raise ValueError
            pct = [lo + k * step for k in range(n + 1)]
        else:
            pct = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractError(f"bad grid {text!r}; use lo..hi[:step] in percent, or a comma list") from None
    if not pct:
        raise ContractError("empty grid")
    # round to suppress binary noise from the percent conversion
    return [round(p / 100.0, 12) + 0.0 for p in pct]


def _fix_grid_argv(argv: list[str]) -> list[str]:
    # let "--grid -40..40" through argparse, which would read the value as a flag
    out, k = [], 0
    while k < len(argv):
        if argv[k] == "--grid" and k + 1 < len(argv):
            out.append(f"--grid={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def _config(args) -> ModelConfig:
    cfg = load_config(args.config)
    if getattr(args, "sam", None):
        cfg = cfg.model_copy(update={"data": cfg.data.model_copy(update={"sam": str(Path(args.sam).resolve())})})
    return cfg


def _solver(args) -> SolverConfig:
    return SolverConfig(jacobian=args.jacobian, trace=args.trace)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- sam ------------------------------------------------------------------------------

def cmd_sam_validate(args) -> int:
    sam = load_sam(args.sam)
    bad = validate(sam)
    for d in bad:
        print(f"{d.account}: row {d.row_sum!r} col {d.col_sum!r} gap {d.gap!r}")
    if args.out:
        with open(_out(args) / "discrepancies.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["account", "row_sum", "col_sum", "gap"])
            for d in bad:
                w.writerow([d.account, repr(d.row_sum), repr(d.col_sum), repr(d.gap)])
    if bad:
        print(f"{len(bad)} unbalanced account(s)", file=sys.stderr)
        return EXIT_CONTRACT
    print(f"balanced: {len(sam)} accounts")
    return EXIT_OK


def cmd_sam_balance(args) -> int:
    sam = load_sam(args.sam)
    outcome = balance(sam)
    out = _out(args)
    save_sam(outcome.sam, out / "balanced_sam.csv")
    write_report(outcome, out / "balance_report.csv")
    print(f"balanced with total adjustment {outcome.objective!r} over {len(outcome.deltas)} cell(s)")
    return EXIT_OK


def cmd_sam_aggregate(args) -> int:
    sam = load_sam(args.sam)
    amap = load_aggregation_map(args.map)
    agg = aggregate(sam, amap)
    out = _out(args)
    save_sam(agg, out / "aggregated_sam.csv")
    print(f"aggregated {len(sam)} -> {len(agg)} accounts")
    return EXIT_OK


def cmd_sam_augment(args) -> int:
    cfg = _config(args)
    sam, price = build_sam(cfg, irrigated_share=args.irrigated_share, valuation=args.valuation)
    out = _out(args)
    save_sam(sam, out / "calibration_sam.csv")
    with open(out / "water_prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["industry", "price"])
        for i, p in sorted(price.items()):
            w.writerow([i, repr(p)])
    print(f"augmented SAM: {len(sam)} accounts, factors {sam.members('F')}")
    return EXIT_OK


# -- run ------------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args)
    specs = scenario_specs(cfg, parse_grid(args.grid) if args.grid else None)
    names = sorted(specs) if args.scenario == "all" else [args.scenario]
    unknown = [n for n in names if n not in specs]
    if unknown:
        raise ContractError(f"unknown scenario {unknown[0]!r}; choose from {sorted(specs)} or 'all'")
    out = _out(args)
    models = {}
    status = EXIT_OK
    for name in names:
        spec = specs[name]
        if spec.water_mobile not in models:
            cm = build_model(cfg, water_mobile=spec.water_mobile)
            models[spec.water_mobile] = cm
            tag = "B" if spec.water_mobile else "A"
            write_calibration_report(cm, out / f"calibration_{tag}.csv")
        res = run_sweep(models[spec.water_mobile], spec, _solver(args), parallel=args.parallel > 1)
        root = write_sweep(res, out, trace=args.trace)
        s = res.summary()
        print(f"{name}: {len(res.solved)}/{len(res.points)} points solved -> {root}")
        for k, v in s.items():
            print(f"  {k} = {v:.6g}" if isinstance(v, float) else f"  {k} = {v}")
        if res.failures:
            status = EXIT_SOLVER
    return status


# -- sensitivity ----------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractError(f"bad number list {text!r}") from None


def cmd_sensitivity(args) -> int:
    cfg = _config(args)
    grid = parse_grid(args.grid) if args.grid else None
    out = _out(args)
    if args.kind == "rainfed":
        shares = _float_list(args.values) if args.values else list(cfg.scenarios.rainfed_shares)
        rows, _ = sensitivity_rainfed(cfg, shares, grid, _solver(args))
        path = out / "sensitivity_rainfed.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["irrigated_share", "dw", "GDP", "GDP_baseline", "delta_GDP"])
            for r in rows:
                w.writerow([repr(r.share), repr(r.shock), repr(r.gdp), repr(r.baseline_gdp), repr(r.delta)])
    else:
        mults = _float_list(args.values) if args.values else list(cfg.scenarios.valuation_multipliers)
        rows, _ = sensitivity_valuation(cfg, mults, grid, _solver(args))
        path = out / "sensitivity_valuation.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric"] + [f"n={r.multiplier:g}" for r in rows])
            w.writerow(["GDP"] + [repr(r.delta_gdp) for r in rows])
            w.writerow(["Y" + cfg.closure.hh] + [repr(r.delta_yhh) for r in rows])
            w.writerow(["baseline_GDP"] + [repr(r.baseline_gdp) for r in rows])
            w.writerow(["baseline_Y" + cfg.closure.hh] + [repr(r.baseline_yhh) for r in rows])
    print(f"wrote {path}")
    if any(not np.isfinite(getattr(r, "delta", 0.0)) for r in rows):
        return EXIT_SOLVER
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="model configuration TOML (default: bundled fixture)")
    common.add_argument("--out", default="runs", help="output directory (default: runs)")
    common.add_argument("--trace", action="store_true", help="log Newton iterations")
    common.add_argument("--jacobian", choices=("analytic", "fd"), default="analytic")
    common.add_argument("--parallel", type=int, default=1, metavar="N",
                        help="solve the two half-sweeps concurrently when N > 1")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="watercge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sam = sub.add_parser("sam", help="SAM utilities").add_subparsers(dest="action", required=True)
    v = sam.add_parser("validate", parents=[common], help="report unbalanced accounts")
    v.add_argument("--sam", required=True)
    v.set_defaults(func=cmd_sam_validate, out=None)
    b = sam.add_parser("balance", parents=[common], help="balance transfer cells by linear programming")
    b.add_argument("--sam", required=True)
    b.set_defaults(func=cmd_sam_balance)
    a = sam.add_parser("aggregate", parents=[common], help="merge detailed accounts via a map")
    a.add_argument("--sam", required=True)
    a.add_argument("--map", required=True)
    a.set_defaults(func=cmd_sam_aggregate)
    g = sam.add_parser("augment", parents=[common], help="add water and natural-resource factors")
    g.add_argument("--sam")
    g.add_argument("--irrigated-share", type=float)
    g.add_argument("--valuation", type=float, default=1.0)
    g.set_defaults(func=cmd_sam_augment)

    r = sub.add_parser("run", parents=[common], help="run a water-shock scenario sweep")
    r.add_argument("scenario", help="A1..A5, B or all")
    r.add_argument("--sam")
    r.add_argument("--grid", help="shock grid in percent, e.g. -40..40 or -40..40:5")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sensitivity", parents=[common], help="irrigated-share or valuation sensitivity")
    s.add_argument("kind", choices=("rainfed", "valuation"))
    s.add_argument("--values", help="comma list of irrigated shares or valuation multipliers")
    s.add_argument("--sam")
    s.add_argument("--grid", help="shock grid in percent")
    s.set_defaults(func=cmd_sensitivity)
    return p


def main(argv=None) -> int:
    argv = _fix_grid_argv(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if (args.trace or args.verbose) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ContractError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONTRACT
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        if err.report is not None:
            print(err.report.summary(), file=sys.stderr)
        return EXIT_SOLVER
    except (InvariantError, AssertionError) as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
