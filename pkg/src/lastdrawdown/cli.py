"""
Command-line front end.

Exit codes: 0 success / nothing flagged, 2 statistical flag (or a failed
simulation comparison), 1 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import inference as inf
from . import montecarlo as mc
from . import pnl_io
from .densities import ProcessSpec, depth_tail_prob, length_tail_prob
from .errors import DomainError, InsufficientSampleError, PnlDataError, QuadratureError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2

TAIL_LEVELS = (0.5, 0.25, 0.1, 0.05)


class UsageError(Exception):
    pass


# -- formatting --------------------------------------------------------------


def _num(x, output: str) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if output == "text":
        return f"{x:.4f}"
    return f"{x:.10g}"


def _json_value(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


class Emitter:
    """Writes rows as an aligned text table, CSV, or JSON lines."""

    def __init__(self, output: str, stream=None):
        self.output = output
        self.stream = stream or sys.stdout

    def table(self, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        rows = list(rows)
        if self.output == "jsonl":
            for row in rows:
                obj = {k: _json_value(v) for k, v in zip(header, row)}
                self.stream.write(json.dumps(obj) + "\n")
            return
        if self.output == "csv":
            writer = csv.writer(self.stream, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_num(v, "csv") if not isinstance(v, str) else v for v in row])
            return
        cells = [[_num(v, "text") if not isinstance(v, str) else v for v in row] for row in rows]
        widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
                  for i, h in enumerate(header)]
        self.stream.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
        for r in cells:
            self.stream.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")

    def text(self, message: str) -> None:
        if self.output == "text":
            self.stream.write(message.rstrip("\n") + "\n")


def _warn_unusual_sharpe(sharpe: float) -> None:
    if sharpe <= 0.0:
        print(f"warning: unusual Sharpe ratio {sharpe:g} <= 0", file=sys.stderr)


def _check_significance(p: float) -> None:
    if not (0.0 < p < 0.5):
        raise UsageError(f"--significance must lie in (0, 0.5), got {p}")


# -- subcommands -------------------------------------------------------------


def report_to_dict(report: inf.TestReport) -> Dict[str, object]:
    obs = report.observation

    def upd(u: Optional[inf.SharpeUpdate]):
        return (None, None) if u is None else (u.sharpe, u.status.value)

    sl, sl_status = upd(report.sharpe_from_length)
    sd, sd_status = upd(report.sharpe_from_depth)
    return {
        "sharpe": report.spec.sharpe,
        "horizon": report.spec.horizon,
        "significance": report.significance,
        "length": obs.length,
        "depth": obs.depth,
        "source": obs.source.value,
        "length_p_value": report.length_p_value,
        "depth_p_value": report.depth_p_value,
        "length_flagged": report.length_flagged,
        "depth_flagged": report.depth_flagged,
        "sharpe_from_length": sl,
        "sharpe_from_length_status": sl_status,
        "sharpe_from_depth": sd,
        "sharpe_from_depth_status": sd_status,
        "verdict_text": report.verdict_text,
    }


def _observation_from_args(args) -> tuple:
    """Return (observation, horizon) from either --file or the manual flags."""
    manual = args.length is not None or args.length_days is not None or args.depth is not None
    if args.file and manual:
        raise UsageError("give either --file or --length/--depth, not both")
    if args.file:
        series = pnl_io.load_csv(args.file, frequency=args.frequency)
        norm = pnl_io.normalize(series, min_rows=args.min_rows, vol_window=args.vol_window)
        obs = pnl_io.extract_drawdown(norm)
        return obs, args.horizon if args.horizon is not None else obs.horizon
    if args.length is not None and args.length_days is not None:
        raise UsageError("give --length or --length-days, not both")
    length = args.length
    if args.length_days is not None:
        length = args.length_days / args.frequency
    if length is None or args.depth is None:
        raise UsageError("test needs --file, or both a length and --depth")
    if args.horizon is None:
        raise UsageError("--horizon is required with manual observations")
    return inf.DrawdownObservation(length, args.depth, inf.Source.MANUAL), args.horizon


def cmd_test(args, out: Emitter) -> int:
    _check_significance(args.significance)
    obs, horizon = _observation_from_args(args)
    spec = ProcessSpec(args.sharpe, horizon)
    _warn_unusual_sharpe(spec.sharpe)
    report = inf.run_test(spec, obs, args.significance)
    fields = report_to_dict(report)
    if out.output == "text":
        out.text(
            f"Drawdown test: SR* = {spec.sharpe:.4f}, T = {spec.horizon:.4f} y, "
            f"significance {report.significance:g} ({obs.source.value} observation)"
        )
        out.text("PnL tested as given (gross or net of costs is up to the input).")
        rows = []
        for name, unit, val in (("length", "years", obs.length), ("depth", "sigma", obs.depth)):
            upd = getattr(report, f"sharpe_from_{name}")
            rows.append([
                name, unit, val, getattr(report, f"{name}_p_value"),
                "FLAGGED" if getattr(report, f"{name}_flagged") else "ok",
                "" if upd is None else (f"{upd.sharpe:.4f}" + (
                    "" if upd.status is inf.UpdateStatus.SOLVED else f" ({upd.status.value})")),
            ])
        out.table(["dimension", "unit", "observed", "p_value", "status", "updated_sharpe"], rows)
        out.text(report.verdict_text)
    else:
        keys = list(fields)
        if out.output == "csv":
            keys.remove("verdict_text")
        out.table(keys, [[fields[k] for k in keys]])
    return EXIT_FLAGGED if report.flagged else EXIT_OK


def cmd_quantile(args, out: Emitter) -> int:
    spec = ProcessSpec(args.sharpe, args.horizon)
    _warn_unusual_sharpe(spec.sharpe)
    rows = [
        ["length", args.tail, inf.length_quantile(spec, args.tail)],
        ["depth", args.tail, inf.depth_quantile(spec, args.tail)],
    ]
    out.table(["quantity", "tail_prob", "value"], rows)
    return EXIT_OK


def cmd_update(args, out: Emitter) -> int:
    _check_significance(args.significance)
    if args.length is None and args.depth is None:
        raise UsageError("update needs --length and/or --depth")
    p = args.significance
    spec = None
    if args.sharpe is not None:
        spec = ProcessSpec(args.sharpe, args.horizon)
        _warn_unusual_sharpe(spec.sharpe)
    rows: List[list] = []
    updates = {}
    for name, observed in (("length", args.length), ("depth", args.depth)):
        if observed is None:
            continue
        if spec is not None:
            tail = (length_tail_prob if name == "length" else depth_tail_prob)(spec, observed)
            flagged = tail < p
        else:
            tail, flagged = None, True
        upd = None
        if flagged:
            solver = inf.update_sharpe_from_length if name == "length" else inf.update_sharpe_from_depth
            upd = solver(observed, args.horizon, p)
            updates[name] = upd
        rows.append([name, observed, tail, flagged,
                     None if upd is None else upd.sharpe,
                     "" if upd is None else upd.status.value, ""])
    if len(updates) == 2:
        conservative = min(updates, key=lambda k: updates[k].sharpe)
        for row in rows:
            if row[0] == conservative:
                row[-1] = "conservative"
    out.table(["dimension", "observed", "p_value", "flagged", "updated_sharpe", "status", "note"],
              rows)
    return EXIT_FLAGGED if updates and spec is not None else EXIT_OK


def cmd_corridor(args, out: Emitter) -> int:
    spec = ProcessSpec(args.sharpe, args.horizon)
    _warn_unusual_sharpe(spec.sharpe)
    res = inf.conditional_corridor(spec, args.depth_star, args.lower_tail, args.upper_tail)
    out.table(["depth_star", "lower", "upper", "coverage"],
              [[res.depth_star, res.lower, res.upper, res.coverage]])
    return EXIT_OK


def _sr_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not (step > 0 and hi >= lo > 0):
        raise UsageError("Sharpe grid needs 0 < --sr-min <= --sr-max and --step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def cmd_curves(args, out: Emitter) -> int:
    grid = _sr_grid(args.sr_min, args.sr_max, args.step)
    if args.mode in ("length-quantile", "depth-quantile"):
        solve = inf.length_quantile if args.mode == "length-quantile" else inf.depth_quantile
        rows = [[sr, solve(ProcessSpec(sr, args.horizon), args.tail)] for sr in grid]
        out.table(["sharpe", "value"], rows)
        return EXIT_OK
    if not args.depth_star:
        raise UsageError("corridor modes need --depth-star")
    rows = []
    for sr in grid:
        spec = ProcessSpec(sr, args.horizon)
        for d in args.depth_star:
            res = inf.conditional_corridor(spec, d, args.tail, args.tail)
            rows.append([sr, d, res.upper if args.mode == "corridor-upper" else res.lower])
    out.table(["sharpe", "depth", "value"], rows)
    return EXIT_OK


def simulation_checks(sample: mc.EmpiricalSample, sigmas: float, allowance: float,
                      bias_allowance: bool = True):
    """
    Analytic vs empirical tail rows; each row ends with a pass flag. Depth rows
    also allow for the grid-maximum bias unless ``bias_allowance`` is off.
    """
    spec = sample.config.spec
    steps_per_year = sample.config.steps_per_year
    rows = []
    for mode in ("length", "depth"):
        solve = inf._length_quantile if mode == "length" else inf._depth_quantile
        for p in TAIL_LEVELS:
            threshold = solve(spec, p)
            freq, se = mc.empirical_tail(sample, mode, threshold)
            tol = sigmas * se + allowance
            if mode == "depth" and bias_allowance:
                tol += mc.depth_bias_allowance(spec, threshold, steps_per_year)
            rows.append([mode, threshold, p, freq, se, tol, abs(freq - p) <= tol])
    ks = None
    if spec.sharpe == 0.0:
        dist = mc.arcsine_ks_distance(sample)
        tol = mc.ks_tolerance(sample) if (sigmas > 0 or allowance > 0) else 0.0
        ks = ["length-ks", None, None, dist, None, tol, dist <= tol]
        rows.append(ks)
    return rows


def cmd_simulate(args, out: Emitter) -> int:
    spec = ProcessSpec(args.sharpe, args.horizon)
    config = mc.SimConfig(spec, n_paths=args.paths, seed=args.seed,
                          steps_per_year=args.steps_per_year,
                          antithetic=not args.no_antithetic)
    sample = mc.simulate(config, workers=args.workers)
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            fh.write(sample.to_csv())
    rows = simulation_checks(sample, args.sigmas, args.allowance,
                             bias_allowance=not args.no_bias_allowance)
    out.text(
        f"Simulation check: SR = {spec.sharpe:g}, T = {spec.horizon:g} y, "
        f"{config.n_paths} paths, {config.steps_per_year} steps/year, seed {config.seed}"
    )
    out.table(["check", "threshold", "analytic_tail", "empirical_tail", "std_error",
               "tolerance", "pass"], rows)
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_FLAGGED


# -- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not (0 <= value < 2 ** 64):
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; 2 is reserved for flags here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lastdrawdown",
        description="Last-drawdown length/depth tests for an assumed Sharpe ratio.",
    )
    common = _Parser(add_help=False)
    common.add_argument("--output", choices=("text", "csv", "jsonl"),
                        help="default: csv for curves, text otherwise")
    common.add_argument("--frequency", type=_positive_int,
                        default=pnl_io.TRADING_DAYS_PER_YEAR, help="trading days per year")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common], help="test an observed drawdown")
    p.add_argument("--sharpe", type=float, required=True)
    p.add_argument("--horizon", type=float, help="years (defaults to the file's span)")
    p.add_argument("--length", type=float, help="drawdown length in years")
    p.add_argument("--length-days", type=float, help="drawdown length in trading days")
    p.add_argument("--depth", type=float, help="drawdown depth in annual sigma units")
    p.add_argument("--file", help="CSV with header date,pnl (cumulative PnL)")
    p.add_argument("--significance", type=float, default=inf.DEFAULT_SIGNIFICANCE)
    p.add_argument("--min-rows", type=_positive_int, default=pnl_io.MIN_ROWS_FOR_NORMALIZATION)
    p.add_argument("--vol-window", type=_positive_int,
                   help="estimate volatility on the last N daily increments only")
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("quantile", parents=[common], help="5%%-type length and depth thresholds")
    p.add_argument("--sharpe", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--tail", type=float, default=inf.DEFAULT_SIGNIFICANCE)
    p.set_defaults(handler=cmd_quantile)

    p = sub.add_parser("update", parents=[common], help="Sharpe ratio consistent with a drawdown")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--sharpe", type=float, help="assumed Sharpe; only flagged dimensions are updated")
    p.add_argument("--length", type=float)
    p.add_argument("--depth", type=float)
    p.add_argument("--significance", type=float, default=inf.DEFAULT_SIGNIFICANCE)
    p.set_defaults(handler=cmd_update)

    p = sub.add_parser("corridor", parents=[common], help="length band given a depth")
    p.add_argument("--sharpe", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--depth-star", type=float, required=True)
    p.add_argument("--lower-tail", type=float, default=0.05)
    p.add_argument("--upper-tail", type=float, default=0.05)
    p.set_defaults(handler=cmd_corridor)

    p = sub.add_parser("curves", parents=[common], help="quantile/corridor curves as CSV")
    p.add_argument("--mode", required=True,
                   choices=("length-quantile", "depth-quantile", "corridor-upper", "corridor-lower"))
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--sr-min", type=float, default=0.25)
    p.add_argument("--sr-max", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.25)
    p.add_argument("--tail", type=float, default=0.05)
    p.add_argument("--depth-star", type=float, nargs="+")
    p.set_defaults(handler=cmd_curves, default_output="csv")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the analytic tails")
    p.add_argument("--sharpe", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--paths", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--steps-per-year", type=_positive_int, default=257)
    p.add_argument("--no-antithetic", action="store_true")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--sigmas", type=float, default=4.0, help="tolerance in binomial std errors")
    p.add_argument("--allowance", type=float, default=0.005,
                   help="absolute discretization allowance")
    p.add_argument("--no-bias-allowance", action="store_true",
                   help="drop the grid-maximum bias term from the depth tolerances")
    p.add_argument("--dump", help="write path_index,length_years,depth_sigma CSV here")
    p.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    out = Emitter(args.output or getattr(args, "default_output", "text"))
    try:
        return args.handler(args, out)
    except (UsageError, DomainError, PnlDataError, InsufficientSampleError,
            QuadratureError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
