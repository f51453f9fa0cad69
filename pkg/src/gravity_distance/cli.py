"""Command-line entry point: ``gravity-distance <command> [flags]``.

Exit status is 0 on success, 1 when the input data or an estimation is
invalid and 2 on usage errors.  Every failure writes one line starting with
an ``E_*`` code to standard error before any detail.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .dataset import DataError, bundled_path, load_panel, pair_observations, read_oil, write_panel
from .design import ModelSpec, build_design
from .dgp import load_config, recovery_experiment, simulate_panel
from .estimators import EstimationError, fit, inference
from .harness import TRADE_SECTORS, run_cross_sections, series_summary, series_to_csv
from .report import emit_chart_data
from .sensitivity import WindowSpec, window_sensitivity


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _years(text: str) -> list[int]:
    try:
        if ":" in text:
            a, b = text.split(":")
            a, b = int(a), int(b)
            if a > b:
                raise ValueError
            return list(range(a, b + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad year range {text!r}; expected START:END") from None


def _spec_flags(p):
    p.add_argument("--spec", dest="specification", default="disaggregated", choices=("disaggregated", "eq1_blocs"))
    p.add_argument("--estimator", default="ols", type=str.lower, choices=("ols", "ppml"))
    p.add_argument("--response", choices=("log", "level"))
    p.add_argument("--population", dest="population_mode", default="level", choices=("level", "log", "omit"))
    p.add_argument("--zero-policy", choices=("drop", "keep"))
    p.add_argument("--distance", default="capital", choices=("capital", "weighted_city"))


def _model_spec(args, sector: str) -> ModelSpec:
    response = args.response or ("level" if args.estimator == "ppml" else "log")
    zero_policy = args.zero_policy or ("keep" if response == "level" else "drop")
    try:
        return ModelSpec(
            specification=args.specification,
            sector=sector,
            response=response,
            population_mode=args.population_mode,
            zero_policy=zero_policy,
            estimator=args.estimator,
        )
    except ValueError as exc:
        raise UsageError(f"conflicting flags: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gravity-distance", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a data directory against the schemas")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--distance", default="capital", choices=("capital", "weighted_city"))

    p = sub.add_parser("estimate", help="one year/sector regression table")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--year", required=True, type=int)
    p.add_argument("--sector", required=True, choices=("total", *TRADE_SECTORS))
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", type=Path)
    _spec_flags(p)

    p = sub.add_parser("series", help="distance-coefficient series per sector")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--sector", required=True, choices=("all", "total", *TRADE_SECTORS))
    p.add_argument("--years", required=True, type=_years)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chart", type=Path, help="also write tidy chart data to this file")
    _spec_flags(p)

    p = sub.add_parser("sensitivity", help="oil-price sensitivity over windows")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--sector", default="manufacturing", choices=("total", *TRADE_SECTORS))
    p.add_argument("--windows", required=True)
    p.add_argument("--oil", default="data", help="'data' (oil.csv in --data), 'bundled', or a CSV path")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    _spec_flags(p)

    p = sub.add_parser("simulate", help="write a synthetic panel from a DGP config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("recover", help="planted-coefficient recovery experiment")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--sector", default="manufacturing", choices=("total", *TRADE_SECTORS))
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--level", type=float, default=0.95)
    _spec_flags(p)
    return parser


def _load(args):
    return load_panel(args.data, args.distance)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def cmd_validate(args, out):
    panel = _load(args)
    issues = [f"missing macro entry for {c} {y}" for c, y in panel.missing_macro()]
    print(f"countries: {len(panel.countries)}  pairs: {len(panel.pairs)}", file=out)
    years = panel.years
    print(f"years: {years[0]}-{years[-1]} ({len(years)})" if years else "years: none", file=out)
    print(f"sectors: {', '.join(panel.sectors)}", file=out)
    print(f"flow records: {len(panel.flows)}  zero flows: {sum(f.value == 0 for f in panel.flows)}", file=out)
    if issues:
        raise DataError("; ".join(issues))
    print("OK", file=out)


def cmd_estimate(args, out):
    panel = _load(args)
    spec = _model_spec(args, args.sector)
    d = build_design(pair_observations(panel, args.year, args.sector), spec)
    f = fit(d, spec.estimator)
    text = inference(f, args.level, d.response_label).render()
    out.write(text)
    out.write(f"n = {f.n}, df = {f.df}, dropped zero flows = {f.dropped_zero_count}\n")
    if args.out:
        _write(args.out, text)


def cmd_series(args, out):
    panel = _load(args)
    sectors = TRADE_SECTORS if args.sector == "all" else (args.sector,)
    series_set = []
    for sector in sectors:
        spec = _model_spec(args, sector)
        s = run_cross_sections(panel, spec, args.years, workers=args.workers)
        series_set.append(s)
        path = _write(args.out / f"series_{sector}_{spec.estimator}.csv", series_to_csv([s]))
        failed = sum(not e.ok for e in s.entries)
        try:
            summ = series_summary(s)
            detail = f"mean {summ.mean:.4f}, sign changes at {summ.sign_change_years or 'none'}"
        except ValueError as exc:
            detail = str(exc)
        print(f"{path}: {len(s.entries)} years, {failed} failed; {detail}", file=out)
    if args.chart:
        emit_chart_data(series_set, panel.oil, args.chart)
        print(f"{args.chart}: chart data", file=out)


def _oil(args, panel):
    if args.oil == "data":
        return panel.oil
    if args.oil == "bundled":
        return read_oil(bundled_path("oil.csv"))
    return read_oil(Path(args.oil))


def cmd_sensitivity(args, out):
    try:
        windows = WindowSpec.parse(args.windows)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    panel = _load(args)
    oil = _oil(args, panel)
    spec = _model_spec(args, args.sector)
    years = sorted({y for w in windows.windows for y in range(w[0], w[1] + 1)})
    s = run_cross_sections(panel, spec, years, workers=args.workers)
    try:
        report = window_sensitivity(s, oil, windows)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _write(args.out / f"sensitivity_{args.sector}_{spec.estimator}.csv", report.to_csv())
    out.write(report.render())


def cmd_simulate(args, out):
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    panel = simulate_panel(config)
    written = write_panel(panel, args.out)
    print(f"wrote {len(written)} tables to {args.out}", file=out)


def cmd_recover(args, out):
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.replications < 1:
        raise UsageError("--replications must be >= 1")
    spec = _model_spec(args, args.sector)
    report = recovery_experiment(config, spec, args.replications, args.level, workers=args.workers)
    path = _write(args.out / f"recovery_{args.sector}_{spec.estimator}.csv", report.to_csv())
    print(f"{path}: {report.replications} replications, {report.failures} failed estimations", file=out)
    for c in report.coefficients:
        print(f"  {c.label:<16} truth {c.truth_mean:+.6g}  bias {c.bias:+.4g}  rmse {c.rmse:.4g}  coverage {c.coverage:.3f}", file=out)


COMMANDS = {
    "validate": cmd_validate,
    "estimate": cmd_estimate,
    "series": cmd_series,
    "sensitivity": cmd_sensitivity,
    "simulate": cmd_simulate,
    "recover": cmd_recover,
}


def run_command(argv, out=None, err=None) -> int:
    """Run one subcommand; returns the process exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"E_USAGE: {exc}", file=err)
        return 2
    except DataError as exc:
        print(f"E_VALIDATION: {exc}", file=err)
        return 1
    except EstimationError as exc:
        print(f"E_ESTIMATION: {exc}", file=err)
        return 1
    except FileNotFoundError as exc:
        print(f"E_IO: {exc}", file=err)
        return 1
    except (OSError, ValueError) as exc:
        print(f"E_INPUT: {exc}", file=err)
        return 1
    return 0


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
