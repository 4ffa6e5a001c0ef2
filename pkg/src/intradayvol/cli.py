"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

from .cumulants import (
    aggregate_day_profiles,
    aggregate_ticker_profiles,
    cumulants_over_companies,
    cumulants_over_days,
    mean_kurtosis_tail,
    profile_metadata,
    profile_to_csv,
    variance_ratio,
)
from .errors import DataError, NumericalError
from .fits import (
    fit_closing_powerlaw,
    fit_kurtosis_relaxation,
    fit_opening_powerlaw,
    fit_quartic,
    shape_functionals,
)
from .metrics import (
    activity,
    concavity_activity_regression,
    daily_ohlc,
    garman_klass_volatility,
    semester_endpoint_prices,
    semester_return,
)
from .panel import (
    assign_semesters,
    default_semester_boundaries,
    load_minute_bars,
    semester_day_indices,
    validate_panel,
    write_panel_csv,
)
from .pipeline import PipelineConfig, load_figure_csv, run_pipeline
from .stats_tests import mww_test, welch_test
from .synth import GeneratorSpec, IntensitySpec, NoiseSpec, generate_panel


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def _config_from_args(args) -> PipelineConfig:
    if getattr(args, "config", None):
        config = PipelineConfig.from_file(args.config)
    else:
        config = PipelineConfig()
    if getattr(args, "input", None):
        config.input_paths = list(args.input)
    if getattr(args, "out", None):
        config.out_dir = args.out
    if getattr(args, "time_format", None):
        config.time_format = args.time_format
    if getattr(args, "jobs", None):
        config.jobs = args.jobs
    return config


def _prepare(args):
    """Load the panel and build the validated semester index."""
    config = _config_from_args(args)
    if not config.input_paths:
        raise DataError("no input: pass input paths or set input_paths in --config")
    panel, report = load_minute_bars(config.input_paths, config.schema or None,
                                     time_format=config.time_format)
    if config.semester_boundaries is not None:
        bounds = [(dt.date.fromisoformat(a), dt.date.fromisoformat(b))
                  for a, b in config.semester_boundaries]
    else:
        bounds = default_semester_boundaries(panel.days[0], panel.days[-1])
    index = assign_semesters(panel, bounds)
    validation = validate_panel(panel, index, config.min_day_coverage)
    index = index.with_exclusions(validation.exclusions())
    if config.ticker_exclusions:
        index = index.with_exclusions(config.ticker_exclusions)
    return config, panel, index, report, validation


def _out_dir(args, default="out") -> Path:
    out = Path(getattr(args, "out", None) or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _active_semesters(panel, index):
    return [s for s in index.labels if len(semester_day_indices(panel, index, s))]


def _cmd_ingest(args) -> int:
    config, panel, index, report, _ = _prepare(args)
    out = _out_dir(args)
    write_panel_csv(panel, out / "panel.csv")
    (out / "load_report.json").write_text(_dump(report.to_json()) + "\n")
    print(f"loaded {report.n_loaded} rows "
          f"({len(report.skipped)} skipped) -> {out / 'panel.csv'}")
    return 0


def _cmd_validate(args) -> int:
    if args.min_day_coverage is not None:
        config = _config_from_args(args)
        config.min_day_coverage = args.min_day_coverage
        args.config = None  # already folded in
    _, panel, index, _, validation = _prepare(args)
    out = _out_dir(args)
    (out / "validation.json").write_text(_dump(validation.to_json()) + "\n")
    excluded = sum(1 for r in validation.records if not r.included)
    print(f"{len(validation.records)} (ticker, semester) pairs, "
          f"{excluded} excluded -> {out / 'validation.json'}")
    return 0


def _cmd_profile(args) -> int:
    config, panel, index, _, _ = _prepare(args)
    lk = config.literal_kurtosis
    if args.day:
        day = dt.date.fromisoformat(args.day)
        s = args.semester if args.semester else index.semester_of(day)
        prof = cumulants_over_companies(panel, index, day, s, literal_kurtosis=lk)
        name = f"profile_s{s:02d}_day_{day.isoformat()}.csv"
    elif args.ticker:
        if not args.semester:
            raise DataError("--ticker needs --semester")
        prof = cumulants_over_days(panel, index, args.ticker, args.semester,
                                   literal_kurtosis=lk)
        name = f"profile_s{args.semester:02d}_{args.ticker}.csv"
    else:
        if not args.semester:
            raise DataError("aggregate profiles need --semester")
        s = args.semester
        if args.kind == "day-mean":
            days = [panel.days[j] for j in semester_day_indices(panel, index, s)]
            prof = aggregate_day_profiles(
                [cumulants_over_companies(panel, index, d, s, literal_kurtosis=lk)
                 for d in days], s)
        else:
            prof = aggregate_ticker_profiles(
                [cumulants_over_days(panel, index, t, s, literal_kurtosis=lk)
                 for t in panel.companies if not index.is_excluded(t, s)], s)
        name = f"profile_s{s:02d}_{args.kind.replace('-', '_')}.csv"
    out = _out_dir(args)
    profile_to_csv(prof, out / name)
    (out / (name[:-4] + ".json")).write_text(_dump(profile_metadata(prof)) + "\n")
    print(out / name)
    return 0


def _ticker_mean_profile(config, panel, index, s):
    profs = [cumulants_over_days(panel, index, t, s,
                                 literal_kurtosis=config.literal_kurtosis)
             for t in panel.companies if not index.is_excluded(t, s)]
    return aggregate_ticker_profiles(profs, s)


def _cmd_fit(args) -> int:
    config, panel, index, _, _ = _prepare(args)
    agg = _ticker_mean_profile(config, panel, index, args.semester)
    if args.model == "opening":
        result = fit_opening_powerlaw(agg.mean, config.opening_window,
                                      config.opening_time_offset).to_json()
    elif args.model == "closing":
        result = fit_closing_powerlaw(agg.mean, config.closing_window).to_json()
    elif args.model == "quartic":
        result = fit_quartic(agg.mean).to_json()
    else:
        morning, afternoon = fit_kurtosis_relaxation(
            agg.kurtosis, config.kurtosis_morning_window,
            config.kurtosis_afternoon_window)
        result = {"morning": morning.to_json(), "afternoon": afternoon.to_json()}
    print(_dump(result))
    return 0


def _cmd_shapes(args) -> int:
    config, panel, index, _, _ = _prepare(args)
    agg = _ticker_mean_profile(config, panel, index, args.semester)
    fit = fit_quartic(agg.mean)
    doc = {"quartic": fit.to_json(), "shapes": shape_functionals(fit).to_json()}
    print(_dump(doc))
    return 0


def _cmd_metrics(args) -> int:
    config, panel, index, _, _ = _prepare(args)
    out = _out_dir(args)
    rows = ["ticker,semester,activity,volatility,price_variation,concavity,symmetry"]
    pairs = []
    for s in _active_semesters(panel, index):
        for ticker in panel.companies:
            if index.is_excluded(ticker, s):
                continue
            if args.ticker and ticker != args.ticker:
                continue
            prof = cumulants_over_days(panel, index, ticker, s,
                                       literal_kurtosis=config.literal_kurtosis)
            try:
                sf = shape_functionals(fit_quartic(prof.mean))
                conc, sym = sf.concavity, sf.symmetry
            except Exception:
                conc = sym = float("nan")
            try:
                vol = garman_klass_volatility(daily_ohlc(panel, index, ticker, s))
                act = activity(panel, index, ticker, s)
                ret = semester_return(*semester_endpoint_prices(panel, index, ticker, s),
                                      convention=config.return_convention)
            except DataError:
                continue
            rows.append(f"{ticker},{s},{act:.17g},{vol:.17g},{ret:.17g},"
                        f"{conc:.17g},{sym:.17g}")
            pairs.append((ticker, s))
    (out / "metrics.csv").write_text("\n".join(rows) + "\n")
    print(f"{len(pairs)} rows -> {out / 'metrics.csv'}")
    return 0


def _parse_samples(text: str) -> list[float]:
    if text.startswith("@"):
        raw = Path(text[1:]).read_text()
        parts = raw.replace(",", " ").split()
    else:
        parts = [p for p in text.split(",") if p.strip()]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise DataError(f"could not parse sample values: {exc}") from None


def _cmd_tests(args) -> int:
    a = _parse_samples(args.sample_1)
    b = _parse_samples(args.sample_2)
    doc = {}
    if args.test in ("welch", "both"):
        doc["welch"] = welch_test(a, b, args.confidence, tails=args.tails).to_json()
    if args.test in ("mww", "both"):
        doc["mww"] = mww_test(a, b, args.confidence, tails=args.tails).to_json()
    print(_dump(doc))
    return 0


def _cmd_xsection(args) -> int:
    config, panel, index, _, _ = _prepare(args)
    out = _out_dir(args)
    day_means = {}
    ticker_means = {}
    for s in _active_semesters(panel, index):
        days = [panel.days[j] for j in semester_day_indices(panel, index, s)]
        day_means[s] = aggregate_day_profiles(
            [cumulants_over_companies(panel, index, d, s,
                                      literal_kurtosis=config.literal_kurtosis)
             for d in days], s)
        ticker_means[s] = _ticker_mean_profile(config, panel, index, s)
        profile_to_csv(day_means[s], out / f"s{s:02d}_day_mean.csv")
    ratio_rows = ["semester,t,variance_ratio"]
    for s, dm in sorted(day_means.items()):
        ratio = variance_ratio(ticker_means[s], dm)
        ratio_rows += [f"{s},{t},{ratio[t]:.17g}" for t in range(len(ratio))]
    (out / "variance_ratio.csv").write_text("\n".join(ratio_rows) + "\n")
    tail, curve = mean_kurtosis_tail(day_means, config.kurtosis_tail_t_min,
                                     set(config.kurtosis_tail_excluded_semesters))
    tail_rows = ["semester,tail_mean_kurtosis"]
    tail_rows += [f"{s},{v:.17g}" for s, v in sorted(tail.items())]
    (out / "kurtosis_tail.csv").write_text("\n".join(tail_rows) + "\n")
    curve_rows = ["t,mean_kurtosis"]
    curve_rows += [f"{t},{curve[t]:.17g}" for t in range(len(curve))]
    (out / "kurtosis_curve.csv").write_text("\n".join(curve_rows) + "\n")
    print(f"{len(day_means)} semesters -> {out}")
    return 0


def _cmd_synth(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            doc = json.load(fh)
        intensity = IntensitySpec(**doc.get("intensity", {}))
        noise = NoiseSpec(**doc.get("noise", {}))
        overrides = {int(k): IntensitySpec(**v)
                     for k, v in doc.get("overrides", {}).items()}
        spec = GeneratorSpec(
            n_companies=doc["n_companies"], n_days=doc.get("n_days", 126),
            seed=doc.get("seed", 0), intensity=intensity, noise=noise,
            n_semesters=doc.get("n_semesters", 1), overrides=overrides,
            price_model=doc.get("price_model"),
            daily_log_volatility=doc.get("daily_log_volatility", 0.01),
            start_price=doc.get("start_price", 100.0))
    else:
        spec = GeneratorSpec(
            n_companies=args.companies, n_days=args.days, seed=args.seed,
            n_semesters=args.semesters,
            intensity=IntensitySpec(
                opening_amplitude=args.opening_amplitude,
                opening_exponent=args.alpha,
                closing_amplitude=args.closing_amplitude,
                closing_exponent=args.alpha_prime,
                baseline=args.baseline),
            noise=NoiseSpec(kind=args.noise, sigma_l=args.sigma_l),
            price_model="gbm" if args.prices else None)
    panel, truth = generate_panel(spec)
    out = _out_dir(args)
    write_panel_csv(panel, out / "panel.csv")
    (out / "ground_truth.json").write_text(_dump(truth.to_json()) + "\n")
    print(f"{panel.n_companies} companies x {panel.n_days} days -> {out / 'panel.csv'}")
    return 0


def _cmd_report(args) -> int:
    config = _config_from_args(args)
    bundle = run_pipeline(config)
    print(f"report -> {config.out_dir}")
    tests = bundle.tests
    for name in ("welch", "mww"):
        result = tests.get(name)
        if isinstance(result, dict) and "reject_null" in result:
            verdict = "reject" if result["reject_null"] else "accept"
            print(f"{name}: statistic={result['statistic']:.6g} "
                  f"critical={result['critical_value']:.6g} -> {verdict}")
    if "error" in tests:
        print(f"tests skipped: {tests['error']}")
    return 0


def _cmd_figure(args) -> int:
    data = load_figure_csv(args.report, args.id)
    if args.out:
        out = _out_dir(args)
        (out / f"{args.id}.csv").write_bytes(data)
        print(out / f"{args.id}.csv")
    else:
        sys.stdout.write(data.decode())
    return 0


def _build_parser() -> _Parser:
    shared = _Parser(add_help=False)
    shared.add_argument("--config", help="pipeline config JSON")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--time-format", choices=["auto", "clock", "index"],
                        help="time column format (HH:MM or minute index)")
    shared.add_argument("--jobs", type=int, help="worker threads")

    parser = _Parser(prog="intradayvol",
                     description="Intraday volume profile analytics")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, inputs=True):
        p = sub.add_parser(name, parents=[shared], help=help_)
        p.set_defaults(func=func)
        if inputs:
            p.add_argument("input", nargs="*", help="CSV files or directories")
        return p

    add("ingest", _cmd_ingest, "load CSVs and write the canonical panel")

    p = add("validate", _cmd_validate, "coverage report per (ticker, semester)")
    p.add_argument("--min-day-coverage", type=float, default=None)

    p = add("profile", _cmd_profile, "cumulant profile CSV for one slice")
    p.add_argument("--ticker")
    p.add_argument("--semester", type=int)
    p.add_argument("--day", help="ISO date: cross-sectional profile for that day")
    p.add_argument("--kind", choices=["ticker-mean", "day-mean"], default="ticker-mean")

    p = add("fit", _cmd_fit, "fit the semester's aggregated profile")
    p.add_argument("--model", choices=["opening", "closing", "quartic", "kurtosis"],
                   required=True)
    p.add_argument("--semester", type=int, required=True)

    p = add("shapes", _cmd_shapes, "quartic fit plus concavity/symmetry")
    p.add_argument("--semester", type=int, required=True)

    p = add("metrics", _cmd_metrics, "per-(ticker, semester) scalar metrics CSV")
    p.add_argument("--ticker")

    p = add("tests", _cmd_tests, "two-sample location tests", inputs=False)
    p.add_argument("--sample-1", required=True, help="comma-separated values or @file")
    p.add_argument("--sample-2", required=True)
    p.add_argument("--test", choices=["welch", "mww", "both"], default="both")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--tails", type=int, choices=[1, 2], default=2)

    add("xsection", _cmd_xsection, "cross-sectional profiles, variance ratio, kurtosis tail")

    p = add("synth", _cmd_synth, "generate a synthetic panel", inputs=False)
    p.add_argument("--spec", help="generator spec JSON")
    p.add_argument("--companies", type=int, default=30)
    p.add_argument("--days", type=int, default=126)
    p.add_argument("--semesters", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=["lognormal", "gamma", "constant"],
                   default="lognormal")
    p.add_argument("--sigma-l", type=float, default=0.3)
    p.add_argument("--opening-amplitude", type=float, default=2000.0)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--closing-amplitude", type=float, default=1000.0)
    p.add_argument("--alpha-prime", type=float, default=0.4)
    p.add_argument("--baseline", type=float, default=50.0)
    p.add_argument("--prices", action="store_true", help="geometric random-walk prices")

    add("report", _cmd_report, "run the full pipeline", inputs=True)

    p = add("figure", _cmd_figure, "extract a figure data series from a report",
            inputs=False)
    p.add_argument("--report", required=True, help="report bundle directory")
    p.add_argument("--id", required=True, help="fig1 .. fig16")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
