"""Command-line front end: ingest, fit, benchmark, curve.

Wires corpus parsing through histogram fitting and the Monte Carlo benchmark
into reproducible runs. Reports are line-oriented text, series files are CSV,
and nothing embeds a timestamp or machine detail: the same inputs, flags and
seed produce byte-identical output files on every run.

Exit codes: 0 success, 1 usage error (bad flags, unreadable path), 2 data
error (malformed corpus, nothing to process), 3 numerical failure (ensemble
or fit breakdown).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import corpus, histogram, lognormal, simulate
from .corpus import CorpusFormatError, EligibilityPolicy
from .lognormal import EnsembleError, LognormalParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

# Display constants for the two standard views: linear impact-value bins of
# width 0.1, and log-value bins of width 0.2 over [-5, 3) with zeros shown
# at ln(0.01).
_LINEAR_BIN_WIDTH = 0.1
_LOG_LO = -5.0
_LOG_HI = 3.0
_LOG_BINS = 40
_ZERO_SHIFT = 0.01
_CURVE_POINTS = 512


class DataError(Exception):
    """Input parsed but holds nothing the requested command can work on."""


@dataclass(frozen=True)
class RunConfig:
    """Effective settings for one command run; echoed into every report."""

    input_path: str
    budget_path: str | None = None
    low_cut: float = 0.1
    fit_lo: float = 0.0
    fit_hi: float = 8.0
    bins_lo: int = 20
    bins_hi: int = 800
    n_fits: int = 10_000
    sigma_sq: tuple[float, ...] = (1.0, 1.3, 1.8)
    reps: int = 100_000
    seed: int = 42
    out_dir: str = "."


def _config_lines(cfg: RunConfig) -> list[str]:
    return [
        "config:",
        f"  input = {cfg.input_path}",
        f"  budgets = {cfg.budget_path if cfg.budget_path else '-'}",
        f"  low_cut = {cfg.low_cut!r}",
        f"  range = {cfg.fit_lo!r}:{cfg.fit_hi!r}",
        f"  bins = {cfg.bins_lo}:{cfg.bins_hi}",
        f"  fits = {cfg.n_fits}",
        f"  sigma2 = {','.join(repr(s) for s in cfg.sigma_sq)}",
        f"  reps = {cfg.reps}",
        f"  seed = {cfg.seed}",
        f"  out = {cfg.out_dir}",
    ]


def _write_text(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_csv(path: str, header: list[str], rows: list[list[object]]) -> None:
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # plain-float repr even for numpy scalar subclasses
        return repr(float(value))
    return str(value)


# ---------------------------------------------------------------------------
# flag parsing


def _pos_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be a finite value >= 0, got {text}")
    return value


def _float_range(text: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = text.split(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not LO:HI") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise argparse.ArgumentTypeError(f"need finite LO < HI, got {text!r}")
    return lo, hi


def _int_range(text: str) -> tuple[int, int]:
    try:
        lo_s, hi_s = text.split(":")
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not LO:HI") from None
    if not (1 <= lo <= hi):
        raise argparse.ArgumentTypeError(f"need 1 <= LO <= HI, got {text!r}")
    return lo, hi


def _sigma_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated number list") from None
    if not values:
        raise argparse.ArgumentTypeError("sigma2 list must be non-empty")
    for v in values:
        if not (math.isfinite(v) and v > 0):
            raise argparse.ArgumentTypeError(f"sigma2 values must be finite and > 0, got {v}")
    return values


def _n_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated integer list") from None
    for v in values:
        if v < 1:
            raise argparse.ArgumentTypeError(f"paper counts must be >= 1, got {v}")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwcibench",
        description="Benchmark grant-funded publication impact against a lognormal baseline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="publication record file (CSV or JSONL)")
    common.add_argument("--budgets", default=None, help="optional budget CSV (award_code, budget_eur)")
    common.add_argument("--low-cut", type=_nonneg_float, default=0.1, help="impact cutoff split before fitting")
    common.add_argument("--range", type=_float_range, default=(0.0, 8.0), metavar="LO:HI", help="fitting range")
    common.add_argument("--bins", type=_int_range, default=(20, 800), metavar="LO:HI", help="ensemble bin-count range")
    common.add_argument("--fits", type=_pos_int, default=10_000, help="ensemble size")
    common.add_argument("--sigma2", type=_sigma_list, default=(1.0, 1.3, 1.8), help="baseline log-variances")
    common.add_argument("--reps", type=_pos_int, default=100_000, help="simulated awards per median")
    common.add_argument("--seed", type=_nonneg_int, default=42, help="master seed")
    common.add_argument("--out", default=".", help="output directory")

    p_ingest = sub.add_parser("ingest", parents=[common], help="parse, clean and summarize the corpus")
    p_ingest.set_defaults(func=cmd_ingest)

    p_fit = sub.add_parser("fit", parents=[common], help="fit the lognormal model with a random-bin ensemble")
    p_fit.set_defaults(func=cmd_fit)

    p_bench = sub.add_parser("benchmark", parents=[common], help="compare award means against simulated medians")
    p_bench.set_defaults(func=cmd_benchmark)

    p_curve = sub.add_parser("curve", parents=[common], help="tabulate the median of award means versus paper count")
    p_curve.add_argument("--n-list", type=_n_list, required=True, help="comma-separated award paper counts")
    p_curve.set_defaults(func=cmd_curve)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        budget_path=args.budgets,
        low_cut=args.low_cut,
        fit_lo=args.range[0],
        fit_hi=args.range[1],
        bins_lo=args.bins[0],
        bins_hi=args.bins[1],
        n_fits=args.fits,
        sigma_sq=args.sigma2,
        reps=args.reps,
        seed=args.seed,
        out_dir=args.out,
    )


# ---------------------------------------------------------------------------
# shared pipeline


def _load_corpus(cfg: RunConfig):
    """Parse, dedupe and eligibility-filter the input; load budgets if given."""
    records, rejections = corpus.read_records(cfg.input_path)
    records, n_dup = corpus.dedupe_per_award(records)
    budgets: dict[str, float] = {}
    budget_rejections: list[corpus.RowRejection] = []
    if cfg.budget_path:
        with open(cfg.budget_path, "r", encoding="utf-8", newline="") as fh:
            budgets, budget_rejections = corpus.load_budgets(fh)
    policy = EligibilityPolicy(low_fwci_threshold=cfg.low_cut)
    eligible = corpus.filter_eligible(records, policy)
    return records, rejections, n_dup, eligible, budgets, budget_rejections


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    records, rejections, n_dup, eligible, budgets, budget_rej = _load_corpus(cfg)

    summaries = corpus.summarize_awards(eligible, budgets)
    totals = corpus.portfolio_totals(summaries)
    low, main = corpus.split_low_fwci(eligible, cfg.low_cut)

    with open(_out_path(cfg, "eligible_records.csv"), "w", encoding="utf-8", newline="") as fh:
        corpus.write_records_csv(eligible, fh)

    rejection_lines = [f"row {r.row}: {r.reason} | {r.raw}" for r in rejections]
    rejection_lines += [f"budget row {r.row}: {r.reason} | {r.raw}" for r in budget_rej]
    _write_text(_out_path(cfg, "rejections.txt"), rejection_lines or ["no rejections"])

    _write_csv(
        _out_path(cfg, "award_summaries.csv"),
        ["award_code", "n_papers", "mean_fwci", "budget_eur", "cost_per_paper"],
        [
            [s.award_code, s.n_papers, _fmt(s.mean_fwci), _fmt(s.budget), _fmt(s.cost_per_paper)]
            for s in summaries
        ],
    )

    count_line = f"{totals.n_awards} awards, {totals.n_papers:,} publications"
    cost_line = (
        f"cost_per_paper = {totals.cost_per_paper!r} "
        f"(~EUR {round(totals.cost_per_paper):,}; {totals.n_awards_with_budget} budgeted awards, "
        f"{totals.n_papers_with_budget:,} papers)"
        if totals.cost_per_paper is not None
        else "cost_per_paper = n/a (no budgets)"
    )
    report = [
        "ingest report",
        *_config_lines(cfg),
        "counts:",
        f"  rows_parsed = {len(records) + len(rejections)}",
        f"  rows_rejected = {len(rejections)}",
        f"  duplicates_dropped = {n_dup}",
        f"  records_eligible = {len(eligible)}",
        f"  below_low_cut = {len(low)}",
        f"  at_or_above_low_cut = {len(main)}",
        f"  budget_rows_rejected = {len(budget_rej)}",
        f"  {count_line}",
        f"  {cost_line}",
    ]
    _write_text(_out_path(cfg, "ingest_report.txt"), report)

    print(count_line)
    print(f"below low cut {cfg.low_cut!r}: {len(low)}; at or above: {len(main)}")
    print(cost_line)
    return EXIT_OK


def _linear_bin_count(cfg: RunConfig) -> int:
    return max(int(round((cfg.fit_hi - cfg.fit_lo) / _LINEAR_BIN_WIDTH)), 4)


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _, _, _, eligible, _, _ = _load_corpus(cfg)
    if not eligible:
        raise DataError("no eligible records to fit")

    all_values = np.array([r.fwci for r in eligible], dtype=float)
    low, main = corpus.split_low_fwci(eligible, cfg.low_cut)
    fit_values = np.array(
        [r.fwci for r in main if cfg.fit_lo < r.fwci < cfg.fit_hi], dtype=float
    )
    n_outside = len(main) - fit_values.size
    if fit_values.size < 8:
        raise DataError(
            f"only {fit_values.size} values inside ({cfg.fit_lo!r}, {cfg.fit_hi!r}); too few to fit"
        )

    ensemble = lognormal.ensemble_fit(
        fit_values, cfg.fit_lo, cfg.fit_hi, cfg.bins_lo, cfg.bins_hi, cfg.n_fits, cfg.seed
    )
    central = LognormalParams(mu=ensemble.mu_p50, sigma=ensemble.sigma_p50)
    stats = lognormal.derived_stats(central)

    # Display view: fixed-width bins for plotting plus one fit at that binning
    # so the drawn curve matches the drawn histogram.
    n_display = _linear_bin_count(cfg)
    display_hist = histogram.build_histogram(fit_values, cfg.fit_lo, cfg.fit_hi, n_display)
    try:
        display_fit = lognormal.fit_histogram(display_hist)
        display_lines = [
            f"  n_bins = {n_display}",
            f"  amplitude = {display_fit.amplitude!r}",
            f"  mu = {display_fit.params.mu!r}",
            f"  sigma = {display_fit.params.sigma!r}",
            f"  converged = {display_fit.converged}",
        ]
        curve_amp, curve_params = display_fit.amplitude, display_fit.params
    except ValueError as exc:
        display_lines = [f"  unavailable: {exc}"]
        width = (cfg.fit_hi - cfg.fit_lo) / n_display
        curve_amp = fit_values.size * width / (central.sigma * math.sqrt(2 * math.pi))
        curve_params = central

    _write_csv(
        _out_path(cfg, "hist_linear.csv"),
        ["center", "count"],
        [[_fmt(float(c)), int(k)] for c, k in zip(display_hist.centers, display_hist.counts)],
    )
    xs = cfg.fit_lo + (np.arange(_CURVE_POINTS) + 0.5) * (cfg.fit_hi - cfg.fit_lo) / _CURVE_POINTS
    ys = lognormal.scaled_model(xs, curve_amp, curve_params)
    _write_csv(
        _out_path(cfg, "curve_linear.csv"),
        ["x", "expected_count"],
        [[_fmt(float(x)), _fmt(float(y))] for x, y in zip(xs, ys)],
    )

    # Log view: whole eligible sample with zeros displaced, for display; the
    # cross-check normal fit runs on ln of the fitted sample only.
    log_all = histogram.log_transform(all_values, _ZERO_SHIFT)
    log_hist = histogram.build_histogram(log_all, _LOG_LO, _LOG_HI, _LOG_BINS)
    _write_csv(
        _out_path(cfg, "hist_log.csv"),
        ["center", "count"],
        [[_fmt(float(c)), int(k)] for c, k in zip(log_hist.centers, log_hist.counts)],
    )

    cons_lo = math.log(cfg.low_cut) if cfg.low_cut > 0 else _LOG_LO
    cons_hi = math.log(cfg.fit_hi)
    cons_hist = histogram.build_histogram(np.log(fit_values), cons_lo, cons_hi, _LOG_BINS)
    try:
        cons_amp, cons_params = lognormal.fit_normal_log(cons_hist)
        cons_lines = [
            f"  range = {cons_lo!r}:{cons_hi!r} ({_LOG_BINS} bins of ln values)",
            f"  amplitude = {cons_amp!r}",
            f"  mu = {cons_params.mu!r}",
            f"  sigma = {cons_params.sigma!r}",
        ]
        ts = cons_lo + (np.arange(_CURVE_POINTS) + 0.5) * (cons_hi - cons_lo) / _CURVE_POINTS
        gs = cons_amp * np.exp(-0.5 * ((ts - cons_params.mu) / cons_params.sigma) ** 2)
        curve_log_rows = [[_fmt(float(t)), _fmt(float(g))] for t, g in zip(ts, gs)]
    except ValueError as exc:
        cons_lines = [f"  unavailable: {exc}"]
        curve_log_rows = []
    _write_csv(_out_path(cfg, "curve_log.csv"), ["t", "expected_count"], curve_log_rows)

    report = [
        "fit report",
        *_config_lines(cfg),
        "sample:",
        f"  records_eligible = {len(eligible)}",
        f"  below_low_cut = {len(low)}",
        f"  outside_fit_range = {n_outside}",
        f"  fitted = {fit_values.size}",
        f"  naive_mean_all = {float(all_values.mean())!r}",
        f"  naive_mean_fitted_sample = {float(fit_values.mean())!r}",
        "ensemble:",
        f"  n_fits = {ensemble.n_fits}",
        f"  n_failed = {ensemble.n_failed}",
        f"  seed = {ensemble.seed}",
        f"  mu_p2_5 = {ensemble.mu_p2_5!r}",
        f"  mu_p50 = {ensemble.mu_p50!r}",
        f"  mu_p97_5 = {ensemble.mu_p97_5!r}",
        f"  sigma_p2_5 = {ensemble.sigma_p2_5!r}",
        f"  sigma_p50 = {ensemble.sigma_p50!r}",
        f"  sigma_p97_5 = {ensemble.sigma_p97_5!r}",
        "derived (from median parameters):",
        f"  fitted_mean = {stats.mean!r}",
        f"  fitted_median = {stats.median!r}",
        f"  fitted_mode = {stats.mode!r}",
        f"  interval95 = {stats.interval95_lo!r}:{stats.interval95_hi!r} (distribution quantiles)",
        "consistency (normal fit to ln values):",
        *cons_lines,
        "display fit (fixed-width bins):",
        *display_lines,
        "series files: hist_linear.csv curve_linear.csv hist_log.csv curve_log.csv",
    ]
    _write_text(_out_path(cfg, "fit_report.txt"), report)

    print(f"fitted {fit_values.size} values; ensemble n_failed = {ensemble.n_failed}")
    print(f"mu_p50 = {ensemble.mu_p50!r}, sigma_p50 = {ensemble.sigma_p50!r}")
    print(f"fitted_mean = {stats.mean!r} vs naive_mean_all = {float(all_values.mean())!r}")
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _, _, _, eligible, budgets, _ = _load_corpus(cfg)
    summaries = corpus.summarize_awards(eligible, budgets)
    baselines = [simulate.BaselineField(s) for s in cfg.sigma_sq]

    header = ["award_code", "n_papers", "observed_mean"]
    for s in cfg.sigma_sq:
        header += [f"threshold_{s!r}", f"verdict_{s!r}"]

    if not summaries:
        _write_csv(_out_path(cfg, "benchmark.csv"), header, [])
        _write_text(
            _out_path(cfg, "benchmark_report.txt"),
            ["benchmark report", *_config_lines(cfg), "no awards in input"],
        )
        print("warning: no awards in input", file=sys.stderr)
        return EXIT_OK

    benchmarks = [
        simulate.benchmark_award(s, baselines, cfg.reps, cfg.seed) for s in summaries
    ]
    aggregates = simulate.aggregate_benchmarks(benchmarks)

    rows = []
    for b in benchmarks:
        row: list[object] = [b.award_code, b.n_papers, _fmt(b.observed_mean)]
        for s in cfg.sigma_sq:
            row += [_fmt(b.thresholds[s]), b.verdicts[s]]
        rows.append(row)
    _write_csv(_out_path(cfg, "benchmark.csv"), header, rows)

    report = ["benchmark report", *_config_lines(cfg), f"awards = {len(benchmarks)}"]
    for agg in aggregates:
        combined = agg.n_mean_ge_1 + agg.n_small_sample_pass
        report += [
            f"sigma2 = {agg.sigma_sq!r}:",
            f"  above_median = {agg.n_above}",
            f"  below_median = {agg.n_below}",
            f"  fraction_above = {agg.fraction_above!r}",
            f"  mean_ge_1 = {agg.n_mean_ge_1}",
            f"  small_sample_pass = {agg.n_small_sample_pass} (above median with mean < 1)",
            f"  mean_ge_1_plus_small_sample_pass = {combined}",
        ]
    above_counts = [agg.n_above for agg in aggregates]
    report.append(f"above_median across sigma2: {min(above_counts)} to {max(above_counts)}")
    _write_text(_out_path(cfg, "benchmark_report.txt"), report)

    for agg in aggregates:
        print(
            f"sigma2 {agg.sigma_sq!r}: {agg.n_above}/{agg.n_total} above median "
            f"(fraction {agg.fraction_above!r})"
        )
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    n_list: list[int] = []
    for n in args.n_list:
        if n in n_list:
            print(f"warning: duplicate paper count {n} ignored", file=sys.stderr)
        else:
            n_list.append(n)

    baselines = [simulate.BaselineField(s) for s in cfg.sigma_sq]
    points = simulate.median_curve(n_list, baselines, cfg.reps, cfg.seed)

    _write_csv(
        _out_path(cfg, "median_curve.csv"),
        ["sigma_sq", "n", "median_mean", "reps", "seed"],
        [[_fmt(p.sigma_sq), p.n, _fmt(p.median_mean), p.reps, p.seed] for p in points],
    )
    _write_text(
        _out_path(cfg, "curve_report.txt"),
        [
            "median curve report",
            *_config_lines(cfg),
            f"n_list = {','.join(str(n) for n in n_list)}",
            f"points = {len(points)}",
        ],
    )
    print(f"wrote median_curve.csv ({len(points)} points)")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return EXIT_OK if code == 0 else EXIT_USAGE

    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusFormatError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EnsembleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
