"""Command-line entry point for potcore."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .bootstrap import accuracy_grid, envelopes, parametric_bootstrap
from .config import Config
from .distributions import GevParams, NormalParams, gev_cdf, gpd_cdf, gpd_quantile, normal_cdf
from .errors import ArgumentError, EstimationError, NoStableThresholdError, PotError
from .estimation import (
    METHODS,
    GpdFit,
    ThresholdReport,
    fit_gev_pwm,
    fit_gpd,
    fit_normal,
    mean_excess,
    select_threshold,
)
from .gof import ad_pvalue_bootstrap, ad_statistic, supnorm_gap
from .ingest import ArrivalSeries, ExcessSample, block_maxima, ecdf, excesses_over, load_series
from .report import RunReport, dataset_digest, format_value
from .risk import over_capacity_prob, tail_model, triage_flag

logger = logging.getLogger("potcore")

Handler = Callable[[argparse.Namespace, Config], RunReport]

# Quantiles of the fitted excess distribution used as default accuracy levels
DEFAULT_LEVEL_QUANTILES = (0.5, 0.75, 0.9, 0.95, 0.99)
GRID_QUANTILE = 0.999
# Envelopes are expected to bracket the original up to this excess quantile
BODY_QUANTILE = 0.5
MEAN_EXCESS_QUANTILES = np.linspace(0.50, 0.98, 25)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any potcore error raised inside the block with the pipeline stage."""
    try:
        yield
    except PotError as e:
        if not hasattr(e, "stage"):
            e.stage = name
        raise


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text!r}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}")


# Pipeline stages shared by the subcommands


def _load(args: argparse.Namespace) -> ArrivalSeries:
    with stage("load"):
        return load_series(args.input, args.format)


def _new_report(args: argparse.Namespace, config: Config) -> RunReport:
    with stage("load"):
        try:
            digest = dataset_digest(args.input)
        except OSError as e:
            raise ArgumentError(f"cannot read {args.input}: {e}") from e
    report = RunReport(args.command, args.input, digest, config.to_dict())
    if args.label:
        report.add_section("provenance", {"label": args.label})
    return report


def _threshold_table(threshold_report: ThresholdReport) -> pd.DataFrame:
    rows = [
        {
            "quantile": c.quantile,
            "threshold": c.threshold,
            "n_exceed": c.n_exceed,
            "shape": c.fit.shape,
            "scale": c.fit.scale,
            "fitted_mean": format_value(c.fitted_mean) if math.isfinite(c.fitted_mean) else "inf",
            "mean_excess": c.mean_excess,
            "selected": int(i == threshold_report.selected_index),
        }
        for i, c in enumerate(threshold_report.candidates)
    ]
    return pd.DataFrame(rows)


def _resolve_threshold(series: ArrivalSeries, config: Config, report: RunReport) -> float:
    if config.threshold is not None:
        report.add_section("threshold", {"source": "given", "u": config.threshold})
        return config.threshold
    with stage("threshold"):
        selection = select_threshold(
            series, config.quantile_grid, config.n_min, config.stability_tol
        )
    report.add_section(
        "threshold",
        {
            "source": "auto",
            "u": selection.threshold,
            "quantile": selection.selected.quantile,
        },
    )
    report.add_table("thresholds", _threshold_table(selection))
    return selection.threshold


def _fit(
    series: ArrivalSeries, config: Config, report: RunReport
) -> tuple[ExcessSample, GpdFit]:
    u = _resolve_threshold(series, config, report)
    with stage("fit"):
        sample = excesses_over(series, u)
        fit = fit_gpd(sample, config.method)
    section = {
        "method": fit.method,
        "threshold": fit.threshold,
        "shape": fit.shape,
        "scale": fit.scale,
        "zeta": fit.zeta,
        "n_exceed": fit.n_exceed,
        "n_total": sample.n_total,
    }
    if fit.shape < 1:
        section["mean_excess"] = fit.mean_excess
    if fit.log_likelihood is not None:
        section["log_likelihood"] = fit.log_likelihood
    section["unit"] = "one observation of the loaded series"
    report.add_section("fit", section)
    return sample, fit


# Subcommands


def cmd_fit(args: argparse.Namespace, config: Config) -> RunReport:
    report = _new_report(args, config)
    series = _load(args)
    _fit(series, config, report)
    return report


def _conditional(cdf: Callable, u: float, name: str) -> Callable:
    """CDF of X given X > u."""
    base = float(cdf(u))
    if not base < 1:
        raise EstimationError(f"{name} model puts no probability above u={u:g}")

    def conditional(x):
        return np.clip((np.asarray(cdf(x)) - base) / (1.0 - base), 0.0, 1.0)

    return conditional


def cmd_compare(args: argparse.Namespace, config: Config) -> RunReport:
    report = _new_report(args, config)
    series = _load(args)
    sample, fit = _fit(series, config, report)
    u = fit.threshold
    tail = sample.excesses + u

    arms: dict[str, Callable] = {"gpd": lambda x: gpd_cdf(fit.params, np.asarray(x) - u)}
    report.add_section("arm.gpd", {"status": "ok", "shape": fit.shape, "scale": fit.scale})

    try:
        with stage("gev"):
            maxima = block_maxima(series, config.block_len)
            gev = fit_gev_pwm(maxima, config.block_len)
            gev_params: GevParams = gev.params
            arms["gev"] = _conditional(lambda x: gev_cdf(gev_params, x), u, "GEV")
        report.add_section(
            "arm.gev",
            {
                "status": "ok",
                "block_len": gev.block_len,
                "n_blocks": gev.n_blocks,
                "loc": gev_params.loc,
                "scale": gev_params.scale,
                "shape": gev_params.shape,
            },
        )
    except PotError as e:
        logger.warning("GEV arm failed: %s", e)
        report.add_section("arm.gev", {"status": "failed", "error": str(e)})

    try:
        with stage("normal"):
            normal: NormalParams = fit_normal(series.values)
            arms["normal"] = _conditional(lambda x: normal_cdf(normal, x), u, "Normal")
        report.add_section("arm.normal", {"status": "ok", "mean": normal.mean, "sd": normal.sd})
    except PotError as e:
        logger.warning("Normal arm failed: %s", e)
        report.add_section("arm.normal", {"status": "failed", "error": str(e)})

    for name, cdf in arms.items():
        report.add_section(
            f"arm.{name}",
            {"supnorm_gap": supnorm_gap(cdf, tail), "ad_statistic": ad_statistic(tail, cdf)},
        )

    upper = max(u + gpd_quantile(fit.params, GRID_QUANTILE), float(tail.max()))
    x = np.linspace(float(tail.min()), upper, config.grid_points)
    curves = {"x": x, "ecdf": ecdf(tail)(x)}
    curves.update({name: np.asarray(cdf(x), dtype=float) for name, cdf in arms.items()})
    report.add_table("curves", pd.DataFrame(curves))
    return report


def cmd_gof(args: argparse.Namespace, config: Config) -> RunReport:
    report = _new_report(args, config)
    series = _load(args)
    sample, fit = _fit(series, config, report)
    with stage("gof"):
        result = ad_pvalue_bootstrap(
            fit, sample, config.gof_replicates, config.seed, workers=config.workers
        )
    report.add_section(
        "gof",
        {
            "model": result.model,
            "ad_statistic": result.ad_statistic,
            "p_value": result.p_value,
            "supnorm_gap": result.supnorm_gap,
            "B_used": result.B_used,
            "failed": result.failed,
            "seed": result.seed,
            "rng": config.rng,
        },
    )
    return report


def cmd_bootstrap(args: argparse.Namespace, config: Config) -> RunReport:
    report = _new_report(args, config)
    series = _load(args)
    sample, fit = _fit(series, config, report)
    u = fit.threshold

    with stage("bootstrap"):
        result = parametric_bootstrap(
            fit,
            config.bootstrap_replicates,
            config.seed,
            grid_points=config.envelope_points,
            workers=config.workers,
        )
        env = envelopes(result)
        levels = config.levels or tuple(
            u + gpd_quantile(fit.params, np.array(DEFAULT_LEVEL_QUANTILES))
        )
        grid = accuracy_grid(fit, env, sample, levels)

    report.add_section(
        "bootstrap",
        {
            "B": result.B,
            "exhausted": result.exhausted,
            "seed": result.seed,
            "rng": config.rng,
            "shape_mean": float(result.shapes.mean()),
            "shape_sd": float(result.shapes.std(ddof=1)),
            "scale_mean": float(result.scales.mean()),
            "scale_sd": float(result.scales.std(ddof=1)),
        },
    )
    report.add_section(
        "envelopes",
        {
            "conservative_replicate": int(result.replicate_ids[env.conservative_index]),
            "conservative_shape": env.conservative_params.shape,
            "conservative_scale": env.conservative_params.scale,
            "conservative_deviation": env.conservative_deviation,
            "nonconservative_replicate": int(result.replicate_ids[env.nonconservative_index]),
            "nonconservative_shape": env.nonconservative_params.shape,
            "nonconservative_scale": env.nonconservative_params.scale,
            "nonconservative_deviation": env.nonconservative_deviation,
            "degenerate": env.degenerate,
            "spread": env.spread,
            "bracketed_fraction": env.bracketed_fraction(),
            "bracketed_fraction_body": env.bracketed_fraction(
                upper=gpd_quantile(fit.params, BODY_QUANTILE)
            ),
        },
    )
    largest, smallest = grid.extreme_errors()
    report.add_section(
        "accuracy", {"largest_abs_error": largest, "smallest_abs_error": smallest}
    )

    report.add_table(
        "replicates",
        pd.DataFrame(
            {"replicate": result.replicate_ids, "shape": result.shapes, "scale": result.scales}
        ),
    )
    report.add_table(
        "envelopes",
        pd.DataFrame(
            {
                "x": u + env.grid,
                "original": env.original,
                "conservative": env.conservative,
                "nonconservative": env.nonconservative,
            }
        ),
    )
    accuracy = {"level": grid.levels, **grid.rows()}
    accuracy.update({f"exceed_{name}": v for name, v in grid.exceedance().items()})
    report.add_table("accuracy", pd.DataFrame(accuracy))
    return report


def cmd_predict(args: argparse.Namespace, config: Config) -> RunReport:
    if not (config.query_levels or config.capacities or config.arrivals):
        raise ArgumentError("predict needs at least one --level, --capacity or --arrival")
    if config.arrivals and not config.capacities:
        raise ArgumentError("--arrival needs a --capacity to compare against")

    report = _new_report(args, config)
    series = _load(args)
    _, fit = _fit(series, config, report)

    with stage("predict"):
        model = tail_model(series, fit)
        rows = []
        for kind, values in (("level", config.query_levels), ("capacity", config.capacities)):
            for value in values:
                answer = over_capacity_prob(model, value)
                rows.append(
                    {
                        "query": kind,
                        "value": value,
                        "probability": answer.probability,
                        "source": answer.source,
                    }
                )
        advice = [triage_flag(model, a, config.capacities[0]) for a in config.arrivals]

    if rows:
        report.add_table("predictions", pd.DataFrame(rows))
    if advice:
        report.add_table(
            "triage",
            pd.DataFrame(
                [
                    {
                        "arrival": a.arrival,
                        "mode": a.mode,
                        "arrival_probability": a.arrival_probability,
                        "arrival_source": a.arrival_source,
                        "capacity": a.capacity,
                        "capacity_probability": a.capacity_probability,
                        "capacity_source": a.capacity_source,
                    }
                    for a in advice
                ]
            ),
        )
    return report


def cmd_select_threshold(args: argparse.Namespace, config: Config) -> RunReport:
    report = _new_report(args, config)
    series = _load(args)

    levels = np.unique(np.quantile(series.values, MEAN_EXCESS_QUANTILES))
    rows = mean_excess(series, levels)
    report.add_table(
        "mean_excess", pd.DataFrame(rows, columns=["threshold", "mean_excess", "n_exceed"])
    )

    try:
        with stage("threshold"):
            selection = select_threshold(
                series, config.quantile_grid, config.n_min, config.stability_tol
            )
    except NoStableThresholdError as e:
        if e.report is not None:
            report.add_section(
                "selection", {"selected": None, "stability_tol": config.stability_tol}
            )
            report.add_table("thresholds", _threshold_table(e.report))
        e.run_report = report
        raise

    report.add_section(
        "selection",
        {
            "selected": selection.threshold,
            "quantile": selection.selected.quantile,
            "stability_tol": selection.stability_tol,
            "n_min": selection.n_min,
        },
    )
    report.add_table("thresholds", _threshold_table(selection))
    if selection.rejected:
        report.add_table(
            "rejected", pd.DataFrame(list(selection.rejected), columns=["quantile", "reason"])
        )
    return report


# Argument parsing


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--input", required=True, help="Arrival dataset path")
    parent.add_argument("--format", choices=("plain", "csv"), default="plain")
    parent.add_argument("--out", help="Report path; tables are written next to it")
    parent.add_argument("--seed", type=int, help="Seed for every random stream (default 0)")
    parent.add_argument(
        "--workers", type=_positive_int, help="Threads for replicate loops (default 1)"
    )
    parent.add_argument("--label", help="Free-text provenance recorded in the report")
    parent.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    parent.add_argument(
        "--quantiles",
        dest="quantile_grid",
        type=_float_list,
        help="Threshold candidate quantiles, e.g. 0.7,0.75,0.8",
    )
    parent.add_argument("--n-min", dest="n_min", type=int, help="Minimum exceedances per candidate")
    parent.add_argument("--stability-tol", dest="stability_tol", type=float)
    return parent


def _tail_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group(required=True)
    group.add_argument("--threshold", type=float, help="Modeling threshold u")
    group.add_argument(
        "--auto-threshold", action="store_true", help="Select u by shape stability"
    )
    parent.add_argument("--method", choices=METHODS, help="GPD estimator (default pwm)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="potcore", description="Peaks-over-threshold analysis of arrival streams"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    common, tail = _common_parent(), _tail_parent()

    sub = subparsers.add_parser("fit", parents=[common, tail], help="Fit a GPD to excesses")
    sub.set_defaults(handler=cmd_fit)

    sub = subparsers.add_parser(
        "compare", parents=[common, tail], help="Compare GPD, block-maxima GEV and Normal fits"
    )
    sub.add_argument(
        "--block-len", dest="block_len", type=_positive_int, help="Block length (default 3)"
    )
    sub.add_argument(
        "--grid-points", dest="grid_points", type=_positive_int, help="Curve grid size"
    )
    sub.set_defaults(handler=cmd_compare)

    sub = subparsers.add_parser(
        "gof", parents=[common, tail], help="Anderson-Darling test with bootstrap p-value"
    )
    sub.add_argument("--replicates", dest="gof_replicates", type=int, help="Null replicates")
    sub.set_defaults(handler=cmd_gof)

    sub = subparsers.add_parser(
        "bootstrap", parents=[common, tail], help="Parametric bootstrap envelopes"
    )
    sub.add_argument(
        "--replicates", dest="bootstrap_replicates", type=int, help="Replicates (default 2100)"
    )
    sub.add_argument("--levels", type=_float_list, help="Accuracy grid levels, comma-separated")
    sub.set_defaults(handler=cmd_bootstrap)

    sub = subparsers.add_parser(
        "predict", parents=[common, tail], help="Exceedance and over-capacity probabilities"
    )
    sub.add_argument("--level", dest="query_levels", type=float, action="append")
    sub.add_argument("--capacity", dest="capacities", type=float, action="append")
    sub.add_argument("--arrival", dest="arrivals", type=float, action="append")
    sub.set_defaults(handler=cmd_predict)

    sub = subparsers.add_parser(
        "select-threshold", parents=[common], help="Tabulate threshold candidates"
    )
    sub.set_defaults(handler=cmd_select_threshold)
    return parser


def _emit(report: RunReport, out: str | None) -> None:
    if out:
        for path in report.write(Path(out)):
            logger.info("Wrote %s", path)
    else:
        sys.stdout.write(report.render())


def main(argv: Sequence[str] | None = None) -> int:
    """Application entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    config = Config.from_args(args)
    handler: Handler = args.handler

    try:
        report = handler(args, config)
        _emit(report, args.out)
    except PotError as e:
        logger.error("error [%s]: %s", getattr(e, "stage", args.command), e)
        partial = getattr(e, "run_report", None)
        if partial is not None:
            _emit(partial, args.out)
        return e.exit_code
    except Exception as e:
        logger.exception("unexpected error: %s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
