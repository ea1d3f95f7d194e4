"""potcore - peaks-over-threshold extreme value analysis of core arrival streams."""

__version__ = "0.1.0"

from .bootstrap import (  # noqa: E402
    AccuracyGrid,
    BootstrapResult,
    EnvelopePair,
    accuracy_grid,
    envelopes,
    parametric_bootstrap,
)
from .distributions import (  # noqa: E402
    GevParams,
    GpdParams,
    NormalParams,
    gev_cdf,
    gev_quantile,
    gev_sample,
    gpd_cdf,
    gpd_mean,
    gpd_quantile,
    gpd_sample,
    gpd_sf,
    normal_cdf,
    normal_quantile,
    normal_sample,
    rng_for,
)
from .errors import PotError  # noqa: E402
from .estimation import (  # noqa: E402
    GevFit,
    GpdFit,
    ThresholdReport,
    fit_gev_pwm,
    fit_gpd,
    fit_gpd_mle,
    fit_gpd_pwm,
    fit_normal,
    mean_excess,
    select_threshold,
)
from .gof import GofReport, ad_pvalue_bootstrap, ad_statistic, supnorm_gap  # noqa: E402
from .ingest import (  # noqa: E402
    ArrivalSeries,
    ExcessSample,
    StepFunction,
    block_maxima,
    ecdf,
    excesses_over,
    load_series,
)
from .risk import (  # noqa: E402
    TailModel,
    TriageAdvice,
    exceedance_prob,
    over_capacity_prob,
    tail_model,
    triage_flag,
)

__all__ = [
    "AccuracyGrid",
    "ArrivalSeries",
    "BootstrapResult",
    "EnvelopePair",
    "ExcessSample",
    "GevFit",
    "GevParams",
    "GofReport",
    "GpdFit",
    "GpdParams",
    "NormalParams",
    "PotError",
    "StepFunction",
    "TailModel",
    "ThresholdReport",
    "TriageAdvice",
    "__version__",
    "accuracy_grid",
    "ad_pvalue_bootstrap",
    "ad_statistic",
    "block_maxima",
    "ecdf",
    "envelopes",
    "exceedance_prob",
    "excesses_over",
    "fit_gev_pwm",
    "fit_gpd",
    "fit_gpd_mle",
    "fit_gpd_pwm",
    "fit_normal",
    "gev_cdf",
    "gev_quantile",
    "gev_sample",
    "gpd_cdf",
    "gpd_mean",
    "gpd_quantile",
    "gpd_sample",
    "gpd_sf",
    "load_series",
    "mean_excess",
    "normal_cdf",
    "normal_quantile",
    "normal_sample",
    "over_capacity_prob",
    "parametric_bootstrap",
    "rng_for",
    "select_threshold",
    "supnorm_gap",
    "tail_model",
    "triage_flag",
]
