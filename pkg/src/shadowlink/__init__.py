"""Multilink V2V shadowing: pathloss models, censored estimation, correlation and dip simulation."""
from .models import LinkGeometry, SingleSlopeParams, TwoRayParams, pathloss
from .ingest import BinnedSample, LinkConfig, bin_samples, parse_log
from .estimate import FitResult, fit_single_slope_ml, fit_single_slope_ols, fit_two_ray_ml
from .correlate import (
    LinearCrossModel,
    autocorrelation,
    cross_correlation,
    decorrelation_distance,
    fit_double_exp,
    fit_single_exp,
)
from .fadesim import Scenario, ShadowSpec, dip_durations, gen_multilink, simultaneous_dip_durations

__version__ = "0.1.0"

__all__ = [
    "LinkGeometry", "SingleSlopeParams", "TwoRayParams", "pathloss",
    "BinnedSample", "LinkConfig", "bin_samples", "parse_log",
    "FitResult", "fit_single_slope_ml", "fit_single_slope_ols", "fit_two_ray_ml",
    "LinearCrossModel", "autocorrelation", "cross_correlation", "decorrelation_distance",
    "fit_double_exp", "fit_single_exp",
    "Scenario", "ShadowSpec", "dip_durations", "gen_multilink", "simultaneous_dip_durations",
    "__version__",
]
