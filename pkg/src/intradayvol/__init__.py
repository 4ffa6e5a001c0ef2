"""Intraday volume profile analytics.

Minute-bar panels, robust cumulant profiles, power-law edge fits,
profile-shape functionals, and nonstationarity tests, with a synthetic
panel generator for end-to-end checks.
"""
from __future__ import annotations

from .cumulants import (
    AggregatedProfile,
    CumulantProfile,
    aggregate_day_profiles,
    aggregate_ticker_profiles,
    cumulants_over_companies,
    cumulants_over_days,
    mean_kurtosis_tail,
    minute_sample_stats,
    sample_cumulants,
    variance_ratio,
)
from .errors import DataError, NumericalError
from .fits import (
    FitResult,
    ShapeFunctionals,
    fit_closing_powerlaw,
    fit_kurtosis_relaxation,
    fit_opening_powerlaw,
    fit_quartic,
    half_volume_time,
    polynomial_fit,
    rescaled_time,
    scatter_relation,
    shape_functionals,
)
from .metrics import (
    SemesterMetrics,
    activity,
    concavity_activity_regression,
    daily_ohlc,
    garman_klass_volatility,
    semester_endpoint_prices,
    semester_return,
)
from .panel import (
    SESSION_MINUTES,
    LoadReport,
    MinuteBar,
    MinutePanel,
    SemesterIndex,
    ValidationReport,
    assign_semesters,
    default_semester_boundaries,
    load_minute_bars,
    semester_day_indices,
    validate_panel,
    write_panel_csv,
)
from .pipeline import PipelineConfig, ReportBundle, emit_figure_series, run_pipeline
from .stats_tests import TestResult, mww_test, mww_u_statistics, welch_test, welch_test_from_moments
from .synth import GeneratorSpec, GroundTruth, IntensitySpec, NoiseSpec, analytic_profile, generate_panel

__version__ = "0.1.0"

__all__ = [
    "AggregatedProfile",
    "CumulantProfile",
    "DataError",
    "FitResult",
    "GeneratorSpec",
    "GroundTruth",
    "IntensitySpec",
    "LoadReport",
    "MinuteBar",
    "MinutePanel",
    "NoiseSpec",
    "NumericalError",
    "PipelineConfig",
    "ReportBundle",
    "SESSION_MINUTES",
    "SemesterIndex",
    "SemesterMetrics",
    "ShapeFunctionals",
    "TestResult",
    "ValidationReport",
    "activity",
    "aggregate_day_profiles",
    "aggregate_ticker_profiles",
    "analytic_profile",
    "assign_semesters",
    "concavity_activity_regression",
    "cumulants_over_companies",
    "cumulants_over_days",
    "daily_ohlc",
    "default_semester_boundaries",
    "emit_figure_series",
    "fit_closing_powerlaw",
    "fit_kurtosis_relaxation",
    "fit_opening_powerlaw",
    "fit_quartic",
    "garman_klass_volatility",
    "generate_panel",
    "half_volume_time",
    "load_minute_bars",
    "mean_kurtosis_tail",
    "minute_sample_stats",
    "mww_test",
    "mww_u_statistics",
    "polynomial_fit",
    "rescaled_time",
    "run_pipeline",
    "sample_cumulants",
    "scatter_relation",
    "semester_day_indices",
    "semester_endpoint_prices",
    "semester_return",
    "shape_functionals",
    "validate_panel",
    "variance_ratio",
    "welch_test",
    "welch_test_from_moments",
    "write_panel_csv",
]
