"""Scenario library, rate fitting, acceptance experiments, and the CLI."""

from .acceptance import (
    AcceptanceLab,
    CriterionResult,
    SuiteReport,
    run_acceptance,
    suite_names,
)
from .ratefit import (
    MinDistanceReport,
    RateFit,
    RateModel,
    TailIntegralReport,
    WindowedRateReport,
    default_window,
    min_distance_rate_check,
    rate_fit,
    tail_integral_check,
    windowed_rate_check,
)
from .scenarios import ScenarioConfig, reseeded, scenario, scenario_names

__all__ = [
    "AcceptanceLab",
    "CriterionResult",
    "SuiteReport",
    "run_acceptance",
    "suite_names",
    "MinDistanceReport",
    "RateFit",
    "RateModel",
    "TailIntegralReport",
    "WindowedRateReport",
    "default_window",
    "min_distance_rate_check",
    "rate_fit",
    "tail_integral_check",
    "windowed_rate_check",
    "ScenarioConfig",
    "reseeded",
    "scenario",
    "scenario_names",
]
