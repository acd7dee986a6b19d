"""Hypothesis testing module for the multi-manifold toolkit."""
from .sqd import ComponentSqd, SqdReport, sqd_component, sqd_total
from .testing import (
    Decision,
    FullTestResult,
    TestConfig,
    TestDistribution,
    build_params_for,
    decide,
    full_test,
    resample_distribution,
    run_full_test,
)

__all__ = [
    "ComponentSqd",
    "Decision",
    "FullTestResult",
    "SqdReport",
    "TestConfig",
    "TestDistribution",
    "build_params_for",
    "decide",
    "full_test",
    "resample_distribution",
    "run_full_test",
    "sqd_component",
    "sqd_total",
]
