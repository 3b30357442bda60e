"""Score-pivot confidence intervals and regions under model misspecification."""

from ._pivotband import (
    PivotbandError,
    __version__,
    corrected_cov,
    covers,
    fit,
    generate,
    interval,
    pivot_stat,
    population_study,
    quantile,
    region,
    region_contains,
    run_coverage,
    sandwich_cov,
)

__all__ = [
    "PivotbandError",
    "__version__",
    "corrected_cov",
    "covers",
    "fit",
    "generate",
    "interval",
    "pivot_stat",
    "population_study",
    "quantile",
    "region",
    "region_contains",
    "run_coverage",
    "sandwich_cov",
]
