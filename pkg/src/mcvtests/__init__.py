"""Tests for multivariate coefficients of variation in factorial designs.

Point estimates, delta-method variances, asymptotic chi-square Wald tests
and their permutation counterparts, plus a Monte Carlo harness and a CLI.
"""

from .contrasts import DesignSpec, one_way_contrast, two_way_contrast, validate_contrast
from .datasets import IngestSpec, load_dataset
from .distributions import (
    PopulationSpec,
    chi2_cdf,
    chi2_quantile,
    chi2_sf,
    sample_population,
    scenario_mean_vector,
)
from .errors import MCVError
from .estimators import (
    GroupEstimates,
    GroupSample,
    asymptotic_variances,
    estimate_moments,
    mcv_and_std_mean,
    mcv_variance,
)
from .linalg import ContrastSpec, kronecker, moore_penrose, projection_matrix, vec
from .permutation import (
    PermutationPlan,
    permutation_distribution,
    permutation_quantile,
    permutation_test,
    permute_sample,
    run_tests,
)
from .simulation import (
    RateReport,
    ScenarioConfig,
    binomial_band,
    run_scenario,
    table_preset,
)
from .wald import TestResult, asymptotic_test, wald_statistic

__version__ = "0.1.0"

__all__ = [
    "MCVError",
    "GroupSample",
    "GroupEstimates",
    "ContrastSpec",
    "DesignSpec",
    "IngestSpec",
    "PermutationPlan",
    "PopulationSpec",
    "RateReport",
    "ScenarioConfig",
    "TestResult",
    "asymptotic_test",
    "asymptotic_variances",
    "binomial_band",
    "chi2_cdf",
    "chi2_quantile",
    "chi2_sf",
    "estimate_moments",
    "kronecker",
    "load_dataset",
    "mcv_and_std_mean",
    "mcv_variance",
    "moore_penrose",
    "one_way_contrast",
    "permutation_distribution",
    "permutation_quantile",
    "permutation_test",
    "permute_sample",
    "projection_matrix",
    "run_scenario",
    "run_tests",
    "sample_population",
    "scenario_mean_vector",
    "table_preset",
    "two_way_contrast",
    "validate_contrast",
    "vec",
    "wald_statistic",
]
