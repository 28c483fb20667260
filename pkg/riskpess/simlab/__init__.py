"""Synthetic environments, oracle quantities and Monte Carlo experiments."""

from .environment import (
    BehaviorSpec,
    Environment,
    oracle_dr_bias,
    policy_overlap,
    sample_dataset,
    true_policy_cdf,
    true_risk,
)
from .experiments import (
    MinimaxFamilySpec,
    binomial_slack,
    certificate_experiment,
    coverage_experiment,
    optimal_index,
    rate_curve,
)
from .minimax import MinimaxInstance, minimax_delta, minimax_family, sign_policy_class

__all__ = [
    "BehaviorSpec",
    "Environment",
    "MinimaxFamilySpec",
    "MinimaxInstance",
    "binomial_slack",
    "certificate_experiment",
    "coverage_experiment",
    "minimax_delta",
    "minimax_family",
    "optimal_index",
    "oracle_dr_bias",
    "policy_overlap",
    "rate_curve",
    "sample_dataset",
    "sign_policy_class",
    "true_policy_cdf",
    "true_risk",
]
