#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
riskpess - Quick Start Example

Samples a logged dataset from the bundled environment, evaluates one policy,
then compares greedy and pessimistic selection on the lure dataset where a
barely-logged action looks best.

Usage:
    python scripts/quick_start.py [n]
"""

import sys
from pathlib import Path

# Add project root directory to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from riskpess.estimators import diagnostics
from riskpess.infrastructure.config import Config
from riskpess.infrastructure.logger import StructuredLogger
from riskpess.io import load_behavior, load_environment, load_policy, load_policy_class, read_dataset
from riskpess.learner import PolicyLearner, plug_in_risk
from riskpess.risk import CVaRRisk, MeanRisk
from riskpess.schemas import BoundConfig
from riskpess.simlab import sample_dataset, true_risk

FIXTURES = project_root / "fixtures"


def main():
    print("riskpess - Quick Start\n")

    config = Config.load()
    logger = StructuredLogger("quick_start", log_level=config.log_level, log_format="text")
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

    # 1. Sample a dataset
    print("Sampling a logged dataset...")
    env = load_environment(FIXTURES / "env_partial.json")
    behavior = load_behavior(FIXTURES / "behavior_partial.json", env)
    data = sample_dataset(env, behavior, n, seed=1)
    print(f"   n={data.n} contexts={data.n_contexts} K={data.K}")

    # 2. Evaluate one policy
    print("\nEvaluating policy [0, 1, 1] under CVaR(0.5)...")
    pi = load_policy(FIXTURES / "policy_partial.json", env.n_contexts, env.K)
    rho = CVaRRisk(alpha=0.5)
    diag = diagnostics(data, pi)
    print(f"   informative rows: {diag.n_informative}/{diag.n} (r = {diag.r:.3f})")
    print(f"   plug-in risk:     {plug_in_risk(data, pi, rho, BoundConfig().estimator):.4f}")
    print(f"   true risk:        {true_risk(env, pi, rho):.4f}")

    # 3. Select over the full class
    policy_class = load_policy_class(FIXTURES / "class_partial.json", env.n_contexts, env.K)
    result = PolicyLearner(rho, BoundConfig(), threads=config.threads, logger=logger).select(data, policy_class)
    chosen = policy_class[result.selected]
    print(f"\nPessimistic choice: policy {list(chosen.table)} (lcb {result.reports[result.selected].lcb:.4f})")

    # 4. The lure
    print("\nLure dataset: action 1 was logged once with propensity 0.002")
    lure = read_dataset(FIXTURES / "lure_data.jsonl")
    lure_class = load_policy_class(FIXTURES / "lure_class.json", lure.n_contexts, lure.K)
    learner = PolicyLearner(MeanRisk(), BoundConfig())
    for mode in ("greedy", "pessimistic"):
        picked = learner.select(lure, lure_class, mode)
        report = picked.reports[picked.selected]
        print(f"   {mode:<12} -> policy {list(lure_class[picked.selected].table)} "
              f"rho_hat={report.rho_hat:.4f} radius={report.radius:.4f}")

    print("\nDone!")
    print("   - CLI help: python -m riskpess --help")
    print("   - Experiments: python -m riskpess coverage fixtures/coverage.json")


if __name__ == "__main__":
    main()
