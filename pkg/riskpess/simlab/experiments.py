"""Monte Carlo experiments against oracle truths.

Every experiment is a list of independent trials keyed by ``(seed, trial)``.
Trials may run on a thread pool; their results are collected in trial order
so reports are identical for any worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from ..bounds import (
    certified_rate_constant,
    corollary_rate,
    natarajan_dim_bruteforce,
    pointwise_bound,
    uniform_radius,
)
from ..dataset import Dataset, Policy, PolicyClass
from ..estimators import ConditionalCDFModel, diagnostics, estimate_cdf
from ..infrastructure.error_handler import ConfigurationError, InputValidationError
from ..infrastructure.logger import StructuredLogger
from ..infrastructure.metrics import MetricsCollector
from ..learner import PolicyLearner, select_from_reports
from ..risk import RiskFunctional, lipschitz_constant
from ..schemas import (
    BoundConfig,
    CertificateReport,
    ConfidenceRadius,
    CoverageReport,
    Estimator,
    PolicyReport,
    RatePoint,
    RateReport,
)
from ..stepfn import StepFn, SupportInterval, sup_norm_distance, wasserstein1
from .environment import (
    BehaviorSpec,
    Environment,
    oracle_dr_bias,
    policy_overlap,
    sample_dataset,
    true_policy_cdf,
    true_risk,
)
from .minimax import MinimaxInstance, minimax_family, sign_policy_class


MIN_COVERAGE_TRIALS = 100
MIN_RATE_POINTS = 4
# Float slack when comparing a bound against the quantity it bounds.
COMPARE_TOL = 1e-12

T = TypeVar("T")


def _run_trials(fn: Callable[[int], T], trial_ids: Sequence[int], threads: int) -> List[T]:
    if threads > 1 and len(trial_ids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, trial_ids))
    return [fn(t) for t in trial_ids]


def binomial_slack(delta: float, trials: int) -> float:
    """``delta + 3 sqrt(delta (1 - delta) / trials)``."""
    return delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)


def _resolve_dimension(policy_class: PolicyClass, logger: Optional[StructuredLogger]) -> PolicyClass:
    if policy_class.natarajan_dim is not None:
        return policy_class
    d = natarajan_dim_bruteforce(policy_class)
    if logger:
        logger.info("Brute-forced Natarajan dimension", natarajan_dim=d, policies=len(policy_class))
    return policy_class.with_dimension(d)


def _bias_fn(env: Environment, model: Optional[ConditionalCDFModel], data: Dataset, config: BoundConfig):
    """Oracle ``r_bar`` for the DR radius, ``None`` for other estimators."""
    if config.estimator != Estimator.DRC:
        return None
    return lambda _index, pi: oracle_dr_bias(env, model, data, pi)


def _all_covered(
    data: Dataset,
    policy_class: PolicyClass,
    reports: Sequence[PolicyReport],
    truths: Sequence[StepFn],
    config: BoundConfig,
    model: Optional[ConditionalCDFModel],
    completion: float,
) -> bool:
    """Whether every policy's estimate lies within its radius of the truth."""
    for pi, report, truth in zip(policy_class, reports, truths):
        cdf = estimate_cdf(data, pi, config.estimator, model, completion)
        if sup_norm_distance(cdf, truth) > report.radius + COMPARE_TOL:
            return False
    return True


@dataclass(frozen=True)
class _CoverageTrial:
    violated: bool
    mean_radius: float
    mean_error: float
    duration: float


def coverage_experiment(
    env: Environment,
    behavior: BehaviorSpec,
    target: Union[Policy, PolicyClass],
    config: BoundConfig,
    n: int,
    trials: int,
    seed: int,
    model: Optional[ConditionalCDFModel] = None,
    completion: float = 1.0,
    threads: int = 1,
    force_radius_one: bool = False,
    logger: Optional[StructuredLogger] = None,
    metrics: Optional[MetricsCollector] = None,
) -> CoverageReport:
    """Violation rate of the confidence radius over repeated datasets.

    A single ``Policy`` uses the pointwise radius (the uniform radius with
    ``d = 0`` for WIS and DR); a ``PolicyClass`` uses the uniform radius and a
    trial violates when any policy does. DR radii use the oracle ``r_bar``.
    """
    if trials < MIN_COVERAGE_TRIALS:
        raise ConfigurationError(f"coverage needs at least {MIN_COVERAGE_TRIALS} trials, got {trials}")
    behavior.check(env)
    pointwise = isinstance(target, Policy)
    target.check(env.n_contexts, env.K)
    policy_class = PolicyClass((target,), natarajan_dim=0) if pointwise else _resolve_dimension(target, logger)
    d_pi = policy_class.natarajan_dim
    truths = [true_policy_cdf(env, pi) for pi in policy_class]
    experiment = f"coverage_{'pointwise' if pointwise else 'uniform'}"

    def radius_for(data: Dataset, pi: Policy) -> ConfidenceRadius:
        if force_radius_one:
            return ConfidenceRadius(value=1.0, deviation=1.0, bias=0.0)
        diag = diagnostics(data, pi)
        if pointwise and config.estimator == Estimator.CLIPPED_IS:
            return pointwise_bound(diag, n, config.delta, config.flavor)
        r_bar = oracle_dr_bias(env, model, data, pi) if config.estimator == Estimator.DRC else None
        return uniform_radius(diag, n, data.K, d_pi, config, r_bar=r_bar)

    def run(trial: int) -> _CoverageTrial:
        start = time.perf_counter()
        data = sample_dataset(env, behavior, n, seed, trial)
        radii, errors = [], []
        for pi, truth in zip(policy_class, truths):
            cdf = estimate_cdf(data, pi, config.estimator, model, completion)
            errors.append(sup_norm_distance(cdf, truth))
            radii.append(radius_for(data, pi).value)
        violated = any(e > r + COMPARE_TOL for e, r in zip(errors, radii))
        return _CoverageTrial(violated, float(np.mean(radii)), float(np.mean(errors)), time.perf_counter() - start)

    if logger:
        logger.log_event(
            "experiment_started", "Coverage experiment started",
            experiment=experiment, estimator=config.estimator.value, n=n, trials=trials, seed=seed,
        )
    results = _run_trials(run, range(trials), threads)

    if metrics:
        for r in results:
            metrics.record_trial(experiment, r.duration, r.violated)

    violations = sum(r.violated for r in results)
    ci = stats.binomtest(violations, trials).proportion_ci(confidence_level=0.95, method="exact")
    rate = violations / trials
    slack = binomial_slack(config.delta, trials)
    report = CoverageReport(
        mode="pointwise" if pointwise else "uniform",
        estimator=config.estimator,
        flavor=config.flavor,
        delta=config.delta,
        n=n,
        trials=trials,
        seed=seed,
        n_policies=len(policy_class),
        natarajan_dim=d_pi,
        violations=violations,
        violation_rate=rate,
        ci_low=float(ci.low),
        ci_high=float(ci.high),
        slack_threshold=slack,
        within_slack=rate <= slack,
        mean_radius=math.fsum(r.mean_radius for r in results) / trials,
        mean_error=math.fsum(r.mean_error for r in results) / trials,
    )
    if logger:
        logger.log_event(
            "experiment_finished", "Coverage experiment finished",
            experiment=experiment, violations=violations, violation_rate=rate, within_slack=report.within_slack,
        )
    return report


def optimal_index(risks: Sequence[float]) -> int:
    """Smallest index attaining the maximum true risk."""
    return int(np.argmax(np.asarray(risks)))


@dataclass(frozen=True)
class _CertificateTrial:
    covered: bool
    lcb_valid: bool
    certificate_holds: bool
    gap: float
    certificate: float
    greedy_gap: float
    duration: float


def certificate_experiment(
    env: Environment,
    behavior: BehaviorSpec,
    policy_class: PolicyClass,
    rho: RiskFunctional,
    config: BoundConfig,
    n: int,
    trials: int,
    seed: int,
    model: Optional[ConditionalCDFModel] = None,
    completion: float = 1.0,
    threads: int = 1,
    logger: Optional[StructuredLogger] = None,
    metrics: Optional[MetricsCollector] = None,
) -> CertificateReport:
    """Check the suboptimality certificate ``2 L R(pi*)`` trial by trial.

    The certificate is only claimed on trials where every radius covers; the
    report counts failures among those trials alone.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be positive, got {trials}")
    behavior.check(env)
    policy_class.check(env.n_contexts, env.K)
    policy_class = _resolve_dimension(policy_class, logger)
    truths = [true_policy_cdf(env, pi) for pi in policy_class]
    risks = [true_risk(env, pi, rho) for pi in policy_class]
    star = optimal_index(risks)
    L = lipschitz_constant(rho, env.support).value

    def run(trial: int) -> _CertificateTrial:
        start = time.perf_counter()
        data = sample_dataset(env, behavior, n, seed, trial)
        learner = PolicyLearner(rho, config, model, completion, dr_bias_fn=_bias_fn(env, model, data, config))
        reports = learner.score(data, policy_class, policy_class.natarajan_dim)
        covered = _all_covered(data, policy_class, reports, truths, config, model, completion)
        lcb_valid = all(risk >= report.lcb - COMPARE_TOL for risk, report in zip(risks, reports))
        chosen = select_from_reports(reports, "pessimistic")
        gap = risks[star] - risks[chosen]
        certificate = 2.0 * L * reports[star].radius
        return _CertificateTrial(
            covered=covered,
            lcb_valid=lcb_valid,
            certificate_holds=gap <= certificate + COMPARE_TOL,
            gap=gap,
            certificate=certificate,
            greedy_gap=risks[star] - risks[select_from_reports(reports, "greedy")],
            duration=time.perf_counter() - start,
        )

    results = _run_trials(run, range(trials), threads)
    if metrics:
        for r in results:
            metrics.record_trial("certificate", r.duration, not r.covered)

    failures = sum(r.covered and not r.certificate_holds for r in results)
    lcb_violations = sum(not r.lcb_valid for r in results)
    report = CertificateReport(
        estimator=config.estimator,
        delta=config.delta,
        n=n,
        trials=trials,
        seed=seed,
        star_index=star,
        lipschitz=L,
        coverage_events=sum(r.covered for r in results),
        lcb_violations=lcb_violations,
        lcb_violation_rate=lcb_violations / trials,
        certificate_failures=failures,
        mean_gap=math.fsum(r.gap for r in results) / trials,
        mean_certificate=math.fsum(r.certificate for r in results) / trials,
        greedy_mean_gap=math.fsum(r.greedy_gap for r in results) / trials,
    )
    if logger:
        logger.log_event(
            "experiment_finished", "Certificate experiment finished",
            experiment="certificate", coverage_events=report.coverage_events,
            certificate_failures=failures, mean_gap=report.mean_gap,
        )
    return report


class MinimaxFamilySpec(BaseModel):
    """Minimax family parameters; ``delta_gap`` omitted means a per-n gap."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(..., ge=1, le=10)
    K: int = Field(2, ge=2)
    beta_inf: float = Field(..., gt=0.0, le=0.5)
    delta_gap: Optional[float] = Field(None, gt=0.0, lt=0.25)

    def build(self, n: int) -> List[MinimaxInstance]:
        return minimax_family(self.d, self.K, self.beta_inf, self.delta_gap, n_for_default=n)


@dataclass(frozen=True)
class _Oracle:
    """One environment with its precomputed true CDFs and risks."""

    env: Environment
    behavior: BehaviorSpec
    truths: List[StepFn]
    risks: List[float]
    star: int

    @classmethod
    def of(cls, env: Environment, behavior: BehaviorSpec, policy_class: PolicyClass, rho: RiskFunctional) -> _Oracle:
        truths = [true_policy_cdf(env, pi) for pi in policy_class]
        risks = [true_risk(env, pi, rho) for pi in policy_class]
        return cls(env, behavior, truths, risks, optimal_index(risks))


@dataclass(frozen=True)
class _RateTrial:
    gap: float
    w1: float
    violated: bool
    duration: float


def _log_log_fit(ns: Sequence[int], gaps: Sequence[float]):
    """Least-squares slope of log(gap) on log(n) with a 95% t interval.

    Points with zero mean gap are dropped; fewer than three remaining points
    give no fit.
    """
    pairs = [(n, g) for n, g in zip(ns, gaps) if g > 0.0]
    if len(pairs) < 3:
        return None
    x = np.log([n for n, _ in pairs])
    y = np.log([g for _, g in pairs])
    fit = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, len(pairs) - 2)) * fit.stderr
    return float(fit.slope), float(fit.slope - half), float(fit.slope + half), float(fit.intercept)


def rate_curve(
    rho: RiskFunctional,
    config: BoundConfig,
    n_grid: Sequence[int],
    trials_per_n: int,
    seed: int,
    family: Optional[MinimaxFamilySpec] = None,
    env: Optional[Environment] = None,
    behavior: Optional[BehaviorSpec] = None,
    policy_class: Optional[PolicyClass] = None,
    model: Optional[ConditionalCDFModel] = None,
    completion: float = 1.0,
    c0: float = 1.0,
    threads: int = 1,
    logger: Optional[StructuredLogger] = None,
    metrics: Optional[MetricsCollector] = None,
) -> RateReport:
    """Mean suboptimality of pessimistic selection as a function of ``n``.

    Runs either on a minimax family (trial ``t`` uses instance ``t mod 2^d``)
    or on one environment with its behavior and policy class. Trial ids run
    ``n_index * trials_per_n + t`` so every ``(n, t)`` pair gets its own
    streams.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < MIN_RATE_POINTS or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigurationError(
            f"n_grid must be strictly increasing with at least {MIN_RATE_POINTS} points, got {n_grid}"
        )
    if n_grid[0] < 1:
        raise ConfigurationError("n_grid entries must be positive")
    if trials_per_n < 1:
        raise ConfigurationError(f"trials_per_n must be positive, got {trials_per_n}")
    if (family is None) == (env is None):
        raise ConfigurationError("rate_curve needs exactly one of a minimax family or an environment")

    if family is not None:
        policy_class = sign_policy_class(family.d)
        beta_inf = family.beta_inf
        K = family.K
        support = SupportInterval(upper=1.0)
        fixed: Optional[List[_Oracle]] = None
        if family.delta_gap is not None:
            fixed = [_Oracle.of(i.environment, i.behavior, policy_class, rho) for i in family.build(n_grid[0])]
    else:
        if behavior is None or policy_class is None:
            raise InputValidationError("an environment-based rate curve needs behavior and policy_class")
        behavior.check(env)
        policy_class.check(env.n_contexts, env.K)
        policy_class = _resolve_dimension(policy_class, logger)
        fixed = [_Oracle.of(env, behavior, policy_class, rho)]
        beta_inf = policy_overlap(behavior, policy_class[fixed[0].star])
        K = env.K
        support = env.support
        if beta_inf <= 0.0:
            raise ConfigurationError("the optimal policy has no overlap; the rate envelope is undefined")

    d_pi = policy_class.natarajan_dim
    L = lipschitz_constant(rho, support).value
    certified = certified_rate_constant(c0)

    points: List[RatePoint] = []
    ratios: List[float] = []
    for j, n in enumerate(n_grid):
        oracles = fixed
        gap_param = family.delta_gap if family is not None else None
        if oracles is None:
            instances = family.build(n)
            gap_param = instances[0].delta_gap
            oracles = [_Oracle.of(i.environment, i.behavior, policy_class, rho) for i in instances]

        def run(trial: int, n=n, oracles=oracles, j=j) -> _RateTrial:
            start = time.perf_counter()
            oracle = oracles[(trial - j * trials_per_n) % len(oracles)]
            data = sample_dataset(oracle.env, oracle.behavior, n, seed, trial)
            learner = PolicyLearner(
                rho, config, model, completion, dr_bias_fn=_bias_fn(oracle.env, model, data, config)
            )
            reports = learner.score(data, policy_class, d_pi)
            chosen = select_from_reports(reports, "pessimistic")
            covered = _all_covered(data, policy_class, reports, oracle.truths, config, model, completion)
            return _RateTrial(
                gap=oracle.risks[oracle.star] - oracle.risks[chosen],
                w1=wasserstein1(oracle.truths[oracle.star], oracle.truths[chosen], oracle.env.support),
                violated=not covered,
                duration=time.perf_counter() - start,
            )

        results = _run_trials(run, range(j * trials_per_n, (j + 1) * trials_per_n), threads)
        if metrics:
            for r in results:
                metrics.record_trial("rate_curve", r.duration, r.violated)

        gaps = np.array([r.gap for r in results])
        ratios.extend(r.gap / r.w1 for r in results if r.w1 > 0.0)
        envelope = corollary_rate(n, K, d_pi, config.delta, beta_inf, c0)
        points.append(
            RatePoint(
                n=n,
                mean_gap=math.fsum(gaps) / trials_per_n,
                se=float(np.std(gaps, ddof=1) / math.sqrt(trials_per_n)) if trials_per_n > 1 else 0.0,
                mean_w1=math.fsum(r.w1 for r in results) / trials_per_n,
                violation_rate=sum(r.violated for r in results) / trials_per_n,
                delta_gap=gap_param,
                envelope=envelope.value,
                certified_envelope=certified * L * envelope.value,
                precondition_holds=envelope.precondition_holds,
            )
        )
        if logger:
            logger.log_progress("rate_curve", j + 1, len(n_grid), n=n, mean_gap=points[-1].mean_gap)

    fit = _log_log_fit([p.n for p in points], [p.mean_gap for p in points])
    scaled = [p.mean_gap / (L * p.envelope) for p in points if p.envelope > 0.0]
    report = RateReport(
        estimator=config.estimator,
        risk=rho,
        delta=config.delta,
        trials_per_n=trials_per_n,
        seed=seed,
        lipschitz=L,
        natarajan_dim=d_pi,
        beta_inf=beta_inf,
        points=points,
        slope=fit[0] if fit else None,
        slope_ci_low=fit[1] if fit else None,
        slope_ci_high=fit[2] if fit else None,
        intercept=fit[3] if fit else None,
        fitted_constant=max(scaled) if scaled else None,
        certified_constant=certified,
        reverse_lipschitz=min(ratios) if ratios else None,
    )
    if logger:
        logger.log_event(
            "experiment_finished", "Rate curve finished",
            experiment="rate_curve", slope=report.slope, points=len(points),
        )
    return report
