"""Pessimistic policy selection.

``PolicyLearner`` scores every policy of a finite class by its plug-in risk
and a uniform confidence radius, then picks the largest lower confidence
bound. The greedy baseline ignores the radius; the overlap-only baseline
rules out every policy that lacks full overlap.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Literal, Optional

from .dataset import Dataset, Policy, PolicyClass
from .estimators import ConditionalCDFModel, diagnostics, estimate_cdf
from .infrastructure.error_handler import ConfigurationError, InputValidationError, MissingModelError
from .infrastructure.logger import StructuredLogger
from .infrastructure.metrics import MetricsCollector
from .bounds import natarajan_dim_bruteforce, uniform_radius
from .risk import RiskFunctional, evaluate_risk, lipschitz_constant
from .schemas import (
    BoundConfig,
    Estimator,
    LearnResult,
    PolicyReport,
    SuboptimalityCertificate,
)


Mode = Literal["pessimistic", "greedy", "overlap_only"]

# Per-policy DR bias (policy index, policy) -> r_bar; oracle-computed in simulation.
BiasFn = Callable[[int, Policy], float]


def plug_in_risk(
    data: Dataset,
    pi: Policy,
    rho: RiskFunctional,
    estimator: Estimator,
    model: Optional[ConditionalCDFModel] = None,
    completion: float = 1.0,
) -> float:
    """``rho`` applied to the estimated CDF of ``pi``."""
    estimator = Estimator(estimator)
    if not estimator.is_valid_cdf:
        raise ConfigurationError(
            f"plug-in risk needs clipped_is, wis or drc; {estimator.value} is not a valid CDF"
        )
    lipschitz_constant(rho, data.support)  # rejects VaR
    return evaluate_risk(rho, estimate_cdf(data, pi, estimator, model, completion), data.support)


class PolicyLearner:
    """Scores a policy class and selects by lower confidence bound.

    Attributes:
        risk: risk functional being maximized
        config: delta, flavor, estimator and optional DR bias
        model: conditional CDF model (required for drc)
        completion: value of uninformative rows in IS / WIS
        lipschitz_override: replaces the risk's own Lipschitz constant (recorded)
        threads: worker threads for per-policy evaluation
    """

    def __init__(
        self,
        risk: RiskFunctional,
        config: BoundConfig,
        model: Optional[ConditionalCDFModel] = None,
        completion: float = 1.0,
        lipschitz_override: Optional[float] = None,
        dr_bias_fn: Optional[BiasFn] = None,
        threads: int = 1,
        logger: Optional[StructuredLogger] = None,
        metrics: Optional[MetricsCollector] = None,
    ):
        if config.estimator.needs_model and model is None:
            raise MissingModelError("estimator drc needs a conditional CDF model (--model)")
        self.risk = risk
        self.config = config
        self.model = model
        self.completion = completion
        self.lipschitz_override = lipschitz_override
        self.dr_bias_fn = dr_bias_fn
        self.threads = max(1, int(threads))
        self.logger = logger
        self.metrics = metrics

    def lipschitz(self, data: Dataset) -> float:
        if self.lipschitz_override is not None:
            if self.lipschitz_override <= 0:
                raise ConfigurationError("Lipschitz override must be positive")
            # still reject functionals without a constant
            lipschitz_constant(self.risk, data.support)
            return float(self.lipschitz_override)
        return lipschitz_constant(self.risk, data.support).value

    def evaluate_policy(
        self, data: Dataset, pi: Policy, index: int, d_pi: int, lipschitz: float
    ) -> PolicyReport:
        diag = diagnostics(data, pi)
        cdf = estimate_cdf(data, pi, self.config.estimator, self.model, self.completion)
        rho_hat = evaluate_risk(self.risk, cdf, data.support)
        r_bar = self.dr_bias_fn(index, pi) if self.dr_bias_fn is not None else None
        radius = uniform_radius(diag, data.n, data.K, d_pi, self.config, r_bar=r_bar)
        return PolicyReport(
            policy_index=index,
            rho_hat=rho_hat,
            radius=radius.value,
            lcb=rho_hat - lipschitz * radius.value,
            deviation=radius.deviation,
            bias=radius.bias,
            diagnostics=diag,
        )

    @staticmethod
    def check_fits(data: Dataset, policy_class: PolicyClass) -> None:
        try:
            policy_class.check(data.n_contexts, data.K)
        except InputValidationError as e:
            raise InputValidationError(f"policy class does not fit the dataset: {e.message}")

    def resolve_dimension(self, policy_class: PolicyClass) -> int:
        if policy_class.natarajan_dim is not None:
            return policy_class.natarajan_dim
        d = natarajan_dim_bruteforce(policy_class)
        if self.logger:
            self.logger.info("Brute-forced Natarajan dimension", natarajan_dim=d, policies=len(policy_class))
        return d

    def score(
        self, data: Dataset, policy_class: PolicyClass, d_pi: Optional[int] = None
    ) -> List[PolicyReport]:
        """Per-policy reports in class order."""
        self.check_fits(data, policy_class)
        if d_pi is None:
            d_pi = self.resolve_dimension(policy_class)
        L = self.lipschitz(data)

        def run(index: int) -> PolicyReport:
            return self.evaluate_policy(data, policy_class[index], index, d_pi, L)

        indices = range(len(policy_class))
        if self.threads > 1 and len(policy_class) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                reports = list(pool.map(run, indices))
        else:
            reports = [run(k) for k in indices]

        if self.metrics:
            self.metrics.record_policy_evaluation(self.config.estimator.value, len(reports))
        return reports

    def select(self, data: Dataset, policy_class: PolicyClass, mode: Mode = "pessimistic") -> LearnResult:
        """Score the class and pick the best policy under ``mode``.

        Ties go to the smallest policy index.
        """
        start = time.perf_counter()
        self.check_fits(data, policy_class)
        d_pi = self.resolve_dimension(policy_class)
        reports = self.score(data, policy_class, d_pi)
        L = self.lipschitz(data)

        if mode == "greedy":
            keys = [r.rho_hat for r in reports]
        elif mode == "overlap_only":
            reports = [
                r if r.diagnostics.r == 0.0 else r.model_copy(update={"lcb": float("-inf")})
                for r in reports
            ]
            keys = [r.lcb for r in reports]
        elif mode == "pessimistic":
            keys = [r.lcb for r in reports]
        else:
            raise ConfigurationError(f"unknown selection mode {mode!r}")

        best = max(keys)
        selected = keys.index(best)
        result = LearnResult(
            mode=mode,
            selected=selected,
            tie=keys.count(best) > 1,
            lipschitz=L,
            lipschitz_overridden=self.lipschitz_override is not None,
            natarajan_dim=d_pi,
            n=data.n,
            risk=self.risk,
            config=self.config,
            reports=reports,
        )
        if self.logger:
            self.logger.log_event(
                "policy_selected",
                "Policy selected",
                mode=mode,
                selected=selected,
                lcb=reports[selected].lcb,
                rho_hat=reports[selected].rho_hat,
                tie=result.tie,
                policies=len(reports),
                duration_seconds=round(time.perf_counter() - start, 6),
            )
        return result


def pessimistic_select(
    data: Dataset,
    policy_class: PolicyClass,
    rho: RiskFunctional,
    config: BoundConfig,
    model: Optional[ConditionalCDFModel] = None,
    **kwargs,
) -> LearnResult:
    return PolicyLearner(rho, config, model, **kwargs).select(data, policy_class, "pessimistic")


def greedy_select(
    data: Dataset,
    policy_class: PolicyClass,
    rho: RiskFunctional,
    config: BoundConfig,
    model: Optional[ConditionalCDFModel] = None,
    **kwargs,
) -> LearnResult:
    """Argmax of the plug-in risk alone."""
    return PolicyLearner(rho, config, model, **kwargs).select(data, policy_class, "greedy")


def overlap_only_select(
    data: Dataset,
    policy_class: PolicyClass,
    rho: RiskFunctional,
    config: BoundConfig,
    model: Optional[ConditionalCDFModel] = None,
    **kwargs,
) -> LearnResult:
    """Pessimism with an infinite penalty on every policy lacking full overlap."""
    return PolicyLearner(rho, config, model, **kwargs).select(data, policy_class, "overlap_only")


def select_from_reports(reports: List[PolicyReport], mode: Mode = "pessimistic") -> int:
    """Index chosen from precomputed reports, smallest index on ties."""
    keys = [r.rho_hat if mode == "greedy" else r.lcb for r in reports]
    return keys.index(max(keys))


def suboptimality_certificate(result: LearnResult, star_index: int, L: float) -> SuboptimalityCertificate:
    """``2 L R(pi*)``; bounds the suboptimality whenever every radius covers."""
    if not 0 <= star_index < len(result.reports):
        raise InputValidationError(
            f"star_index {star_index} outside [0, {len(result.reports)})"
        )
    radius = result.reports[star_index].radius
    return SuboptimalityCertificate(
        star_index=star_index,
        radius=radius,
        lipschitz=L,
        value=2.0 * L * radius,
        vacuous=radius >= 1.0,
    )
