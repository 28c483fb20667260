"""Data-dependent confidence radii on the sup-norm CDF error.

Pointwise radii hold for one fixed policy; uniform radii hold simultaneously
for every policy of a class with Natarajan dimension ``d``. All radii are
clamped to 1, the largest possible sup-norm gap between a (sub-)CDF and a CDF.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .dataset import PolicyClass
from .infrastructure.error_handler import ConfigurationError, GuardExceededError, MissingBiasError
from .schemas import BoundConfig, ConfidenceRadius, Diagnostics, Estimator, Flavor, RateEnvelope


MAX_BRUTEFORCE_CONTEXTS = 12
MAX_BRUTEFORCE_POLICIES = 4096


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")


def _complexity(n: int, K: int, d_pi: int, delta: float, head: float = 20.0) -> float:
    """``log(head / delta) + d * log(n K^2)``."""
    return math.log(head / delta) + d_pi * math.log(n * K * K)


def pointwise_bound(diag: Diagnostics, n: int, delta: float, flavor: Flavor = Flavor.HOEFFDING) -> ConfidenceRadius:
    """Radius for one fixed policy and the clipped IS estimator."""
    _check_delta(delta)
    if diag.n_informative == 0:
        return ConfidenceRadius.saturated(bias=diag.r)
    log_term = math.log(8.0 / delta)
    root = math.sqrt(8.0 / n * log_term)
    if Flavor(flavor) == Flavor.BERNSTEIN:
        deviation = (diag.sigma_prime + 1.0) * root + 2.0 * log_term / (3.0 * n * diag.beta_min)
    else:
        deviation = (diag.sigma + 1.0) * root
    return ConfidenceRadius.from_parts(deviation, diag.r)


def uniform_is_radius(
    diag: Diagnostics, n: int, K: int, d_pi: int, delta: float, flavor: Flavor = Flavor.HOEFFDING
) -> ConfidenceRadius:
    """Uniform radius for clipped IS.

    The Bernstein flavor swaps ``sigma`` for ``sigma'`` and adds a
    ``2 C / (3 n beta_min)`` term, ``C`` being the complexity term.
    """
    _check_delta(delta)
    if diag.n_informative == 0:
        return ConfidenceRadius.saturated(bias=diag.r)
    complexity = _complexity(n, K, d_pi, delta)
    root = math.sqrt(8.0 / n * complexity)
    if Flavor(flavor) == Flavor.BERNSTEIN:
        deviation = (diag.sigma_prime + 2.0) * root + 2.0 * complexity / (3.0 * n * diag.beta_min)
    else:
        deviation = (diag.sigma + 2.0) * root
    return ConfidenceRadius.from_parts(deviation, diag.r)


def wis_eta(diag: Diagnostics, n: int, K: int, d_pi: int, delta: float) -> float:
    """Deviation of the mean importance weight from 1, as used by the WIS radius."""
    complexity = _complexity(n, K, d_pi, delta, head=8.0)
    return diag.sigma * math.sqrt(n / (2.0 * diag.n_informative ** 2) * complexity)


def wis_eta_from_propensities(
    informative_propensities: Sequence[float], n: int, K: int, d_pi: int, delta: float
) -> float:
    """Same quantity written over the informative rows only."""
    b = np.asarray(informative_propensities, dtype=float)
    size = b.size
    complexity = _complexity(n, K, d_pi, delta, head=8.0)
    return math.sqrt(complexity / (2.0 * size)) * math.sqrt(float(np.sum(b ** -2.0)) / size)


def uniform_wis_radius(diag: Diagnostics, n: int, K: int, d_pi: int, delta: float) -> ConfidenceRadius:
    _check_delta(delta)
    if diag.n_informative == 0:
        return ConfidenceRadius.saturated(bias=diag.r)
    eta = wis_eta(diag, n, K, d_pi, delta)
    if eta >= 1.0:
        return ConfidenceRadius.saturated(bias=diag.r)
    root = math.sqrt(8.0 / n * _complexity(n, K, d_pi, delta))
    deviation = (diag.sigma / (1.0 - eta) + 2.0) * root + diag.n_informative / n * eta / (1.0 - eta)
    return ConfidenceRadius.from_parts(deviation, diag.r)


def uniform_dr_radius(
    diag: Diagnostics, n: int, K: int, d_pi: int, delta: float, r_bar: Optional[float]
) -> ConfidenceRadius:
    """Uniform radius for clipped-monotonized DR.

    ``r_bar`` bounds the model error on uninformative rows. It depends on the
    true reward distribution and must be supplied; ``diag.r`` is always a
    valid (worst-case) choice.
    """
    _check_delta(delta)
    if r_bar is None:
        raise MissingBiasError(
            "the DR radius needs an explicit model-bias bound r_bar (r_pi is always valid)"
        )
    if r_bar < 0:
        raise ConfigurationError(f"r_bar must be nonnegative, got {r_bar}")
    root = math.sqrt(8.0 / n * _complexity(n, K, d_pi, delta))
    return ConfidenceRadius.from_parts(2.0 * (diag.sigma + 1.0) * root, r_bar)


def uniform_radius(
    diag: Diagnostics,
    n: int,
    K: int,
    d_pi: int,
    config: BoundConfig,
    r_bar: Optional[float] = None,
) -> ConfidenceRadius:
    """Uniform radius matching ``config.estimator``.

    ``r_bar`` overrides ``config.dr_bias`` for the DR radius.
    """
    if config.estimator == Estimator.CLIPPED_IS:
        return uniform_is_radius(diag, n, K, d_pi, config.delta, config.flavor)
    if config.estimator == Estimator.WIS:
        return uniform_wis_radius(diag, n, K, d_pi, config.delta)
    if config.estimator == Estimator.DRC:
        return uniform_dr_radius(diag, n, K, d_pi, config.delta, r_bar if r_bar is not None else config.dr_bias)
    raise ConfigurationError(f"no confidence radius for estimator {config.estimator.value}")


def certified_rate_constant(c0: float) -> float:
    """Constant ``c`` that makes the rate envelope a certified bound."""
    return 8.0 * (4.0 * math.sqrt(2.0) + math.sqrt(c0) / 3.0)


def corollary_rate(
    n: int, K: int, d_pi: int, delta: float, beta_inf: float, c0: float = 1.0
) -> RateEnvelope:
    """``sqrt(d log(n K^2) log(20 / delta) / (n beta_inf))``, without the ``c L`` factor.

    The precondition ``log(20/delta) + d log(nK^2) <= c0 n beta_inf`` is
    reported, never enforced.
    """
    _check_delta(delta)
    if not 0.0 < beta_inf <= 1.0:
        raise ConfigurationError(f"beta_inf must lie in (0, 1], got {beta_inf}")
    value = math.sqrt(d_pi * math.log(n * K * K) * math.log(20.0 / delta) / (n * beta_inf))
    holds = _complexity(n, K, d_pi, delta) <= c0 * n * beta_inf
    return RateEnvelope(value=value, precondition_holds=holds, c0=c0)


def _shattered(patterns: set, m: int) -> bool:
    """Whether the projected patterns on an ``m``-set admit a shattering witness pair."""
    if len(patterns) < 2 ** m:
        return False
    ordered = sorted(patterns)
    for i, f1 in enumerate(ordered):
        for f2 in ordered[i + 1:]:
            if any(u == v for u, v in zip(f1, f2)):
                continue
            if all(
                tuple(f1[k] if (mask >> k) & 1 else f2[k] for k in range(m)) in patterns
                for mask in range(2 ** m)
            ):
                return True
    return False


def natarajan_dim_bruteforce(
    policy_class: PolicyClass, context_universe: Optional[Sequence[int]] = None
) -> int:
    """Largest ``m`` such that some ``m`` contexts are Natarajan-shattered.

    Shattering is hereditary, so the search stops at the first size with no
    shattered subset.
    """
    contexts = list(range(policy_class.n_contexts)) if context_universe is None else list(context_universe)
    if len(contexts) > MAX_BRUTEFORCE_CONTEXTS or len(policy_class) > MAX_BRUTEFORCE_POLICIES:
        raise GuardExceededError(
            f"brute-force Natarajan search limited to {MAX_BRUTEFORCE_CONTEXTS} contexts and "
            f"{MAX_BRUTEFORCE_POLICIES} policies; got {len(contexts)} contexts and "
            f"{len(policy_class)} policies. Declare natarajan_dim in the class file instead.",
            details={"contexts": len(contexts), "policies": len(policy_class)},
        )
    table = np.array([p.table for p in policy_class], dtype=np.int64)[:, contexts]

    best = 0
    for m in range(1, len(contexts) + 1):
        found = False
        for subset in combinations(range(len(contexts)), m):
            patterns = {tuple(row) for row in table[:, subset].tolist()}
            if _shattered(patterns, m):
                found = True
                break
        if not found:
            break
        best = m
    return best


def natarajan_growth_bound(n_contexts: int, K: int, d_pi: int) -> int:
    """``m^d K^(2d)``, an upper bound on the size of any class of dimension ``d``."""
    return n_contexts ** d_pi * K ** (2 * d_pi)


def satisfies_growth_bound(policy_class: PolicyClass, K: int, d_pi: int) -> bool:
    """Distinct policies never outnumber the growth bound."""
    distinct = len({p.table for p in policy_class})
    return distinct <= natarajan_growth_bound(policy_class.n_contexts, K, d_pi)
