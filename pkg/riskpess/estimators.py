"""Off-policy CDF estimators.

All estimators return exact ``StepFn`` objects built from the logged rewards
(and, for the doubly robust family, the breakpoints of the model CDFs). Rows
whose context gives zero behavior propensity to the target action are
uninformative; they enter the IS and WIS estimates only through the
completion constant (1 by default, which is the pessimistic choice for
monotone risks).
"""

from __future__ import annotations

from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .dataset import Dataset, Policy
from .infrastructure.error_handler import (
    ConfigurationError,
    InputValidationError,
    InvalidCDFError,
    MissingModelError,
)
from .schemas import Diagnostics, Estimator
from .stepfn import (
    StepFn,
    SupportInterval,
    clip_unit,
    compact,
    constant,
    monotonize_clip,
)


class ConditionalCDFModel(Protocol):
    """Model of the reward CDF given context and action."""

    def model_cdf(self, context: int, action: int) -> StepFn:
        ...


class TabularCDFModel:
    """Conditional CDF model stored as one proper CDF per (context, action)."""

    def __init__(self, table: Sequence[Sequence[StepFn]], support: SupportInterval):
        rows = [list(row) for row in table]
        if not rows or any(len(row) != len(rows[0]) for row in rows):
            raise InputValidationError("model table must have the same number of actions per context")
        errors = []
        for x, row in enumerate(rows):
            for a, cdf in enumerate(row):
                if not cdf.is_proper:
                    errors.append(f"model CDF ({x}, {a}) is not a proper CDF")
        if errors:
            raise InputValidationError("invalid conditional CDF model", errors=errors)
        self._table: List[List[StepFn]] = rows
        self.support = support

    @property
    def n_contexts(self) -> int:
        return len(self._table)

    @property
    def K(self) -> int:
        return len(self._table[0])

    def model_cdf(self, context: int, action: int) -> StepFn:
        return self._table[context][action]

    @classmethod
    def uniform(cls, cdf: StepFn, n_contexts: int, K: int, support: SupportInterval) -> TabularCDFModel:
        """The same CDF for every (context, action); a deliberately wrong model."""
        return cls([[cdf] * K for _ in range(n_contexts)], support)

    def to_dict(self) -> Dict:
        return {
            "D": self.support.upper,
            "cdfs": [[cdf.to_dict() for cdf in row] for row in self._table],
        }


def _weights(data: Dataset, pi: Policy) -> Tuple[np.ndarray, np.ndarray]:
    """Target propensities and importance weights ``1{A = pi(X)} / beta(X, pi(X))``."""
    target = data.target_propensity(pi)
    informative = target != 0.0
    w = np.zeros(data.n)
    matched = data.matches(pi) & informative
    w[matched] = 1.0 / target[matched]
    return target, w


def informative_set(data: Dataset, pi: Policy) -> np.ndarray:
    """Indices ``i`` with ``beta(X_i, pi(X_i)) != 0`` (exact zero test)."""
    return np.flatnonzero(data.target_propensity(pi) != 0.0)


def diagnostics(data: Dataset, pi: Policy) -> Diagnostics:
    target, w = _weights(data, pi)
    idx = np.flatnonzero(target != 0.0)
    n = data.n
    b = target[idx]
    has_overlap = idx.size > 0
    return Diagnostics(
        informative_indices=idx.tolist(),
        n=n,
        n_informative=int(idx.size),
        sigma=float(np.sqrt(np.sum(b ** -2.0) / n)) if has_overlap else 0.0,
        sigma_prime=float(np.sqrt(np.sum(1.0 / b) / n)) if has_overlap else 0.0,
        r=(n - idx.size) / n,
        beta_min=float(b.min()) if has_overlap else None,
        w_bar=float(w[idx].mean()) if has_overlap else None,
    )


def _jump_function(base: float, rewards: np.ndarray, weights: np.ndarray, scale: float) -> StepFn:
    """``base + (1 / scale) sum_i weights_i 1{rewards_i <= t}``."""
    keep = weights != 0.0
    support, inverse = np.unique(rewards[keep], return_inverse=True)
    mass = np.bincount(inverse, weights=weights[keep], minlength=support.size)
    return compact(base, support, base + np.cumsum(mass) / scale)


def is_cdf_estimate(data: Dataset, pi: Policy, completion: float = 1.0) -> StepFn:
    """Importance-sampling CDF; may exceed 1."""
    target, w = _weights(data, pi)
    r = float(np.count_nonzero(target == 0.0)) / data.n
    return _jump_function(r * completion, data.y, w, data.n)


def clipped_is_estimate(data: Dataset, pi: Policy, completion: float = 1.0) -> StepFn:
    return clip_unit(is_cdf_estimate(data, pi, completion))


def wis_cdf_estimate(data: Dataset, pi: Policy, completion: float = 1.0) -> StepFn:
    """Self-normalized IS CDF.

    Falls back to the constant completion when no row is informative or no
    informative row took the target action.
    """
    target, w = _weights(data, pi)
    informative = target != 0.0
    n_informative = int(np.count_nonzero(informative))
    if n_informative == 0:
        return constant(completion)
    w_bar = float(w[informative].mean())
    if w_bar == 0.0:
        return constant(completion)
    r = (data.n - n_informative) / data.n
    f = _jump_function(r * completion, data.y, w, data.n * w_bar)
    return compact(f.base, f.breakpoints, np.minimum(f.values, 1.0))


def _model_cdf_checked(model: ConditionalCDFModel, x: int, a: int, support: SupportInterval) -> StepFn:
    cdf = model.model_cdf(x, a)
    if cdf.breakpoints.size and (cdf.breakpoints[0] < 0.0 or cdf.breakpoints[-1] > support.upper):
        raise InvalidCDFError(
            f"model CDF for context {x}, action {a} has breakpoints outside [0, {support.upper}]"
        )
    if not cdf.is_proper:
        raise InvalidCDFError(f"model CDF for context {x}, action {a} is not a proper CDF")
    return cdf


def dr_cdf_estimate(data: Dataset, pi: Policy, model: Optional[ConditionalCDFModel]) -> StepFn:
    """Doubly robust CDF; may be non-monotone and leave ``[0, 1]``.

    Rows with ``w_i > 0`` took the target action, so their correction
    ``G(.|X_i, A_i)`` equals ``G(.|X_i, pi(X_i))``. Grouping rows by context
    the estimate is ``sum_x c_x G(.|x, pi(x)) + (1/n) sum_i w_i 1{Y_i <= t}``
    with ``c_x = (1/n) sum_{X_i = x} (1 - w_i)``.
    """
    if model is None:
        raise MissingModelError("the doubly robust estimator needs a conditional CDF model")
    _, w = _weights(data, pi)
    n = data.n
    coef = np.bincount(data.x, weights=1.0 - w, minlength=data.n_contexts) / n
    seen = np.bincount(data.x, minlength=data.n_contexts) > 0

    model_parts = [
        (float(coef[x]), _model_cdf_checked(model, x, pi(x), data.support))
        for x in np.flatnonzero(seen)
    ]
    jumps = _jump_function(0.0, data.y, w, n)

    grid = np.unique(np.concatenate([jumps.breakpoints] + [cdf.breakpoints for _, cdf in model_parts]))
    values = jumps(grid) + sum(c * cdf(grid) for c, cdf in model_parts)
    base = sum(c * cdf.base for c, cdf in model_parts)
    return compact(float(base), grid, np.asarray(values, dtype=float))


def drc_cdf_estimate(data: Dataset, pi: Policy, model: Optional[ConditionalCDFModel]) -> StepFn:
    return monotonize_clip(dr_cdf_estimate(data, pi, model))


def estimate_cdf(
    data: Dataset,
    pi: Policy,
    estimator: Estimator,
    model: Optional[ConditionalCDFModel] = None,
    completion: float = 1.0,
) -> StepFn:
    """Dispatch to one of the five estimators."""
    estimator = Estimator(estimator)
    if estimator == Estimator.IS:
        return is_cdf_estimate(data, pi, completion)
    if estimator == Estimator.CLIPPED_IS:
        return clipped_is_estimate(data, pi, completion)
    if estimator == Estimator.WIS:
        return wis_cdf_estimate(data, pi, completion)
    if estimator == Estimator.DR:
        return dr_cdf_estimate(data, pi, model)
    if estimator == Estimator.DRC:
        return drc_cdf_estimate(data, pi, model)
    raise ConfigurationError(f"unknown estimator {estimator!r}")
