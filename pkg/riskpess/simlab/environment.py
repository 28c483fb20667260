"""Finite-context synthetic bandits and their oracle quantities.

Random draws come from counter-based Philox streams keyed by
``(seed, trial, stage)``: stage 0 draws contexts, 1 actions, 2 rewards.
Row ``i`` always consumes the ``i``-th number of each stream, so a dataset is
a pure function of its key regardless of thread scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..dataset import Dataset, Policy
from ..estimators import ConditionalCDFModel, TabularCDFModel, informative_set
from ..infrastructure.error_handler import InputValidationError
from ..infrastructure.validator import DataValidator
from ..risk import RiskFunctional, evaluate_risk
from ..stepfn import StepFn, SupportInterval, compact, from_atoms, linear_combination, sup_abs


STAGE_CONTEXT = 0
STAGE_ACTION = 1
STAGE_REWARD = 2

Atoms = Tuple[Tuple[float, float], ...]


def stream(seed: int, trial: int, stage: int) -> np.random.Generator:
    """Independent generator for one (seed, trial, stage) key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial, stage])))


def _inverse_cdf_draw(cumulative: np.ndarray, u: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Index ``k`` with ``cum[k-1] <= u < cum[k]``, never landing on a zero-mass entry."""
    idx = np.searchsorted(cumulative, u, side="right")
    last_positive = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last_positive)


@dataclass(frozen=True, eq=False)
class Environment:
    """Context distribution plus one discrete reward distribution per (context, action).

    Attributes:
        context_probs: probability of each context
        rewards: ``rewards[x][a]`` is a tuple of ``(y, p)`` atoms
        support: reward support ``[0, D]``
    """

    context_probs: np.ndarray
    rewards: Tuple[Tuple[Atoms, ...], ...]
    support: SupportInterval
    _cdfs: List[List[StepFn]] = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.array(self.context_probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "context_probs", probs)
        rewards = tuple(
            tuple(tuple((float(y), float(p)) for y, p in atoms) for atoms in row) for row in self.rewards
        )
        object.__setattr__(self, "rewards", rewards)
        result = DataValidator.validate_environment_spec(self.to_dict())
        if not result.valid:
            raise InputValidationError("invalid environment", errors=result.errors)
        cdfs = [
            [from_atoms([y for y, _ in atoms], [p for _, p in atoms]) for atoms in row]
            for row in rewards
        ]
        object.__setattr__(self, "_cdfs", cdfs)

    @property
    def n_contexts(self) -> int:
        return int(self.context_probs.size)

    @property
    def K(self) -> int:
        return len(self.rewards[0])

    def conditional_cdf(self, context: int, action: int) -> StepFn:
        return self._cdfs[context][action]

    def oracle_model(self) -> TabularCDFModel:
        """The true conditional CDFs as a model."""
        return TabularCDFModel(self._cdfs, self.support)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": len(self.rewards[0]) if self.rewards else 0,
            "D": self.support.upper,
            "context_probs": self.context_probs.tolist(),
            "rewards": [[[list(atom) for atom in atoms] for atoms in row] for row in self.rewards],
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> Environment:
        result = DataValidator.validate_environment_spec(spec)
        if not result.valid:
            raise InputValidationError("invalid environment spec", errors=result.errors)
        return cls(
            context_probs=spec["context_probs"],
            rewards=spec["rewards"],
            support=SupportInterval(upper=float(spec["D"])),
        )


@dataclass(frozen=True, eq=False)
class BehaviorSpec:
    """Per-context propensity vectors; exact zeros mark excluded actions."""

    propensities: np.ndarray

    def __post_init__(self):
        table = np.array(self.propensities, dtype=float, ndmin=2)
        result = DataValidator.validate_behavior_spec({"propensities": table.tolist()})
        if not result.valid:
            raise InputValidationError("invalid behavior spec", errors=result.errors)
        table.setflags(write=False)
        object.__setattr__(self, "propensities", table)

    def check(self, env: Environment) -> None:
        result = DataValidator.validate_behavior_spec(
            {"propensities": self.propensities.tolist()}, n_contexts=env.n_contexts, K=env.K
        )
        if not result.valid:
            raise InputValidationError("behavior spec does not fit the environment", errors=result.errors)

    def to_dict(self) -> Dict[str, Any]:
        return {"propensities": self.propensities.tolist()}

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> BehaviorSpec:
        result = DataValidator.validate_behavior_spec(spec)
        if not result.valid:
            raise InputValidationError("invalid behavior spec", errors=result.errors)
        return cls(spec["propensities"])


def true_policy_cdf(env: Environment, pi: Policy) -> StepFn:
    """``sum_x P(x) G(.|x, pi(x))``, completed to terminal value exactly 1."""
    pi.check(env.n_contexts, env.K)
    mixture = linear_combination(
        env.context_probs.tolist(),
        [env.conditional_cdf(x, pi(x)) for x in range(env.n_contexts)],
    )
    values = np.minimum(mixture.values, 1.0)
    if values.size and abs(values[-1] - 1.0) <= 1e-12:
        values[-1] = 1.0
    return compact(0.0, mixture.breakpoints, values)


def true_risk(env: Environment, pi: Policy, rho: RiskFunctional) -> float:
    return evaluate_risk(rho, true_policy_cdf(env, pi), env.support)


def sample_dataset(env: Environment, behavior: BehaviorSpec, n: int, seed: int, trial: int = 0) -> Dataset:
    """Draw ``n`` logged rows context -> action -> reward."""
    if n < 1:
        raise InputValidationError(f"n must be at least 1, got {n}")
    behavior.check(env)

    u_context = stream(seed, trial, STAGE_CONTEXT).random(n)
    u_action = stream(seed, trial, STAGE_ACTION).random(n)
    u_reward = stream(seed, trial, STAGE_REWARD).random(n)

    x = _inverse_cdf_draw(np.cumsum(env.context_probs), u_context, env.context_probs)

    a = np.empty(n, dtype=np.int64)
    for context in np.unique(x):
        rows = np.flatnonzero(x == context)
        probs = behavior.propensities[context]
        a[rows] = _inverse_cdf_draw(np.cumsum(probs), u_action[rows], probs)

    y = np.empty(n, dtype=float)
    for context in np.unique(x):
        for action in np.unique(a[x == context]):
            rows = np.flatnonzero((x == context) & (a == action))
            atoms = env.rewards[context][action]
            ys = np.array([v for v, _ in atoms])
            ps = np.array([p for _, p in atoms])
            y[rows] = ys[_inverse_cdf_draw(np.cumsum(ps), u_reward[rows], ps)]

    return Dataset(
        x=x,
        a=a,
        y=y,
        beta=behavior.propensities[x],
        n_contexts=env.n_contexts,
        support=env.support,
    )


def oracle_dr_bias(env: Environment, model: ConditionalCDFModel, data: Dataset, pi: Policy) -> float:
    """``|| (1/n) sum_{i not informative} (model - truth)(.|X_i, pi(X_i)) ||_inf``."""
    informative = np.zeros(data.n, dtype=bool)
    informative[informative_set(data, pi)] = True
    counts = np.bincount(data.x[~informative], minlength=data.n_contexts)
    coefs: List[float] = []
    parts: List[StepFn] = []
    for context in np.flatnonzero(counts):
        action = pi(int(context))
        weight = counts[context] / data.n
        coefs.extend([weight, -weight])
        parts.extend([model.model_cdf(int(context), action), env.conditional_cdf(int(context), action)])
    if not parts:
        return 0.0
    return sup_abs(linear_combination(coefs, parts))


def policy_overlap(behavior: BehaviorSpec, pi: Policy, contexts: Sequence[int] = ()) -> float:
    """``min_x beta(x, pi(x))`` over the given (default all) contexts."""
    xs = list(contexts) or list(range(behavior.propensities.shape[0]))
    return float(min(behavior.propensities[x, pi(x)] for x in xs))
