"""Hard instance family for offline risk-aware policy learning.

Each instance is indexed by a sign vector ``theta`` in ``{+1, -1}^d``. There
are ``d`` equiprobable contexts and rewards in ``{0, 1}``. Action 0 pays
``Bern(1/2 + theta_i * gap)`` in context ``i``, action 1 pays ``Bern(1/2)``,
every other action pays 0. The policy class is every sign policy: action 0
where the sign is +1 and action 1 where it is -1. The sign policy matching
``theta`` is optimal and its CDF is dominated by every other policy's CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from ..dataset import Policy, PolicyClass
from ..infrastructure.error_handler import ConfigurationError
from ..stepfn import SupportInterval
from .environment import BehaviorSpec, Environment


MAX_GAP = 0.24


def sign_vectors(d: int) -> List[Tuple[int, ...]]:
    """All ``2^d`` sign vectors, ``(+1, ..., +1)`` first."""
    return list(product((1, -1), repeat=d))


def sign_policy(signs: Tuple[int, ...]) -> Policy:
    return Policy(tuple(0 if s == 1 else 1 for s in signs))


def sign_policy_class(d: int) -> PolicyClass:
    """All sign policies on ``d`` contexts; Natarajan dimension ``d``."""
    return PolicyClass(tuple(sign_policy(s) for s in sign_vectors(d)), natarajan_dim=d)


def minimax_delta(d: int, n: int, beta_inf: float) -> float:
    """``min(sqrt(d / (24 n beta_inf)), 0.24)``."""
    if n < 1:
        raise ConfigurationError(f"n must be positive, got {n}")
    return min(math.sqrt(d / (24.0 * n * beta_inf)), MAX_GAP)


def minimax_behavior(d: int, K: int, beta_inf: float) -> BehaviorSpec:
    """``beta_inf`` on actions 0 and 1, the rest split evenly.

    With ``K = 2`` action 1 takes ``1 - beta_inf`` instead.
    """
    if K == 2:
        row = [beta_inf, 1.0 - beta_inf]
    else:
        rest = (1.0 - 2.0 * beta_inf) / (K - 2)
        row = [beta_inf, beta_inf] + [rest] * (K - 2)
    return BehaviorSpec([row] * d)


def _bernoulli(p: float) -> List[List[float]]:
    atoms = [[0.0, 1.0 - p], [1.0, p]]
    return [atom for atom in atoms if atom[1] > 0.0]


def minimax_environment(theta: Tuple[int, ...], K: int, delta_gap: float) -> Environment:
    d = len(theta)
    rewards = []
    for sign in theta:
        row = [_bernoulli(0.5 + sign * delta_gap), _bernoulli(0.5)]
        row += [[[0.0, 1.0]] for _ in range(K - 2)]
        rewards.append(row)
    return Environment(
        context_probs=np.full(d, 1.0 / d),
        rewards=rewards,
        support=SupportInterval(upper=1.0),
    )


@dataclass(frozen=True, eq=False)
class MinimaxInstance:
    """One member of the family together with its optimal sign policy."""

    theta: Tuple[int, ...]
    delta_gap: float
    beta_inf: float
    environment: Environment
    behavior: BehaviorSpec
    policy_class: PolicyClass
    optimal_index: int

    @property
    def optimal_policy(self) -> Policy:
        return self.policy_class[self.optimal_index]


def minimax_family(
    d: int,
    K: int,
    beta_inf: float,
    delta_gap: Optional[float] = None,
    n_for_default: Optional[int] = None,
) -> List[MinimaxInstance]:
    """All ``2^d`` instances, ordered like :func:`sign_vectors`.

    Without ``delta_gap`` the gap defaults to :func:`minimax_delta` at
    ``n_for_default``.
    """
    if d < 1:
        raise ConfigurationError(f"d must be at least 1, got {d}")
    if K < 2:
        raise ConfigurationError(f"the minimax family needs K >= 2, got {K}")
    if not 0.0 < beta_inf <= 0.5:
        raise ConfigurationError(f"beta_inf must lie in (0, 1/2], got {beta_inf}")
    if delta_gap is None:
        if n_for_default is None:
            raise ConfigurationError("either delta_gap or n_for_default is required")
        delta_gap = minimax_delta(d, n_for_default, beta_inf)
    if not 0.0 < delta_gap < 0.25:
        raise ConfigurationError(f"delta_gap must lie in (0, 1/4), got {delta_gap}")

    policy_class = sign_policy_class(d)
    behavior = minimax_behavior(d, K, beta_inf)
    return [
        MinimaxInstance(
            theta=theta,
            delta_gap=delta_gap,
            beta_inf=beta_inf,
            environment=minimax_environment(theta, K, delta_gap),
            behavior=behavior,
            policy_class=policy_class,
            optimal_index=index,
        )
        for index, theta in enumerate(sign_vectors(d))
    ]
