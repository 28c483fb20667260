"""Logged bandit data, deterministic policies and finite policy classes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .infrastructure.error_handler import InputValidationError
from .schemas import LoggedSample
from .stepfn import SupportInterval


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-stored logged samples ``(x_i, a_i, y_i, beta(x_i, .))``.

    Attributes:
        x: context ids, shape (n,)
        a: logged actions, shape (n,)
        y: rewards in ``[0, D]``, shape (n,)
        beta: full propensity vectors, shape (n, K)
        n_contexts: size of the finite context universe
        support: reward support
    """

    x: np.ndarray
    a: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    n_contexts: int
    support: SupportInterval

    def __post_init__(self):
        x = _readonly(np.array(self.x, dtype=np.int64).reshape(-1))
        a = _readonly(np.array(self.a, dtype=np.int64).reshape(-1))
        y = _readonly(np.array(self.y, dtype=float).reshape(-1))
        beta = _readonly(np.array(self.beta, dtype=float, ndmin=2))
        errors: List[str] = []
        n = x.size
        if n == 0:
            errors.append("dataset must contain at least one sample")
        if not (a.size == y.size == beta.shape[0] == n):
            errors.append("x, a, y and beta must have the same number of rows")
        if errors:
            raise InputValidationError("invalid dataset", errors=errors)

        K = beta.shape[1]
        rows = np.arange(n)
        if np.any((x < 0) | (x >= self.n_contexts)):
            errors.append(f"contexts must lie in [0, {self.n_contexts})")
        if np.any((a < 0) | (a >= K)):
            errors.append(f"actions must lie in [0, {K})")
        if np.any((y < 0) | (y > self.support.upper)) or not np.all(np.isfinite(y)):
            errors.append(f"rewards must lie in [0, {self.support.upper}]")
        if np.any(beta < 0) or np.any(np.abs(beta.sum(axis=1) - 1.0) > 1e-9):
            errors.append("propensity rows must be probability vectors")
        if not errors and np.any(beta[rows, a] <= 0):
            errors.append("every logged action must have positive propensity")
        if errors:
            raise InputValidationError("invalid dataset", errors=errors)

        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def K(self) -> int:
        return int(self.beta.shape[1])

    @classmethod
    def from_samples(
        cls, samples: Sequence[LoggedSample], K: int, support: SupportInterval, n_contexts: int
    ) -> Dataset:
        if any(len(s.beta) != K for s in samples):
            raise InputValidationError(f"every sample needs a propensity vector of length {K}")
        return cls(
            x=[s.x for s in samples],
            a=[s.a for s in samples],
            y=[s.y for s in samples],
            beta=np.array([s.beta for s in samples], dtype=float).reshape(len(samples), K),
            n_contexts=n_contexts,
            support=support,
        )

    def samples(self) -> Iterator[LoggedSample]:
        for i in range(self.n):
            yield LoggedSample(
                x=int(self.x[i]), a=int(self.a[i]), y=float(self.y[i]), beta=self.beta[i].tolist()
            )

    def target_propensity(self, pi: Policy) -> np.ndarray:
        """``beta(X_i, pi(X_i))`` per row."""
        return self.beta[np.arange(self.n), pi.actions(self.x)]

    def matches(self, pi: Policy) -> np.ndarray:
        return self.a == pi.actions(self.x)


@dataclass(frozen=True)
class Policy:
    """Deterministic context -> action table."""

    table: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(a) for a in self.table))

    def actions(self, contexts: np.ndarray) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)[contexts]

    def __call__(self, context: int) -> int:
        return self.table[context]

    def check(self, n_contexts: int, K: int) -> None:
        """Raise unless the table is total on ``n_contexts`` with actions in ``[0, K)``."""
        if len(self.table) != n_contexts:
            raise InputValidationError(
                f"policy covers {len(self.table)} contexts, expected {n_contexts}"
            )
        bad = [x for x, a in enumerate(self.table) if not 0 <= a < K]
        if bad:
            raise InputValidationError(f"policy actions outside [0, {K}) at contexts {bad}")


@dataclass(frozen=True)
class PolicyClass:
    """Finite ordered policy class with an optional declared Natarajan dimension."""

    policies: Tuple[Policy, ...]
    natarajan_dim: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        if not self.policies:
            raise InputValidationError("policy class must be nonempty")
        if self.natarajan_dim is not None and self.natarajan_dim < 0:
            raise InputValidationError("natarajan_dim must be nonnegative")
        widths = {len(p.table) for p in self.policies}
        if len(widths) != 1:
            raise InputValidationError("all policies must cover the same contexts")

    def __len__(self) -> int:
        return len(self.policies)

    def __getitem__(self, index: int) -> Policy:
        return self.policies[index]

    def __iter__(self) -> Iterator[Policy]:
        return iter(self.policies)

    @property
    def n_contexts(self) -> int:
        return len(self.policies[0].table)

    def check(self, n_contexts: int, K: int) -> None:
        for policy in self.policies:
            policy.check(n_contexts, K)

    def with_dimension(self, d: int) -> PolicyClass:
        return PolicyClass(self.policies, d)
