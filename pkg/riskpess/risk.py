"""Risk functionals on reward CDFs supported on ``[0, D]``.

Every functional is evaluated exactly from its integral representation over
the constant pieces of the CDF. Piecewise-linear distortion and utility
functions keep those integrals closed-form. Mass missing from a sub-CDF is
treated as sitting at ``D``.

Functionals are pydantic models discriminated on ``kind`` so that the JSON
form ``{"kind": "cvar", "alpha": 0.9}`` parses directly into one of them.
"""

from __future__ import annotations

import json
import math
from typing import Annotated, List, Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

from .infrastructure.error_handler import InvalidCDFError, NotLipschitzError
from .stepfn import StepFn, SupportInterval


class LipschitzConstant(BaseModel):
    value: float = Field(..., gt=0.0)


class _PiecewiseLinear(BaseModel):
    """Knots ``(u_k, g_k)`` joined linearly; constant beyond the last knot."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    knots: List[Tuple[float, float]]

    @field_validator("knots")
    @classmethod
    def validate_knots(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if len(v) < 2:
            raise ValueError("at least two knots are required")
        us = [u for u, _ in v]
        gs = [g for _, g in v]
        if any(b <= a for a, b in zip(us, us[1:])):
            raise ValueError("knot positions must be strictly increasing")
        if any(b < a for a, b in zip(gs, gs[1:])):
            raise ValueError("knot values must be nondecreasing")
        return v

    @property
    def positions(self) -> np.ndarray:
        return np.array([u for u, _ in self.knots], dtype=float)

    @property
    def heights(self) -> np.ndarray:
        return np.array([g for _, g in self.knots], dtype=float)

    def __call__(self, u):
        return np.interp(u, self.positions, self.heights)

    @property
    def max_slope(self) -> float:
        return float(np.max(np.diff(self.heights) / np.diff(self.positions)))


class DistortionFn(_PiecewiseLinear):
    """Nondecreasing ``g: [0, 1] -> [0, 1]`` with ``g(0) = 0`` and ``g(1) = 1``."""

    @field_validator("knots")
    @classmethod
    def validate_endpoints(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if v[0] != (0.0, 0.0) or v[-1] != (1.0, 1.0):
            raise ValueError("distortion must start at (0, 0) and end at (1, 1)")
        return v

    @classmethod
    def identity(cls) -> DistortionFn:
        return cls(knots=[(0.0, 0.0), (1.0, 1.0)])

    @classmethod
    def cvar_kink(cls, alpha: float) -> DistortionFn:
        """``g(x) = min(x / (1 - alpha), 1)``."""
        return cls(knots=[(0.0, 0.0), (1.0 - alpha, 1.0), (1.0, 1.0)])


class Utility(_PiecewiseLinear):
    """Gain-side utility ``u+`` on ``[0, D]`` with ``u+(0) = 0``."""

    @field_validator("knots")
    @classmethod
    def validate_origin(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if v[0] != (0.0, 0.0):
            raise ValueError("utility must start at (0, 0)")
        return v


def _segments(
    f: StepFn, support: SupportInterval, extra: Sequence[float] = ()
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left ends, right ends and CDF values of the constant pieces on ``[0, D]``."""
    if not f.is_monotone_unit:
        raise InvalidCDFError(
            "risk evaluation needs a nondecreasing function with values in [0, 1]; "
            "apply monotonize_clip first"
        )
    D = support.upper
    grid = np.union1d(np.concatenate((f.breakpoints, np.asarray(extra, dtype=float))), [0.0, D])
    grid = grid[(grid >= 0.0) & (grid <= D)]
    left, right = grid[:-1], grid[1:]
    return left, right, np.asarray(f(left), dtype=float)


class _Risk(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    def evaluate(self, f: StepFn, support: SupportInterval) -> float:
        raise NotImplementedError

    def lipschitz(self, support: SupportInterval) -> float:
        raise NotImplementedError

    @property
    def is_monotone(self) -> bool:
        return True


class MeanRisk(_Risk):
    kind: Literal["mean"] = "mean"

    def evaluate(self, f, support):
        left, right, F = _segments(f, support)
        return float(np.sum((1.0 - F) * (right - left)))

    def lipschitz(self, support):
        return support.upper


class VarianceRisk(_Risk):
    kind: Literal["variance"] = "variance"

    def evaluate(self, f, support):
        left, right, F = _segments(f, support)
        mean = np.sum((1.0 - F) * (right - left))
        second = np.sum((1.0 - F) * (right ** 2 - left ** 2))
        return float(max(second - mean ** 2, 0.0))

    def lipschitz(self, support):
        return 3.0 * support.upper ** 2

    @property
    def is_monotone(self) -> bool:
        return False


class MeanVarianceRisk(_Risk):
    """``E[X] + alpha * Var(X)``."""

    kind: Literal["mean_variance"] = "mean_variance"
    alpha: float

    def evaluate(self, f, support):
        return MeanRisk().evaluate(f, support) + self.alpha * VarianceRisk().evaluate(f, support)

    def lipschitz(self, support):
        D = support.upper
        return D + 3.0 * abs(self.alpha) * D ** 2

    @property
    def is_monotone(self) -> bool:
        return self.alpha == 0.0


class EntropicRisk(_Risk):
    """``(1 / alpha) log E[exp(alpha X)]``."""

    kind: Literal["entropic"] = "entropic"
    alpha: float

    @field_validator("alpha")
    @classmethod
    def nonzero(cls, v: float) -> float:
        if v == 0.0:
            raise ValueError("entropic alpha must be nonzero")
        return v

    def evaluate(self, f, support):
        left, right, F = _segments(f, support)
        a = self.alpha
        # E[e^{aX}] = 1 + int_0^D a e^{at} (1 - F(t)) dt, closed form per segment
        mgf = 1.0 + np.sum((1.0 - F) * (np.exp(a * right) - np.exp(a * left)))
        return float(math.log(mgf) / a)

    def lipschitz(self, support):
        a, D = self.alpha, support.upper
        if a > 0:
            return math.expm1(a * D) / a
        return math.expm1(a * D) / (a * math.exp(a * D))


class VaRRisk(_Risk):
    """Lower ``alpha``-quantile; no finite sup-norm Lipschitz constant."""

    kind: Literal["var"] = "var"
    alpha: float = Field(..., gt=0.0, lt=1.0)

    def evaluate(self, f, support):
        if not f.is_monotone_unit:
            raise InvalidCDFError("VaR needs a nondecreasing function with values in [0, 1]")
        D = support.upper
        if f.base >= self.alpha:
            return 0.0
        hits = np.flatnonzero(f.values >= self.alpha)
        if hits.size == 0:
            return D
        return float(np.clip(f.breakpoints[hits[0]], 0.0, D))

    def lipschitz(self, support):
        raise NotLipschitzError(
            f"VaR(alpha={self.alpha}) has no finite sup-norm Lipschitz constant; "
            "use cvar for pessimistic learning",
            details={"kind": self.kind, "alpha": self.alpha},
        )


class CVaRRisk(_Risk):
    """Mean of the upper ``1 - alpha`` tail: ``int_0^D min((1 - F) / (1 - alpha), 1)``."""

    kind: Literal["cvar"] = "cvar"
    alpha: float = Field(..., gt=0.0, lt=1.0)

    def evaluate(self, f, support):
        left, right, F = _segments(f, support)
        return float(np.sum(np.minimum((1.0 - F) / (1.0 - self.alpha), 1.0) * (right - left)))

    def lipschitz(self, support):
        return support.upper / (1.0 - self.alpha)


class DistortedRisk(_Risk):
    """``int_0^D g(1 - F(t)) dt``."""

    kind: Literal["distorted"] = "distorted"
    g: DistortionFn

    def evaluate(self, f, support):
        left, right, F = _segments(f, support)
        return float(np.sum(self.g(1.0 - F) * (right - left)))

    def lipschitz(self, support):
        return support.upper * self.g.max_slope


class CPTRisk(_Risk):
    """Gain side of cumulative prospect theory; losses vanish on ``[0, D]``.

    ``int_0^inf w+(P(u+(X) > s)) ds = int_0^D w+(1 - F(t)) du+(t)``.
    """

    kind: Literal["cpt"] = "cpt"
    u_plus: Utility
    w_plus: DistortionFn

    def evaluate(self, f, support):
        left, right, F = _segments(f, support, extra=self.u_plus.positions)
        return float(np.sum(self.w_plus(1.0 - F) * (self.u_plus(right) - self.u_plus(left))))

    def lipschitz(self, support):
        top = float(self.u_plus(support.upper))
        if top <= 0.0:
            raise NotLipschitzError("CPT utility must satisfy u+(D) > 0")
        return top * self.w_plus.max_slope


RiskFunctional = Annotated[
    Union[
        MeanRisk,
        VarianceRisk,
        MeanVarianceRisk,
        EntropicRisk,
        VaRRisk,
        CVaRRisk,
        DistortedRisk,
        CPTRisk,
    ],
    Field(discriminator="kind"),
]

_RISK_ADAPTER: TypeAdapter = TypeAdapter(RiskFunctional)


def parse_risk(spec: Union[str, dict]) -> RiskFunctional:
    """Parse a risk functional from its JSON text or decoded dict."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    return _RISK_ADAPTER.validate_python(spec)


def evaluate_risk(rho: RiskFunctional, f: StepFn, support: SupportInterval) -> float:
    return rho.evaluate(f, support)


def lipschitz_constant(rho: RiskFunctional, support: SupportInterval) -> LipschitzConstant:
    """Sup-norm Lipschitz constant on distributions over ``[0, D]``."""
    return LipschitzConstant(value=rho.lipschitz(support))


def is_monotone_risk(rho: RiskFunctional) -> bool:
    return rho.is_monotone
