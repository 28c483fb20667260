from __future__ import annotations

from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .risk import RiskFunctional


# Bumped whenever a field of a written file changes meaning.
SCHEMA_VERSION = 1


class Estimator(str, Enum):
    IS = "is"
    CLIPPED_IS = "clipped_is"
    WIS = "wis"
    DR = "dr"
    DRC = "drc"

    @property
    def is_valid_cdf(self) -> bool:
        """Outputs a (sub-)CDF that risk functionals accept."""
        return self in (Estimator.CLIPPED_IS, Estimator.WIS, Estimator.DRC)

    @property
    def needs_model(self) -> bool:
        return self in (Estimator.DR, Estimator.DRC)

    @classmethod
    def from_cli(cls, name: str) -> Estimator:
        """Map the short CLI names (is / wis / dr) to the bounded estimators."""
        aliases = {"is": cls.CLIPPED_IS, "dr": cls.DRC}
        return aliases.get(name, cls(name))


class Flavor(str, Enum):
    HOEFFDING = "hoeffding"
    BERNSTEIN = "bernstein"


class LoggedSample(BaseModel):
    """One logged row: context, action, reward and the full propensity vector."""
    model_config = ConfigDict(extra="forbid")

    x: int = Field(..., ge=0)
    a: int = Field(..., ge=0)
    y: float
    beta: List[float]

    @field_validator("beta")
    @classmethod
    def validate_beta(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("beta must be nonempty")
        if any(p < 0 for p in v):
            raise ValueError("beta has negative entries")
        if abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"beta sums to {sum(v)!r}, expected 1")
        return v


class DatasetHeader(BaseModel):
    """First line of a dataset file."""
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    K: int = Field(..., ge=1)
    D: float = Field(..., gt=0.0)
    n_contexts: int = Field(..., ge=1)


class Diagnostics(BaseModel):
    """Overlap diagnostics of one policy on one dataset."""

    informative_indices: List[int] = Field(default_factory=list, exclude=True, repr=False)
    n: int
    n_informative: int
    sigma: float          # sqrt((1/n) sum_I beta^-2)
    sigma_prime: float    # sqrt((1/n) sum_I beta^-1)
    r: float              # (n - |I|) / n
    beta_min: Optional[float] = None
    w_bar: Optional[float] = None


class BoundConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delta: float = Field(0.05, gt=0.0, lt=1.0)
    flavor: Flavor = Flavor.HOEFFDING
    estimator: Estimator = Estimator.CLIPPED_IS
    dr_bias: Optional[float] = Field(None, ge=0.0)

    @field_validator("estimator", mode="before")
    @classmethod
    def accept_short_names(cls, v):
        # enum members are never aliased
        if isinstance(v, str) and not isinstance(v, Estimator):
            return Estimator.from_cli(v)
        return v

    @field_validator("estimator")
    @classmethod
    def bounded_estimators_only(cls, v: Estimator) -> Estimator:
        if not v.is_valid_cdf:
            raise ValueError(f"estimator must be one of clipped_is, wis, drc; got {v.value}")
        return v


class ConfidenceRadius(BaseModel):
    """High-probability bound on the sup-norm CDF error, in ``[0, 1]``."""

    value: float = Field(..., ge=0.0, le=1.0)
    deviation: float
    bias: float

    @classmethod
    def from_parts(cls, deviation: float, bias: float) -> ConfidenceRadius:
        return cls(value=min(deviation + bias, 1.0), deviation=deviation, bias=bias)

    @classmethod
    def saturated(cls, bias: float) -> ConfidenceRadius:
        """Radius 1; ``deviation`` records whatever the bias leaves to reach 1."""
        return cls(value=1.0, deviation=max(1.0 - bias, 0.0), bias=bias)


class RateEnvelope(BaseModel):
    value: float
    precondition_holds: bool
    c0: float


class PolicyReport(BaseModel):
    # -inf serializes as null
    model_config = ConfigDict(ser_json_inf_nan="null")

    policy_index: int
    rho_hat: float
    radius: float
    lcb: float             # rho_hat - L * radius (-inf under the overlap-only baseline)
    deviation: float
    bias: float
    diagnostics: Diagnostics


class LearnResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="null")

    schema_version: int = SCHEMA_VERSION
    mode: Literal["pessimistic", "greedy", "overlap_only"]
    selected: int
    tie: bool = False      # several policies attained the maximum
    lipschitz: float
    lipschitz_overridden: bool = False
    natarajan_dim: int
    n: int
    risk: RiskFunctional
    config: BoundConfig
    reports: List[PolicyReport]


class SuboptimalityCertificate(BaseModel):
    star_index: int
    radius: float
    lipschitz: float
    value: float           # 2 * L * R(pi*)
    vacuous: bool          # R(pi*) saturated at 1


class EvaluationResult(BaseModel):
    schema_version: int = SCHEMA_VERSION
    estimator: Estimator
    rho_hat: float
    pointwise_radius: float
    # "pointwise" for clipped IS; WIS and DRC report their uniform radius at dimension 0
    radius_source: Literal["pointwise", "uniform_d0"] = "pointwise"
    lcb: float
    lipschitz: float
    risk: RiskFunctional
    diagnostics: Diagnostics


class CoverageReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    mode: Literal["pointwise", "uniform"]
    estimator: Estimator
    flavor: Flavor
    delta: float
    n: int
    trials: int
    seed: int
    n_policies: int
    natarajan_dim: int
    violations: int
    violation_rate: float
    ci_low: float
    ci_high: float
    slack_threshold: float  # delta + 3 * binomial standard error
    within_slack: bool
    mean_radius: float
    mean_error: float


class CoverageGridReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    cells: List[CoverageReport]


class CertificateReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    estimator: Estimator
    delta: float
    n: int
    trials: int
    seed: int
    star_index: int
    lipschitz: float
    coverage_events: int
    lcb_violations: int
    lcb_violation_rate: float
    certificate_failures: int  # counted only on trials with the coverage event
    mean_gap: float
    mean_certificate: float
    greedy_mean_gap: float


class RatePoint(BaseModel):
    n: int
    mean_gap: float
    se: float
    mean_w1: float
    violation_rate: float
    delta_gap: Optional[float] = None
    envelope: float
    certified_envelope: float
    precondition_holds: bool


class RateReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    estimator: Estimator
    risk: RiskFunctional
    delta: float
    trials_per_n: int
    seed: int
    lipschitz: float
    natarajan_dim: int
    beta_inf: float
    points: List[RatePoint]
    slope: Optional[float] = None
    slope_ci_low: Optional[float] = None
    slope_ci_high: Optional[float] = None
    intercept: Optional[float] = None
    fitted_constant: Optional[float] = None   # smallest c with mean_gap <= c * L * envelope
    certified_constant: float
    reverse_lipschitz: Optional[float] = None  # min gap / W1 over trials with W1 > 0
