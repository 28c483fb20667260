"""Input validation.

Validates the raw (already JSON-decoded) documents the CLI reads before they
are turned into domain objects:
- environment and behavior spec files
- dataset header and rows (messages carry the file line number)
- policy tables and policy class files
- tabular conditional CDF model files

Every check accumulates messages instead of stopping at the first problem, so
one run reports everything that is wrong with a file.
"""

import math
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field


PROB_SUM_TOL = 1e-9
ENV_SUM_TOL = 1e-12


class ValidationResult(BaseModel):
    """Validation result.

    Attributes:
        valid: whether validation passed
        errors: list of messages
    """
    valid: bool = Field(..., description="Whether validation passed")
    errors: List[str] = Field(default_factory=list, description="List of validation errors")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class DataValidator:
    """Validators for every input document."""

    @classmethod
    def validate_probability_vector(
        cls, vector: Any, length: int, label: str, tol: float = PROB_SUM_TOL
    ) -> List[str]:
        """Messages for a probability vector of the given length (empty if valid)."""
        if not isinstance(vector, list):
            return [f"{label} must be a list, got {type(vector).__name__}"]
        if len(vector) != length:
            return [f"{label} must have {length} entries, got {len(vector)}"]
        if not all(_is_number(p) for p in vector):
            return [f"{label} must contain only finite numbers"]
        errors = []
        if any(p < 0 for p in vector):
            errors.append(f"{label} has negative entries")
        total = math.fsum(vector)
        if abs(total - 1.0) > tol:
            errors.append(f"{label} sums to {total!r}, expected 1")
        return errors

    @classmethod
    def validate_support(cls, doc: Dict[str, Any]) -> List[str]:
        """Messages for the shared ``K`` / ``D`` keys."""
        errors = []
        if "K" not in doc:
            errors.append("Missing required field: K")
        elif not _is_int(doc["K"]) or doc["K"] < 1:
            errors.append(f"K must be a positive integer, got {doc['K']!r}")
        if "D" not in doc:
            errors.append("Missing required field: D")
        elif not _is_number(doc["D"]) or doc["D"] <= 0:
            errors.append(f"D must be a positive number, got {doc['D']!r}")
        return errors

    @classmethod
    def validate_environment_spec(cls, spec: Dict[str, Any]) -> ValidationResult:
        """Validate an environment spec.

        Layout: ``{"K": int, "D": float, "context_probs": [p_x ...],
        "rewards": [[[[y, p], ...] per action] per context]}``.
        """
        if not isinstance(spec, dict):
            return ValidationResult(valid=False, errors=["environment spec must be a JSON object"])
        errors = cls.validate_support(spec)
        if errors:
            return ValidationResult(valid=False, errors=errors)
        K, D = spec["K"], float(spec["D"])

        probs = spec.get("context_probs")
        if probs is None:
            errors.append("Missing required field: context_probs")
            return ValidationResult(valid=False, errors=errors)
        if not isinstance(probs, list) or len(probs) == 0:
            errors.append("context_probs must be a nonempty list")
            return ValidationResult(valid=False, errors=errors)
        errors.extend(cls.validate_probability_vector(probs, len(probs), "context_probs", ENV_SUM_TOL))

        rewards = spec.get("rewards")
        if not isinstance(rewards, list):
            errors.append("Missing required field: rewards")
            return ValidationResult(valid=False, errors=errors)
        if len(rewards) != len(probs):
            errors.append(f"rewards must have one entry per context ({len(probs)}), got {len(rewards)}")
            return ValidationResult(valid=False, errors=errors)

        for x, per_action in enumerate(rewards):
            if not isinstance(per_action, list) or len(per_action) != K:
                errors.append(f"rewards[{x}] must list {K} action distributions")
                continue
            for a, atoms in enumerate(per_action):
                errors.extend(cls._validate_atoms(atoms, D, f"rewards[{x}][{a}]"))

        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def _validate_atoms(cls, atoms: Any, D: float, label: str) -> List[str]:
        if not isinstance(atoms, list) or len(atoms) == 0:
            return [f"{label} must be a nonempty list of [reward, probability] pairs"]
        errors = []
        masses = []
        for j, atom in enumerate(atoms):
            if not (isinstance(atom, list) and len(atom) == 2 and all(_is_number(v) for v in atom)):
                errors.append(f"{label}[{j}] must be a [reward, probability] pair")
                continue
            y, p = atom
            if not 0.0 <= y <= D:
                errors.append(f"{label}[{j}] reward {y!r} outside [0, {D}]")
            if p < 0:
                errors.append(f"{label}[{j}] has negative probability {p!r}")
            masses.append(p)
        if masses and not errors and abs(math.fsum(masses) - 1.0) > ENV_SUM_TOL:
            errors.append(f"{label} probabilities sum to {math.fsum(masses)!r}, expected 1")
        return errors

    @classmethod
    def validate_behavior_spec(
        cls, spec: Dict[str, Any], n_contexts: Optional[int] = None, K: Optional[int] = None
    ) -> ValidationResult:
        """Validate a behavior spec ``{"propensities": [[beta(x, a) ...] per context]}``.

        Messages name the offending context.
        """
        if not isinstance(spec, dict) or "propensities" not in spec:
            return ValidationResult(valid=False, errors=["Missing required field: propensities"])
        rows = spec["propensities"]
        if not isinstance(rows, list) or len(rows) == 0:
            return ValidationResult(valid=False, errors=["propensities must be a nonempty list"])

        errors = []
        if n_contexts is not None and len(rows) != n_contexts:
            errors.append(f"propensities must have {n_contexts} rows (one per context), got {len(rows)}")
        width = K if K is not None else (len(rows[0]) if isinstance(rows[0], list) else 0)
        for x, row in enumerate(rows):
            errors.extend(cls.validate_probability_vector(row, width, f"context {x} propensities"))
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def validate_dataset_header(cls, header: Dict[str, Any]) -> ValidationResult:
        """Validate the dataset header line ``{"K", "D", "n_contexts"}``."""
        if not isinstance(header, dict):
            return ValidationResult(valid=False, errors=["line 1: header must be a JSON object"])
        errors = [f"line 1: {e}" for e in cls.validate_support(header)]
        nc = header.get("n_contexts")
        if not _is_int(nc) or nc < 1:
            errors.append(f"line 1: n_contexts must be a positive integer, got {nc!r}")
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def validate_dataset_row(
        cls, row: Dict[str, Any], line_no: int, K: int, D: float, n_contexts: int
    ) -> ValidationResult:
        """Validate one logged sample; messages are prefixed with ``line N``."""
        prefix = f"line {line_no}"
        if not isinstance(row, dict):
            return ValidationResult(valid=False, errors=[f"{prefix}: row must be a JSON object"])
        errors = []
        missing = [key for key in ("x", "a", "y", "beta") if key not in row]
        if missing:
            return ValidationResult(valid=False, errors=[f"{prefix}: missing fields {missing}"])

        x, a, y, beta = row["x"], row["a"], row["y"], row["beta"]
        if not _is_int(x) or not 0 <= x < n_contexts:
            errors.append(f"{prefix}: context {x!r} outside [0, {n_contexts})")
        if not _is_int(a) or not 0 <= a < K:
            errors.append(f"{prefix}: action {a!r} outside [0, {K})")
        if not _is_number(y) or not 0.0 <= y <= D:
            errors.append(f"{prefix}: reward {y!r} outside [0, {D}]")
        beta_errors = cls.validate_probability_vector(beta, K, "beta")
        errors.extend(f"{prefix}: {e}" for e in beta_errors)
        if not beta_errors and _is_int(a) and 0 <= a < K and beta[a] <= 0:
            errors.append(f"{prefix}: logged action {a} has zero propensity")
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def validate_policy_table(cls, table: Any, n_contexts: int, K: int, label: str = "policy") -> ValidationResult:
        """A policy is a total context -> action table."""
        if not isinstance(table, list):
            return ValidationResult(valid=False, errors=[f"{label} must be a list of actions"])
        errors = []
        if len(table) != n_contexts:
            errors.append(f"{label} must assign an action to each of {n_contexts} contexts, got {len(table)}")
        for x, a in enumerate(table):
            if not _is_int(a) or not 0 <= a < K:
                errors.append(f"{label} context {x}: action {a!r} outside [0, {K})")
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def validate_policy_class(cls, doc: Dict[str, Any], n_contexts: int, K: int) -> ValidationResult:
        """Validate ``{"policies": [[...], ...], "natarajan_dim": int | null}``."""
        if not isinstance(doc, dict) or "policies" not in doc:
            return ValidationResult(valid=False, errors=["Missing required field: policies"])
        policies = doc["policies"]
        if not isinstance(policies, list) or len(policies) == 0:
            return ValidationResult(valid=False, errors=["policies must be a nonempty list"])
        errors = []
        for k, table in enumerate(policies):
            errors.extend(cls.validate_policy_table(table, n_contexts, K, f"policies[{k}]").errors)
        dim = doc.get("natarajan_dim")
        if dim is not None and (not _is_int(dim) or dim < 0):
            errors.append(f"natarajan_dim must be a nonnegative integer or null, got {dim!r}")
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @classmethod
    def validate_step_function(cls, doc: Any, label: str) -> List[str]:
        """Messages for a serialized step function."""
        if not isinstance(doc, dict):
            return [f"{label} must be an object with base/breakpoints/values"]
        errors = []
        if not _is_number(doc.get("base", None)):
            errors.append(f"{label}.base must be a finite number")
        bps, vals = doc.get("breakpoints"), doc.get("values")
        if not isinstance(bps, list) or not isinstance(vals, list):
            errors.append(f"{label}.breakpoints and {label}.values must be lists")
            return errors
        if len(bps) != len(vals):
            errors.append(f"{label} has {len(bps)} breakpoints but {len(vals)} values")
        if not all(_is_number(t) for t in bps) or not all(_is_number(v) for v in vals):
            errors.append(f"{label} must contain only finite numbers")
            return errors
        if any(b <= a for a, b in zip(bps, bps[1:])):
            errors.append(f"{label}.breakpoints must be strictly increasing")
        return errors

    @classmethod
    def validate_model_table(cls, doc: Dict[str, Any], n_contexts: int, K: int, D: float) -> ValidationResult:
        """Validate a tabular conditional CDF model ``{"cdfs": [[stepfn per action] per context]}``.

        Every entry must be a proper CDF with breakpoints inside ``[0, D]``.
        """
        if not isinstance(doc, dict) or "cdfs" not in doc:
            return ValidationResult(valid=False, errors=["Missing required field: cdfs"])
        table = doc["cdfs"]
        if not isinstance(table, list) or len(table) != n_contexts:
            return ValidationResult(valid=False, errors=[f"cdfs must have {n_contexts} rows (one per context)"])
        errors: List[str] = []
        for x, row in enumerate(table):
            if not isinstance(row, list) or len(row) != K:
                errors.append(f"cdfs[{x}] must list {K} action CDFs")
                continue
            for a, cdf in enumerate(row):
                label = f"cdfs[{x}][{a}]"
                step_errors = cls.validate_step_function(cdf, label)
                if step_errors:
                    errors.extend(step_errors)
                    continue
                errors.extend(cls._cdf_shape_errors(cdf, D, label))
        return ValidationResult(valid=len(errors) == 0, errors=errors)

    @staticmethod
    def _cdf_shape_errors(cdf: Dict[str, Any], D: float, label: str) -> List[str]:
        errors = []
        bps: Sequence[float] = cdf["breakpoints"]
        vals: Sequence[float] = cdf["values"]
        if cdf["base"] != 0:
            errors.append(f"{label}.base must be 0")
        if any(t < 0 or t > D for t in bps):
            errors.append(f"{label} has breakpoints outside [0, {D}]")
        chain = [cdf["base"], *vals]
        if any(b < a for a, b in zip(chain, chain[1:])) or any(v < 0 or v > 1 for v in vals):
            errors.append(f"{label} must be nondecreasing with values in [0, 1]")
        if not vals or abs(vals[-1] - 1.0) > PROB_SUM_TOL:
            errors.append(f"{label} must reach 1 (proper CDF)")
        return errors
