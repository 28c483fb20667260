"""File formats.

Datasets are JSON Lines: a header line ``{"schema_version", "K", "D",
"n_contexts"}`` followed by one ``{"x", "a", "y", "beta"}`` object per logged
sample. Every other input is a single JSON document (environment, behavior,
policy, policy class, conditional CDF model). Loaders validate with
``DataValidator`` and raise ``InputValidationError`` carrying every message.
"""

from __future__ import annotations

import errno
import json
from pathlib import Path
from typing import Any, List, Optional, Union

from pydantic import BaseModel

from .dataset import Dataset, Policy, PolicyClass
from .estimators import TabularCDFModel
from .infrastructure.error_handler import InputValidationError
from .infrastructure.validator import DataValidator
from .schemas import SCHEMA_VERSION, DatasetHeader, LoggedSample
from .simlab.environment import BehaviorSpec, Environment
from .stepfn import StepFn, SupportInterval


PathLike = Union[str, Path]


def _require_file(path: PathLike, label: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(errno.ENOENT, f"{label} file not found", str(path))
    return path


def load_json(path: PathLike, label: str = "input") -> Any:
    """Parse one JSON document, naming the file and position on errors."""
    path = _require_file(path, label)
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputValidationError(
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}",
            details={"path": str(path), "line": e.lineno, "column": e.colno},
        )


def write_json(doc: Union[BaseModel, dict, list], path: PathLike) -> Path:
    """Write ``doc`` as indented JSON with a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(doc, BaseModel):
        text = doc.model_dump_json(indent=2)
    else:
        text = json.dumps(doc, indent=2, allow_nan=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_dataset(path: PathLike) -> Dataset:
    path = _require_file(path, "dataset")
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InputValidationError(f"{path}: empty dataset file")

    try:
        header_doc = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise InputValidationError(f"{path}: line 1: invalid JSON header ({e.msg}, column {e.colno})")
    result = DataValidator.validate_dataset_header(header_doc)
    if not result.valid:
        raise InputValidationError(f"{path}: invalid dataset header", errors=result.errors)
    header = DatasetHeader(**header_doc)
    if header.schema_version != SCHEMA_VERSION:
        raise InputValidationError(
            f"{path}: line 1: schema_version {header.schema_version} is not supported (expected {SCHEMA_VERSION})"
        )

    errors: List[str] = []
    samples: List[LoggedSample] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            errors.append(f"line {line_no}: invalid JSON ({e.msg}, column {e.colno})")
            continue
        check = DataValidator.validate_dataset_row(row, line_no, header.K, header.D, header.n_contexts)
        if not check.valid:
            errors.extend(check.errors)
            continue
        samples.append(LoggedSample(**row))
    if errors:
        raise InputValidationError(f"{path}: invalid dataset rows", errors=errors)
    if not samples:
        raise InputValidationError(f"{path}: dataset has no rows")
    return Dataset.from_samples(samples, header.K, SupportInterval(upper=header.D), header.n_contexts)


def write_dataset(data: Dataset, path: PathLike) -> Path:
    """Header line plus one JSON object per row; byte-stable for equal data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = DatasetHeader(K=data.K, D=data.support.upper, n_contexts=data.n_contexts)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(header.model_dump_json() + "\n")
        for sample in data.samples():
            fh.write(sample.model_dump_json() + "\n")
    return path


def load_environment(path: PathLike) -> Environment:
    doc = load_json(path, "environment")
    result = DataValidator.validate_environment_spec(doc)
    if not result.valid:
        raise InputValidationError(f"{path}: invalid environment spec", errors=result.errors)
    return Environment.from_dict(doc)


def load_behavior(path: PathLike, env: Optional[Environment] = None) -> BehaviorSpec:
    doc = load_json(path, "behavior")
    result = DataValidator.validate_behavior_spec(
        doc,
        n_contexts=env.n_contexts if env else None,
        K=env.K if env else None,
    )
    if not result.valid:
        raise InputValidationError(f"{path}: invalid behavior spec", errors=result.errors)
    return BehaviorSpec.from_dict(doc)


def load_policy(path: PathLike, n_contexts: int, K: int) -> Policy:
    """Policy file: ``{"policy": [a_0, ..., a_{m-1}]}`` or the bare list."""
    doc = load_json(path, "policy")
    table = doc.get("policy") if isinstance(doc, dict) else doc
    result = DataValidator.validate_policy_table(table, n_contexts, K)
    if not result.valid:
        raise InputValidationError(f"{path}: invalid policy", errors=result.errors)
    return Policy(tuple(table))


def load_policy_class(path: PathLike, n_contexts: int, K: int) -> PolicyClass:
    """Class file: ``{"policies": [[...], ...], "natarajan_dim": int | null}``."""
    doc = load_json(path, "policy class")
    result = DataValidator.validate_policy_class(doc, n_contexts, K)
    if not result.valid:
        raise InputValidationError(f"{path}: invalid policy class", errors=result.errors)
    return PolicyClass(
        tuple(Policy(tuple(table)) for table in doc["policies"]),
        natarajan_dim=doc.get("natarajan_dim"),
    )


def read_policy_class(path: PathLike) -> PolicyClass:
    """Load a class file without a dataset, inferring the context count and K."""
    doc = load_json(path, "policy class")
    policies = doc.get("policies") if isinstance(doc, dict) else None
    if not isinstance(policies, list) or not policies or not isinstance(policies[0], list):
        raise InputValidationError(f"{path}: policies must be a nonempty list of action tables")
    n_contexts = len(policies[0])
    flat = [a for table in policies if isinstance(table, list) for a in table if isinstance(a, int)]
    K = doc.get("K", max(flat, default=0) + 1)
    return load_policy_class(path, n_contexts, K)


def load_model(path: PathLike, n_contexts: int, K: int, support: SupportInterval) -> TabularCDFModel:
    doc = load_json(path, "model")
    result = DataValidator.validate_model_table(doc, n_contexts, K, support.upper)
    if not result.valid:
        raise InputValidationError(f"{path}: invalid conditional CDF model", errors=result.errors)
    table = [[StepFn.from_dict(cdf) for cdf in row] for row in doc["cdfs"]]
    return TabularCDFModel(table, support)


def write_model(model: TabularCDFModel, path: PathLike) -> Path:
    return write_json(model.to_dict(), path)


def dump_stepfn(f: StepFn, path: PathLike) -> Path:
    return write_json({"schema_version": SCHEMA_VERSION, **f.to_dict()}, path)
