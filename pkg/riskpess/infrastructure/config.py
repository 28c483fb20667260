"""Configuration management.

Settings come from three places:
- Environment variables with the ``RISKPESS_`` prefix (highest priority)
- A configuration file (JSON, nested or flat; YAML if PyYAML is installed)
- Default values (fallback)

An explicitly named file must load cleanly: a missing file, a bad value or an
unknown key is a ``ConfigurationError``.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic import ValidationError as PydanticValidationError

from .error_handler import ConfigurationError


ENV_PREFIX = "RISKPESS_"


class Config(BaseModel):
    """Runtime configuration.

    Configuration priority:
    1. Environment variables (highest)
    2. Configuration file
    3. Default values (lowest)
    """

    model_config = ConfigDict(extra="forbid")

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="json")
    log_file: Optional[str] = Field(default=None)

    # Execution
    threads: int = Field(default=1, ge=1, le=256)

    # Estimation defaults
    default_delta: float = Field(default=0.05, gt=0.0, lt=1.0)
    default_flavor: str = Field(default="hoeffding")
    completion: str = Field(default="one")

    # Metrics
    metrics_enabled: bool = Field(default=False)
    metrics_file: Optional[str] = Field(default=None)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Log level must be a stdlib level name."""
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in allowed:
            raise ValueError(f"log_level must be one of {allowed}, got {v}")
        return v_upper

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        allowed = ["json", "text"]
        v_lower = v.lower()
        if v_lower not in allowed:
            raise ValueError(f"log_format must be one of {allowed}, got {v}")
        return v_lower

    @field_validator("default_flavor")
    @classmethod
    def validate_flavor(cls, v: str) -> str:
        allowed = ["hoeffding", "bernstein"]
        v_lower = v.lower()
        if v_lower not in allowed:
            raise ValueError(f"default_flavor must be one of {allowed}, got {v}")
        return v_lower

    @field_validator("completion")
    @classmethod
    def validate_completion(cls, v: str) -> str:
        allowed = ["zero", "one"]
        v_lower = v.lower()
        if v_lower not in allowed:
            raise ValueError(f"completion must be one of {allowed}, got {v}")
        return v_lower

    @property
    def completion_value(self) -> float:
        """Numeric completion constant for uninformative rows."""
        return 1.0 if self.completion == "one" else 0.0

    @classmethod
    def from_env(cls) -> Config:
        """Load configuration from ``RISKPESS_*`` environment variables."""
        env_config: Dict[str, Any] = {}

        if level := os.environ.get(f"{ENV_PREFIX}LOG_LEVEL"):
            env_config["log_level"] = level
        if fmt := os.environ.get(f"{ENV_PREFIX}LOG_FORMAT"):
            env_config["log_format"] = fmt
        if log_file := os.environ.get(f"{ENV_PREFIX}LOG_FILE"):
            env_config["log_file"] = log_file

        if threads := os.environ.get(f"{ENV_PREFIX}THREADS"):
            env_config["threads"] = int(threads)

        if delta := os.environ.get(f"{ENV_PREFIX}DELTA"):
            env_config["default_delta"] = float(delta)
        if flavor := os.environ.get(f"{ENV_PREFIX}FLAVOR"):
            env_config["default_flavor"] = flavor
        if completion := os.environ.get(f"{ENV_PREFIX}COMPLETION"):
            env_config["completion"] = completion

        if enabled := os.environ.get(f"{ENV_PREFIX}METRICS_ENABLED"):
            env_config["metrics_enabled"] = enabled.lower() in ("true", "1", "yes")
        if metrics_file := os.environ.get(f"{ENV_PREFIX}METRICS_FILE"):
            env_config["metrics_file"] = metrics_file

        return cls(**env_config)

    @classmethod
    def from_file(cls, path: str) -> Config:
        """Load configuration from a JSON or YAML file.

        Raises:
            FileNotFoundError: the file does not exist
            ValueError: the file cannot be parsed
        """
        config_path = Path(path)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        content = config_path.read_text()

        if config_path.suffix == ".json":
            try:
                file_config = json.loads(content)
            except json.JSONDecodeError as e:
                raise ValueError(f"Invalid JSON in config file: {e}")
        elif config_path.suffix in (".yaml", ".yml"):
            try:
                import yaml
                file_config = yaml.safe_load(content)
            except Exception as e:
                raise ValueError(f"Invalid YAML in config file: {e}")
        else:
            raise ValueError(f"Unsupported config file format: {config_path.suffix}")

        return cls(**cls._flatten_config(file_config or {}))

    @staticmethod
    def _flatten_config(config: Dict[str, Any]) -> Dict[str, Any]:
        """Flatten the nested file layout.

        ``{"logging": {"level": "DEBUG"}, "estimation": {"delta": 0.1}}``
        becomes ``{"log_level": "DEBUG", "default_delta": 0.1}``.
        """
        flat: Dict[str, Any] = {}
        sections = {
            "logging": {"level": "log_level", "format": "log_format", "file": "log_file"},
            "execution": {"threads": "threads"},
            "estimation": {
                "delta": "default_delta",
                "flavor": "default_flavor",
                "completion": "completion",
            },
            "metrics": {"enabled": "metrics_enabled", "file": "metrics_file"},
        }

        if not isinstance(config, dict):
            raise ValueError("config file must hold a JSON object")

        unknown = []
        for key, value in config.items():
            if key not in sections:
                flat[key] = value
                continue
            if not isinstance(value, dict):
                raise ValueError(f"section {key!r} must be an object")
            mapping = sections[key]
            for name, nested_value in value.items():
                if name not in mapping:
                    unknown.append(f"{key}.{name}")
                else:
                    flat[mapping[name]] = nested_value

        unknown += [key for key in flat if key not in Config.model_fields]
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return flat

    @classmethod
    def load(cls, config_file: Optional[str] = None) -> Config:
        """Load configuration with priority env vars > config file > defaults."""
        config_dict: Dict[str, Any] = {}

        if config_file:
            try:
                config_dict = cls.from_file(config_file).model_dump()
            except FileNotFoundError:
                raise ConfigurationError(
                    f"Config file not found: {config_file}", {"path": str(config_file)}
                )
            except PydanticValidationError as e:
                errors = [
                    f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
                    for err in e.errors()
                ]
                raise ConfigurationError(
                    f"Invalid config file: {config_file}", {"path": str(config_file), "errors": errors}
                )
            except ValueError as e:
                raise ConfigurationError(
                    f"Invalid config file: {e}", {"path": str(config_file), "errors": [str(e)]}
                )

        # only explicitly set env values override the file
        env_dict = cls.from_env().model_dump()
        defaults = cls().model_dump()
        for key, env_value in env_dict.items():
            if env_value != defaults[key]:
                config_dict[key] = env_value
            elif key not in config_dict:
                config_dict[key] = env_value

        return cls(**config_dict)
