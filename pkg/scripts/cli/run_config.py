#!/usr/bin/env python3
"""
HTEQ Run Configuration

Resolution order (later wins):
  1. built-in defaults (the dataclass defaults below)
  2. YAML file: --config PATH, else config/config.yaml, else config/config.example.yaml
  3. environment (auto-loaded from .env at the repo root):
       HTEQ_DATABASE_DIR, HTEQ_OUTPUT_DIR, HTEQ_SEED, HTEQ_WORKERS, HTEQ_LOG_LEVEL
  4. CLI flags

YAML layout:
  paths:     {database_dir, output_dir}
  estimator: {K, split_hz, mu, pca_high_hz}
  eq_design: {mu, d_proc_seconds, taps_Nt, fft_size}
  generator: {n_subjects, n_trials, seed, rate_hz, fft_size, device_delay_seconds}
  run:       {workers, log_level}

Unknown sections or keys are rejected (ConfigError) so typos do not silently
fall back to defaults.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

from scripts.common.hteq_errors import ConfigError, HteqError
from scripts.drp.combined_estimator import ESTIMATOR_SCHEMA_V1, EstimatorConfig
from scripts.eqdesign.eq_filter import EQ_FILTER_SCHEMA_V1, EqDesignConfig
from scripts.eval.summarize import EVAL_REPORT_SCHEMA_V1
from scripts.spectra.atf_store import DATABASE_SCHEMA_V1
from scripts.synthdata.generate_database import GeneratorConfig

REPO_ROOT = Path(__file__).resolve().parents[2]

HTEQ_VERSION = "1.0.0"
RUN_CONFIG_SCHEMA_V1 = "hteq.run_config.v1"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class PathsConfig:
    database_dir: Optional[str] = None
    output_dir: str = "out"


@dataclass(frozen=True)
class RunSettings:
    workers: int = 1
    log_level: str = "INFO"

    def __post_init__(self) -> None:
        if int(self.workers) < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        level = str(self.log_level).strip().upper()
        if level not in LOG_LEVELS:
            raise ConfigError(f"log_level must be one of {LOG_LEVELS}, got {self.log_level!r}")
        object.__setattr__(self, "workers", int(self.workers))
        object.__setattr__(self, "log_level", level)


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    eq_design: EqDesignConfig = field(default_factory=EqDesignConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    run: RunSettings = field(default_factory=RunSettings)

    @property
    def seed(self) -> int:
        return self.generator.seed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": RUN_CONFIG_SCHEMA_V1,
            "paths": asdict(self.paths),
            "estimator": self.estimator.to_dict(),
            "eq_design": self.eq_design.to_dict(),
            "generator": self.generator.to_dict(),
            "run": asdict(self.run),
        }


SECTIONS = {
    "paths": PathsConfig,
    "estimator": EstimatorConfig,
    "eq_design": EqDesignConfig,
    "generator": GeneratorConfig,
    "run": RunSettings,
}

ENV_OVERRIDES = {
    "HTEQ_DATABASE_DIR": ("paths", "database_dir", str),
    "HTEQ_OUTPUT_DIR": ("paths", "output_dir", str),
    "HTEQ_SEED": ("generator", "seed", int),
    "HTEQ_WORKERS": ("run", "workers", int),
    "HTEQ_LOG_LEVEL": ("run", "log_level", str),
}


# =============================================================================
# Sources
# =============================================================================

def load_yaml(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as ex:
        raise ConfigError(f"Invalid YAML in {path}: {ex}") from ex
    if not isinstance(data, dict):
        raise ConfigError(f"Config must be a mapping: {path}")
    return data


def find_config_file(config_path: Optional[str], repo_root: Path = REPO_ROOT) -> Optional[Path]:
    """--config if given (must exist), else config/config.yaml, else config/config.example.yaml."""
    if config_path:
        p = Path(config_path)
        if not p.is_file():
            raise ConfigError(f"--config not found: {p}")
        return p
    for candidate in (repo_root / "config" / "config.yaml", repo_root / "config" / "config.example.yaml"):
        if candidate.is_file():
            return candidate
    return None


def env_overrides(env: Mapping[str, str]) -> Dict[str, Dict[str, Any]]:
    out: Dict[str, Dict[str, Any]] = {}
    for var, (section, key, conv) in ENV_OVERRIDES.items():
        raw = env.get(var)
        if raw is None or not str(raw).strip():
            continue
        try:
            value = conv(str(raw).strip())
        except ValueError as ex:
            raise ConfigError(f"{var}={raw!r} is not a valid {conv.__name__}") from ex
        out.setdefault(section, {})[key] = value
    return out


# =============================================================================
# Resolution
# =============================================================================

def _merge(layers: list) -> Dict[str, Dict[str, Any]]:
    merged: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    for layer in layers:
        for section, values in (layer or {}).items():
            if section not in SECTIONS:
                raise ConfigError(f"Unknown config section '{section}' (expected one of {sorted(SECTIONS)})")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"Config section '{section}' must be a mapping")
            allowed = {f.name for f in fields(SECTIONS[section])}
            for key, value in values.items():
                if key not in allowed:
                    raise ConfigError(f"Unknown key '{section}.{key}' (expected one of {sorted(allowed)})")
                if value is not None:
                    merged[section][key] = value
    return merged


def build_run_config(
    file_values: Optional[Dict[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
) -> RunConfig:
    """Merge defaults < file < env < overrides and validate every section."""
    merged = _merge([file_values or {}, env_overrides(env or {}), overrides or {}])
    try:
        return RunConfig(**{name: cls(**merged[name]) for name, cls in SECTIONS.items()})
    except ConfigError:
        raise
    except HteqError as ex:
        raise ConfigError(str(ex)) from ex
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"Invalid configuration value: {ex}") from ex


def resolve_run_config(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
    env: Optional[Mapping[str, str]] = None,
    repo_root: Path = REPO_ROOT,
) -> RunConfig:
    """Full resolution: config file lookup, .env loading, process environment, flag overrides."""
    path = find_config_file(config_path, repo_root)
    file_values = load_yaml(path) if path is not None else {}
    if env is None:
        load_dotenv(repo_root / ".env")
        env = os.environ
    return build_run_config(file_values, env, overrides)


def version_text() -> str:
    d = RunConfig().to_dict()
    lines = [
        f"hteq {HTEQ_VERSION}",
        "schemas: " + ", ".join(
            [DATABASE_SCHEMA_V1, EQ_FILTER_SCHEMA_V1, ESTIMATOR_SCHEMA_V1, EVAL_REPORT_SCHEMA_V1, RUN_CONFIG_SCHEMA_V1]
        ),
    ]
    for section in ("estimator", "eq_design", "generator"):
        lines.append(f"{section}: " + ", ".join(f"{k}={v}" for k, v in sorted(d[section].items())))
    return "\n".join(lines)
