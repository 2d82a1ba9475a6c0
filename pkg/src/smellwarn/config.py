"""Run configuration: defaults < config file < environment < command line."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError
from .ingest import DEFAULT_SEVERITY_MAP, SeverityMap
from .npstats import RhoBands

ENV_PREFIX = "SMELLWARN_"

CUTOFF_MODES = ("ceiling", "floor")
RANK_UNITS = ("instance", "rule")


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    out: str = "smellwarn-out"
    source_roots: list = field(default_factory=lambda: ["src/main/java", "src/test/java", "src"])
    severity_map: Optional[str] = None
    alpha: float = 0.05
    rho_moderate: float = 0.4
    rho_strong: float = 0.7
    cutoff_mode: str = "ceiling"
    rank_unit: str = "instance"
    rank_tools: list = field(default_factory=list)  # empty = every tool
    p_combo: str = "NCO"  # combination for the P ranker, or "all"
    min_pairs: int = 5
    jobs: int = 1
    seed: int = 0
    deterministic: bool = False
    keep_going: bool = False

    def validate(self) -> "RunConfig":
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.cutoff_mode not in CUTOFF_MODES:
            raise ConfigError(f"cutoff mode must be one of {CUTOFF_MODES}")
        if self.rank_unit not in RANK_UNITS:
            raise ConfigError(f"ranking unit must be one of {RANK_UNITS}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.min_pairs < 1:
            raise ConfigError("min_pairs must be at least 1")
        if self.severity_map and not Path(self.severity_map).is_file():
            raise ConfigError(f"severity map {self.severity_map} does not exist")
        try:
            self.bands()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def bands(self) -> RhoBands:
        return RhoBands(self.rho_moderate, self.rho_strong)

    def mapping(self) -> SeverityMap:
        return SeverityMap.load(self.severity_map) if self.severity_map else DEFAULT_SEVERITY_MAP

    def recorded(self) -> dict[str, Any]:
        """Settings that shape results, for output metadata (no paths)."""
        skip = {"inputs", "out", "jobs", "keep_going", "deterministic"}
        d = {k: v for k, v in dataclasses.asdict(self).items() if k not in skip}
        if d["severity_map"]:
            d["severity_map"] = self.mapping().to_dict()
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value: Any) -> Any:
    default = getattr(RunConfig(), name)
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(value)
                return low in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            if isinstance(value, str):
                return [v for v in (p.strip() for p in value.split(",")) if v]
            return list(value)
        return None if value is None else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


def _overlay(cfg: RunConfig, values: Mapping[str, Any], origin: str) -> None:
    for key, value in values.items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigError(f"{origin}: unknown setting {key!r}")
        setattr(cfg, name, _coerce(name, value))


def from_env(environ: Mapping[str, str]) -> dict[str, str]:
    return {k[len(ENV_PREFIX):].lower(): v for k, v in environ.items() if k.startswith(ENV_PREFIX) and k != ENV_PREFIX + "CONFIG"}


def load_config(
    cli: Optional[Mapping[str, Any]] = None,
    config_file: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Resolve the effective configuration.

    ``cli`` holds only the options actually given on the command line.
    """
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    config_file = config_file or environ.get(ENV_PREFIX + "CONFIG")
    if config_file:
        try:
            doc = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_file}: {exc}") from exc
        if not isinstance(doc, dict) or any(isinstance(v, dict) for v in doc.values()):
            raise ConfigError("config file must be a flat JSON object")
        _overlay(cfg, doc, str(config_file))
    _overlay(cfg, from_env(environ), "environment")
    _overlay(cfg, cli or {}, "command line")
    return cfg.validate()
