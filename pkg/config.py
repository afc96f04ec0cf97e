"""
Configuration settings for the complex-action lab
Ambient run settings plus the JSON scenario configs that drive the CLI
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from errors import ConfigurationError
from parallel import MAX_SEED

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ARTIFACT_VERSION = "1.0.0"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class Config:
    """Ambient settings shared by every scenario run."""

    # Output
    output_directory: str = "output"

    # Execution
    workers: int = 1
    log_level: str = "INFO"

    # Size caps
    enumeration_cap: int = 10_000_000  # brute-force paths
    expansion_cap: int = 100_000_000  # tape symbols
    max_transfer_sites: int = 4096

    # Classical solver
    solver_tolerance: float = 1e-10
    newton_max_iterations: int = 200
    newton_max_halvings: int = 30
    dedup_tolerance: float = 1e-6

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigurationError(f"must be >= 1, got {self.workers}", field="workers")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigurationError(f"must be one of {LOG_LEVELS}, got {self.log_level!r}", field="log_level")
        self.log_level = self.log_level.upper()
        for name in ("enumeration_cap", "expansion_cap", "max_transfer_sites", "newton_max_iterations"):
            if getattr(self, name) < 1:
                raise ConfigurationError("must be >= 1", field=name)
        if not self.solver_tolerance > 0 or not self.dedup_tolerance > 0:
            raise ConfigurationError("tolerances must be positive", field="solver_tolerance")

    @classmethod
    def from_env(cls, **overrides) -> "Config":
        """Defaults, then CAL_* environment variables, then explicit overrides."""
        values: Dict[str, Any] = {}
        if os.getenv("CAL_WORKERS"):
            try:
                values["workers"] = int(os.environ["CAL_WORKERS"])
            except ValueError:
                raise ConfigurationError(f"not an integer: {os.environ['CAL_WORKERS']!r}", field="CAL_WORKERS")
        if os.getenv("CAL_OUTPUT_DIR"):
            values["output_directory"] = os.environ["CAL_OUTPUT_DIR"]
        if os.getenv("CAL_LOG_LEVEL"):
            values["log_level"] = os.environ["CAL_LOG_LEVEL"]
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


# Parameter blocks of every scenario kind; a config may override any of these keys and no others
SCENARIO_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "propagator-check": {
        "n_x": 5,
        "n_t": 4,
        "dt": 0.1,
        "dx": 0.5,
        "x_min": -1.0,
        "mass": 1.0,
        "hbar": 1.0,
        "degree": 4,
        "coefficient_scale": 0.5,
    },
    "classical-select": {
        "n_t": 40,
        "dt": 0.1,
        "x_min": -2.5,
        "dx": 0.1,
        "n_x": 51,
        "mass": 1.0,
        "hbar": 1.0,
        "boundary": [-1.0, -1.0],
        "well_minimum": 1.0,
        "well_scale": 0.25,
        "imag_scale": 1.0,
        "n_seeds": 16,
    },
    "measurement": {
        "labels": ["up", "down"],
        "amplitudes": [[1.0, 0.0], [1.7320508075688772, 0.0]],
        "base_s_i": [0.0, 0.0],
        "noise": {"kind": "gumbel", "location": 0.0, "scale": 1.0, "n_stages": 1},
        "n_trials": 20000,
        "hbar": 1.0,
    },
    "double-slit": {
        "n_x": 161,
        "dx": 0.1,
        "x_min": -8.0,
        "n_t": 60,
        "dt": 0.02,
        "mass": 1.0,
        "hbar": 1.0,
        "slit_time": 25,
        "duration": 5,
        "separation": 20,
        "width": 3,
        "gap": 0.0,
        "source_width": 1.0,
        "screen_half_width": 15,
        "engine": "split_step",
    },
    "higgs-toy": {
        "n_t": 10,
        "dt": 0.1,
        "x_min": -5.0,
        "dx": 0.1,
        "n_x": 101,
        "mass": 1.0,
        "hbar": 1.0,
        "m2_r": 0.0,
        "m2_i": 1.0,
        "branches": [
            {"label": "machine-off", "boundary": [0.0, 0.0]},
            {"label": "machine-on", "boundary": [3.1622776601683795, 3.1622776601683795]},
        ],
        "n_seeds": 4,
    },
    "tape": {
        "alphabet": "AB",
        "rules": {"A": "AB", "B": "A"},
        "seed_word": "A",
        "seed_length": 8,
        "non_expanding": False,
        "generations": 30,
        "patterns": ["A", "B", "AA", "AB", "BA"],
        "fit_symbol": "A",
    },
}

SCENARIO_KINDS = tuple(SCENARIO_DEFAULTS)

SWEEPABLE: Dict[str, tuple] = {
    "propagator-check": ("n_t", "coefficient_scale"),
    "classical-select": ("imag_scale", "n_seeds"),
    "measurement": ("n_trials", "hbar"),
    "double-slit": ("gap", "duration"),
    "higgs-toy": ("m2_i", "m2_r"),
    "tape": ("generations",),
}

TOP_LEVEL_KEYS = ("schema_version", "scenario", "params", "seed", "output_directory")


@dataclass
class ScenarioConfig:
    """One scenario run: its kind, parameter overrides, master seed and output directory."""

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_directory: str = "output"
    schema_version: int = SCHEMA_VERSION

    def merged_params(self) -> Dict[str, Any]:
        """Kind defaults with this config's overrides applied."""
        merged = json.loads(json.dumps(SCENARIO_DEFAULTS[self.kind]))
        merged.update(self.params)
        return merged

    def with_param(self, name: str, value: Any) -> "ScenarioConfig":
        params = dict(self.params)
        params[name] = value
        return ScenarioConfig(self.kind, params, self.seed, self.output_directory, self.schema_version)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "scenario": self.kind,
            "params": self.params,
            "seed": self.seed,
            "output_directory": self.output_directory,
        }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_param_type(name: str, value: Any, default: Any) -> None:
    path = f"params.{name}"
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = _is_int(value)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, str):
        ok = isinstance(value, str) or (name == "seed_word" and value is None)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    elif isinstance(default, dict):
        ok = isinstance(value, dict)
    else:
        ok = True
    if not ok:
        raise ConfigurationError(f"expected {type(default).__name__}, got {value!r}", field=path)


def scenario_config_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    """
    Build a ScenarioConfig from parsed JSON, rejecting unknown keys.

    Raises:
        ConfigurationError: Naming the dotted path of the offending field
    """
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a JSON object", field="config")
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigurationError(f"unknown key, expected one of {TOP_LEVEL_KEYS}", field=key)

    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema version {version!r}", field="schema_version")

    kind = data.get("scenario")
    if kind not in SCENARIO_DEFAULTS:
        raise ConfigurationError(f"unknown scenario {kind!r}, expected one of {SCENARIO_KINDS}", field="scenario")

    seed = data.get("seed", 0)
    if not _is_int(seed) or not 0 <= seed < MAX_SEED:
        raise ConfigurationError(f"must be an integer in [0, 2**64), got {seed!r}", field="seed")

    output_directory = data.get("output_directory", "output")
    if not isinstance(output_directory, str) or not output_directory:
        raise ConfigurationError("must be a non-empty string", field="output_directory")

    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigurationError("must be a JSON object", field="params")
    defaults = SCENARIO_DEFAULTS[kind]
    for name, value in params.items():
        if name not in defaults:
            raise ConfigurationError(f"unknown parameter for scenario {kind!r}", field=f"params.{name}")
        _check_param_type(name, value, defaults[name])

    return ScenarioConfig(kind, dict(params), seed, output_directory, version)


def load_scenario_config(config_path: str) -> ScenarioConfig:
    """
    Load and validate a scenario config from a UTF-8 JSON file.

    JSON syntax errors are reported with their line and column. The domain
    objects of the scenario are built once so that range errors surface
    before any computation starts.
    """
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read {config_path}: {e.strerror}", field="config")

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{config_path} line {e.lineno}, column {e.colno}: {e.msg}", field="config")

    cfg = scenario_config_from_dict(data)
    validate_scenario_config(cfg)
    logger.debug("Loaded %s config from %s", cfg.kind, config_path)
    return cfg


def validate_scenario_config(cfg: ScenarioConfig, settings: Optional[Config] = None) -> None:
    """Range-check a config by constructing its domain objects."""
    from scenario_runner import build_scenario

    scenario_config_from_dict(cfg.to_dict())
    build_scenario(cfg, settings or Config())


def save_scenario_config(cfg: ScenarioConfig, config_path: str) -> None:
    """Write the config as indented JSON with sorted keys."""
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def canonical_json(cfg: ScenarioConfig) -> str:
    """Compact sorted JSON of everything that determines the numbers of a run."""
    payload = {
        "schema_version": cfg.schema_version,
        "scenario": cfg.kind,
        "params": cfg.merged_params(),
        "seed": cfg.seed,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON form."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()
