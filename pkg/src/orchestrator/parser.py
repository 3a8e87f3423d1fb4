import json
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from ..models.environment import check_weights
from ..models.errors import ConfigValidationError, WeightError
from ..models.experiment import ExperimentConfig, ExperimentKind, ShardSpec, TorusFamily
from ..utils.logger import ExperimentLogger

LIST_FIELDS = {"v_norms": int, "n_values": int, "t_grid": float, "p_grid": float, "m_values": int}
SHIFT_MODES = {"plain", "shifted"}


class ExperimentConfigParser:
    def __init__(self):
        self.logger = ExperimentLogger(component="config_parser")

    def parse(self, definition: Union[str, Dict[str, Any]], kind: Optional[str] = None) -> ExperimentConfig:
        """
        Parse a YAML/JSON experiment definition. `kind` (the CLI subcommand)
        wins over a `kind` key in the file; the two must agree when both exist.
        """
        if isinstance(definition, str):
            try:
                data = yaml.safe_load(definition)
            except yaml.YAMLError:
                try:
                    data = json.loads(definition)
                except json.JSONDecodeError:
                    raise ConfigValidationError("Invalid experiment definition format")
        else:
            data = definition
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigValidationError("Experiment definition must be a mapping")
        data = dict(data)

        declared = data.pop("kind", None)
        if kind and declared and declared != kind:
            raise ConfigValidationError(f"Config declares kind '{declared}' but '{kind}' was requested")
        kind = kind or declared
        if kind is None:
            raise ConfigValidationError("Experiment definition must name its 'kind'")

        known = {item.name for item in fields(ExperimentConfig)} - {"kind"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigValidationError(f"Unknown config keys: {', '.join(unknown)}")

        try:
            values: Dict[str, Any] = {"kind": ExperimentKind(kind)}
            for name, raw in data.items():
                values[name] = self._coerce(name, raw)
            config = ExperimentConfig(**values)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigValidationError):
                raise
            raise ConfigValidationError(f"Invalid experiment definition: {exc}") from exc

        self.validate(config)
        self.logger.log_run_status("config", "parsed", {"kind": config.kind.value})
        return config

    def parse_file(self, path: Union[str, Path], kind: Optional[str] = None) -> ExperimentConfig:
        path = Path(path)
        if not path.exists():
            raise ConfigValidationError(f"Experiment config not found: {path}")
        return self.parse(path.read_text(), kind=kind)

    @staticmethod
    def _coerce(name: str, raw: Any) -> Any:
        if name in LIST_FIELDS:
            items = raw if isinstance(raw, (list, tuple)) else [raw]
            return [LIST_FIELDS[name](item) for item in items]
        if name == "family":
            return TorusFamily(raw)
        if name == "shard":
            return raw if isinstance(raw, ShardSpec) else ShardSpec.parse(raw)
        if name == "shift_modes":
            return [str(mode) for mode in (raw if isinstance(raw, (list, tuple)) else [raw])]
        if name in ("a", "b"):
            return float(raw)
        if name == "out":
            return None if raw is None else str(raw)
        if name in ("m", "margin", "window"):
            return None if raw is None else int(raw)
        return int(raw)

    def apply_overrides(
        self,
        config: ExperimentConfig,
        seed: Optional[int] = None,
        samples: Optional[int] = None,
        shard: Optional[str] = None,
        out: Optional[str] = None,
    ) -> ExperimentConfig:
        """Command-line flags take precedence over file values"""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if samples is not None:
            changes["samples"] = int(samples)
        if shard is not None:
            changes["shard"] = ShardSpec.parse(shard)
        if out is not None:
            changes["out"] = out
        config = replace(config, **changes)
        self.validate(config)
        return config

    def validate(self, config: ExperimentConfig) -> bool:
        """Structural checks that hold for every experiment regardless of limits"""
        try:
            check_weights(config.a, config.b)
        except WeightError as exc:
            raise ConfigValidationError(str(exc)) from exc
        if config.d < 1:
            raise ConfigValidationError(f"Dimension must be at least 1, got {config.d}")
        if config.samples < 1:
            raise ConfigValidationError(f"Sample count must be positive, got {config.samples}")
        if not 0 <= config.seed < 2 ** 64:
            raise ConfigValidationError(f"Seed must be a 64-bit unsigned integer, got {config.seed}")
        if config.kind.sampled and config.shard.count > config.samples:
            raise ConfigValidationError(
                f"{config.shard.count} shards cannot split {config.samples} samples"
            )
        if config.kind is ExperimentKind.CIRC_SCAN:
            if not config.n_values or min(config.n_values) < 3:
                raise ConfigValidationError(f"Torus sizes must be at least 3, got {config.n_values}")
        elif config.kind.sampled and (not config.v_norms or min(config.v_norms) < 1):
            raise ConfigValidationError(f"|v| values must be positive, got {config.v_norms}")
        if config.m is not None and config.m < 1:
            raise ConfigValidationError(f"m must be positive, got {config.m}")
        if config.margin is not None and config.margin < 1:
            raise ConfigValidationError(f"Window margin must be positive, got {config.margin}")
        if config.window is not None and config.window < 0:
            raise ConfigValidationError(f"Unrolling window must be non-negative, got {config.window}")
        if config.kind is ExperimentKind.TAIL and (not config.t_grid or min(config.t_grid) < 0):
            raise ConfigValidationError("Tail t-grid must be non-empty and non-negative")
        if not set(config.shift_modes) <= SHIFT_MODES or not config.shift_modes:
            raise ConfigValidationError(f"Shift modes must be drawn from {sorted(SHIFT_MODES)}")
        if any(not 0.0 <= p <= 1.0 for p in config.p_grid):
            raise ConfigValidationError("Noise grid points must lie in [0, 1]")
        if config.max_j < 1 or config.indicator_max_j < 0:
            raise ConfigValidationError("Boolean dimensions must be positive")
        if config.m_values and min(config.m_values) < 1:
            raise ConfigValidationError("Staircase scales must be positive")
        if config.kind is ExperimentKind.CHECK_LEMMA and (not config.m_values or config.random_flips < 1):
            raise ConfigValidationError("Lemma audit needs at least one m and one random flip")
        return True
