import math
import os
from typing import Any, Dict

import yaml

from ..config.config import Config
from ..lattice.averaging import default_shift_scale
from ..lattice.graphs import window_sides
from ..models.errors import ConfigValidationError
from ..models.experiment import ExperimentConfig, ExperimentKind
from ..utils.logger import ExperimentLogger


class LimitsPolicy:
    def __init__(self, config_path: str = None):
        config_path = config_path or Config.LIMITS_PATH
        self.config = self._load_config(config_path)
        self.rules = self.config["rules"]
        self.logger = ExperimentLogger(component="limits")

    def _load_config(self, path: str) -> Dict[str, Any]:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Limits config not found: {path}")
        with open(path, "r") as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict) or "rules" not in data:
            raise ConfigValidationError(f"Limits config {path} has no 'rules' section")
        return data

    def window_vertices(self, config: ExperimentConfig, v_norm: int) -> int:
        shift = 0
        if config.kind is ExperimentKind.INFLUENCE_MAP and "shifted" in config.shift_modes:
            shift = config.m or default_shift_scale(v_norm)
        sides, _ = window_sides(config.d, v_norm, config.a, config.b, shift, config.margin)
        return math.prod(sides)

    def validate(self, config: ExperimentConfig) -> bool:
        """Enforce resource limits before any sampling"""
        rules = self.rules
        kind = config.kind

        # 1. Sample budget and sharding
        if config.samples > rules["max_samples"]:
            raise ConfigValidationError(
                f"{config.samples} samples exceed the limit of {rules['max_samples']}"
            )
        if config.shard.count > rules["max_shard_count"]:
            raise ConfigValidationError(f"At most {rules['max_shard_count']} shards are allowed")

        # 2. Tails need enough samples to be meaningful
        if kind is ExperimentKind.TAIL and config.samples < rules["min_tail_samples"]:
            raise ConfigValidationError(
                f"Tail estimates need at least {rules['min_tail_samples']} samples, got {config.samples}"
            )

        # 3. Window sizes for box experiments
        if kind.sampled and kind is not ExperimentKind.CIRC_SCAN:
            for v_norm in config.v_norms:
                vertices = self.window_vertices(config, v_norm)
                if vertices > rules["max_window_vertices"]:
                    raise ConfigValidationError(
                        f"|v| = {v_norm} needs a window of {vertices} vertices, "
                        f"limit is {rules['max_window_vertices']}"
                    )

        # 4. Torus families and sizes
        if kind is ExperimentKind.CIRC_SCAN:
            if config.family.value not in rules["allowed_torus_families"]:
                raise ConfigValidationError(
                    f"Torus family '{config.family.value}' not allowed. "
                    f"Allowed: {rules['allowed_torus_families']}"
                )
            if max(config.n_values) > rules["max_torus_size"]:
                raise ConfigValidationError(f"Torus size is limited to {rules['max_torus_size']}")

        # 5. Verification campaigns
        if kind is ExperimentKind.CHECK_BOOL and config.max_j > rules["max_boolean_dimension"]:
            raise ConfigValidationError(
                f"|J| = {config.max_j} exceeds the limit of {rules['max_boolean_dimension']}"
            )
        if kind is ExperimentKind.CHECK_LEMMA:
            if max(config.m_values) > rules["max_lemma_m"]:
                raise ConfigValidationError(f"Exact lemma audit is limited to m <= {rules['max_lemma_m']}")
            if config.random_flips > rules["max_random_flips"]:
                raise ConfigValidationError(f"At most {rules['max_random_flips']} random flips are allowed")

        self.logger.log_policy_event(config.config_hash()[:12], "limits_validation_passed", {"kind": kind.value})
        return True
