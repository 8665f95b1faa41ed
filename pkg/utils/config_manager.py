"""
Configuration management for benchmark runs.
"""

import copy
import json
import logging
import os
from typing import Any, Dict, Optional

from utils.error_handler import ConfigurationError

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "MOTIONBENCH_OUTPUT_ROOT"

DEFAULT_CONFIG_FILE = os.path.join(os.path.dirname(__file__), "..", "config", "default_config.json")


def _deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigManager:
    """Resolves the configuration of one run: defaults, then user file, then overrides."""

    def __init__(self, config_file: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None):
        self.config_file = config_file
        self.config = self._load_config(overrides or {})

    def _load_config(self, overrides: Dict[str, Any]) -> Dict[str, Any]:
        config = self._get_default_config()

        env_root = os.environ.get(OUTPUT_ROOT_ENV)
        if env_root:
            config['output_dir'] = env_root

        if self.config_file:
            user_config = self._read_json(self.config_file)
            version = user_config.get('schema_version')
            if version != SCHEMA_VERSION:
                raise ConfigurationError(
                    f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}",
                    path=self.config_file)
            config = _deep_merge(config, user_config)

        for key, value in overrides.items():
            if value is not None:
                self._assign(config, key, value)

        return config

    @staticmethod
    def _read_json(path: str) -> Dict[str, Any]:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError("Configuration file not found", path=path)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Configuration file is not valid JSON: {e}", path=path)
        if not isinstance(data, dict):
            raise ConfigurationError("Configuration file must hold a JSON object", path=path)
        return data

    def _get_default_config(self) -> Dict[str, Any]:
        return self._read_json(os.path.normpath(DEFAULT_CONFIG_FILE))

    @staticmethod
    def _assign(config: Dict[str, Any], key: str, value: Any):
        keys = key.split('.')
        node = config
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value

    def get_config(self) -> Dict[str, Any]:
        """Get a copy of the resolved configuration."""
        return copy.deepcopy(self.config)

    def get_setting(self, key: str, default: Any = None) -> Any:
        """Get a specific setting by dotted key."""
        value = self.config
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def require_setting(self, key: str) -> Any:
        """Get a setting that must be present and non-null."""
        value = self.get_setting(key)
        if value is None:
            raise ConfigurationError(f"Missing required setting '{key}'")
        return value

    def save_config(self, path: str):
        """Write the resolved configuration so the run can be repeated."""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2, sort_keys=True)
        logging.debug(f"Resolved configuration written to {path}")

    def get_output_directory(self, *parts: str) -> str:
        """Get (and create) a directory below the configured output root."""
        path = os.path.join(self.config['output_dir'], *parts)
        os.makedirs(path, exist_ok=True)
        return path

    def validate_config(self):
        """Validate the settings every command relies on."""
        cfg = self.config
        if not isinstance(cfg.get('seed'), int):
            raise ConfigurationError(f"seed must be an integer, got {cfg.get('seed')!r}")

        window = cfg.get('window', {})
        for key in ('t_in', 't_out', 'stride'):
            if not isinstance(window.get(key), int):
                raise ConfigurationError(f"window.{key} must be an integer")

        horizons = cfg.get('horizons', {}).get('horizons_ms')
        if not horizons or any(not isinstance(h, (int, float)) or h <= 0 for h in horizons):
            raise ConfigurationError("horizons.horizons_ms must be a non-empty list of positive numbers")

        split = cfg.get('split', {})
        ratios = [split.get(k) for k in ('train', 'val', 'test')]
        if any(not isinstance(r, (int, float)) or r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigurationError("split ratios must be nonnegative and sum to 1")

        if cfg.get('model') not in ('repeat_last', 'last_delta', 'ridge', 'motion_conformer'):
            raise ConfigurationError(f"Unknown model selector {cfg.get('model')!r}")
