import copy
import json
import logging
import os
from typing import Any, Dict, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_PATH = 'config.json'

DEFAULTS: Dict[str, Dict[str, Any]] = {
    'numerics': {
        'tolerance': 1e-9,
        'prune_threshold': 1e-12,
    },
    'planner': {
        'node_budget': 10_000_000,
        'oracle_limit': 100_000,
    },
    'capacity_search': {
        'restarts': 32,
        'seed': 0,
    },
    'simulation': {
        'trials': 100_000,
        'seed': 2014,
        'chunk_size': 10_000,
        'workers': 4,
    },
    'output': {
        'significant_digits': 12,
        'max_denominator': 1_000_000,
    },
    'debugging': {
        'enabled': False,
        'output_path': './logs',
        'verbose_log_file': 'qif_verbose.log',
    },
}


def _load_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _merge_defaults(cfg: Dict[str, Any]) -> Dict[str, Any]:
    for section, values in DEFAULTS.items():
        cfg.setdefault(section, {})
        for key, value in values.items():
            cfg[section].setdefault(key, value)
    return cfg


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Load configuration.

    - If the file exists and is valid JSON, return it with every missing key
      filled from DEFAULTS.
    - If the file is missing, return a copy of DEFAULTS.
    - Invalid JSON raises ConfigError.
    """
    path = path or CONFIG_PATH
    if not os.path.exists(path):
        logger.info("Configuration not found at %s; using defaults.", path)
        return copy.deepcopy(DEFAULTS)
    try:
        cfg = _load_json(path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Configuration file {path} is not a valid JSON file: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"Configuration file {path} must contain a JSON object.")
    return _merge_defaults(cfg)


def save_config(config_data, path: Optional[str] = None):
    """Saves the given configuration data to config.json."""
    path = path or CONFIG_PATH
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(config_data, f, indent=2)
        return True
    except OSError as e:
        logger.error("Could not save configuration to %s. Error: %s", path, e)
        return False
