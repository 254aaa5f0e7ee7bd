#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Configuration module for DCNSIM
"""

import copy
import logging
import os
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .base import ConfigError, RunOptions, SolverOptions, SuiteSpec, TopologySpec

logger = logging.getLogger(__name__)

MODES = ("analytic", "adaptive")


class Config:
    """Configuration manager for DCNSIM"""

    DEFAULT_CONFIG = {
        "suite": asdict(SuiteSpec()),
        "topology": asdict(TopologySpec()),
        "solver": asdict(SolverOptions()),
        "algorithm": "dcn-sc",
        "eps": 1e-4,
        "mode": "adaptive",
        "backend": "dense",
        "seed": 0,
        "output": {
            "dir": "./runs/latest",
            "save_suite": False,
            "timing": False,
        },
        "run": {
            "workers": 1,
            "max_iterations": None,
            "lreg": None,
            "fixed_rounds": None,
            "x0": None,
        },
    }

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or self._get_default_config_path()
        self.explicit = config_path is not None
        self.config = self._load_config()

    def _get_default_config_path(self) -> str:
        """Get the default configuration file path"""
        return str(Path.home() / ".config" / "dcnsim" / "config.yaml")

    def _load_config(self) -> Dict[str, Any]:
        """
        Load configuration from file and merge it over the defaults.

        Raises:
            ConfigError: If an explicit file is missing or unreadable, or
                any key is unknown
        """
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        if not os.path.exists(self.config_path):
            if self.explicit:
                raise ConfigError(f"config file not found: {self.config_path}")
            return config
        try:
            with open(self.config_path, "r") as f:
                user_config = yaml.safe_load(f) or {}
        except (yaml.YAMLError, IOError) as e:
            raise ConfigError(f"could not read config {self.config_path}: {e}") from e
        if not isinstance(user_config, dict):
            raise ConfigError(f"{self.config_path}: top level must be a mapping")
        _merge(config, user_config, "")
        logger.debug("loaded config from %s", self.config_path)
        return config

    def save(self, path: Optional[str] = None) -> Path:
        """Write the resolved configuration as YAML"""
        path = Path(path or self.config_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.config, f, sort_keys=True)
        return path

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by dotted key"""
        node = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value by dotted key"""
        *parents, leaf = key.split(".")
        update: Dict[str, Any] = {leaf: value}
        for part in reversed(parents):
            update = {part: update}
        _merge(self.config, update, "")

    def to_run_options(self, **overrides) -> RunOptions:
        """
        Convert config to RunOptions; overrides that are not None win.

        Overrides use the dotted config keys with dots replaced by
        underscores for nested ones, e.g. out_dir, workers, seed.

        Raises:
            ConfigError: If a value has the wrong type or range
        """
        for key, value in overrides.items():
            if value is None:
                continue
            dotted = _OVERRIDE_KEYS.get(key)
            if dotted is None:
                raise ConfigError(f"unknown override '{key}'")
            self.set(dotted, value)
        c = self.config
        try:
            options = RunOptions(
                suite=SuiteSpec(**c["suite"]),
                topology=TopologySpec(**c["topology"]),
                solver=SolverOptions(**c["solver"]),
                algorithm=str(c["algorithm"]),
                eps=float(c["eps"]),
                mode=str(c["mode"]),
                backend=str(c["backend"]),
                seed=int(c["seed"]),
                out_dir=str(c["output"]["dir"]),
                save_suite=bool(c["output"]["save_suite"]),
                timing=bool(c["output"]["timing"]),
                workers=int(c["run"]["workers"]),
                max_iterations=c["run"]["max_iterations"],
                lreg=c["run"]["lreg"],
                fixed_rounds=c["run"]["fixed_rounds"],
                x0=c["run"]["x0"],
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config value: {e}") from e
        if options.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got '{options.mode}'")
        if options.eps <= 0:
            raise ConfigError(f"eps must be positive, got {options.eps}")
        if options.workers < 1:
            raise ConfigError("workers must be at least 1")
        return options


_OVERRIDE_KEYS = {
    "algorithm": "algorithm",
    "eps": "eps",
    "mode": "mode",
    "backend": "backend",
    "seed": "seed",
    "out_dir": "output.dir",
    "save_suite": "output.save_suite",
    "timing": "output.timing",
    "workers": "run.workers",
    "max_iterations": "run.max_iterations",
    "lreg": "run.lreg",
    "fixed_rounds": "run.fixed_rounds",
}


def _merge(base: Dict[str, Any], update: Dict[str, Any], prefix: str) -> None:
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{path}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{path}' must be a mapping")
            _merge(base[key], value, path + ".")
        else:
            base[key] = value

