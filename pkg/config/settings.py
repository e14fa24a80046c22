"""
Configuration settings for the Disentangled CMS Monitor.
"""

from typing import Dict, Any, Optional
import os

import yaml

# Base configuration
BASE_CONFIG = {
    "app_name": "Disentangled CMS Monitor",
    "version": "1.0.0",
    "description": "Cluster-wise cosine similarity of kernel mean embeddings for image generators"
}

# Kernel settings
KERNEL_SETTINGS = {
    "family": "rbf",  # rbf, laplacian
    "gamma": "median",  # "median" or a positive float
    "median_max_pairs": 500_000,
    "median_seed": 0,
}

# Estimator settings (mini-batch sizes of the block estimators)
ESTIMATOR_SETTINGS = {
    "cms_batch": 150,
    "cka_batch": 100,
    "drop_remainder": True,
    "block_mode": True,
}

# Clustering settings
CLUSTERING_SETTINGS = {
    "linkage": "average",  # average, complete, single
    "degenerate_threshold": 1e-15,
    "n_train": None,  # None uses every training instance
}

# Monitoring settings
MONITOR_SETTINGS = {
    "gamma_source": "test",  # train, test, value
    "n_test": None,
    "emit_mmd": False,
    "corollary_tolerance": 1e-9,
}

# Synthetic data settings
SYNTH_SETTINGS = {
    "default_mean": 0.0,
    "default_scale": 1.0,
    "default_coupling": 0.8,
}

# Report configuration
REPORT_CONFIG = {
    "formats": ["json", "csv", "svg"],
    "jsonl_name": "monitor_report.jsonl",
    "header_name": "monitor_header.json",
    "csv_name": "monitor_report.csv",
    "svg_name": "monitor_curves.svg",
    "xlsx_name": "monitor_report.xlsx",
    "cluster_map_name": "cluster_map.svg",
    "svg": {
        "width": 960,
        "height": 540,
        "margin": 60,
        "image_color": "#1f77b4",
        "product_color": "#ff7f0e",
        "palette": [
            "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
        ],
    },
}

# Performance configuration
PERFORMANCE_CONFIG = {
    "workers": 4,
    "gram_tile_rows": 256,  # rows per gram tile, independent of worker count
    "cka_tile_pixels": 128,  # pixels per CKA-matrix tile
    "show_progress": True,
}

# Logging Configuration
LOGGING_CONFIG = {
    "level": "INFO",
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "file_handler": False,
    "console_handler": True,
    "log_path": os.path.join("logs", "cms_monitor.log"),
    "max_file_size": 10,  # MB
    "backup_count": 5,
    "colored": True,
}

_SECTIONS = {
    "base": "BASE_CONFIG",
    "kernel": "KERNEL_SETTINGS",
    "estimator": "ESTIMATOR_SETTINGS",
    "clustering": "CLUSTERING_SETTINGS",
    "monitor": "MONITOR_SETTINGS",
    "synth": "SYNTH_SETTINGS",
    "report": "REPORT_CONFIG",
    "performance": "PERFORMANCE_CONFIG",
    "logging": "LOGGING_CONFIG",
}


def get_config() -> Dict[str, Any]:
    """Get the complete configuration dictionary."""
    return {short: globals()[name] for short, name in _SECTIONS.items()}


# Keys whose value may change type (a name or a number)
_MIXED_KEYS = {("KERNEL_SETTINGS", "gamma")}


def _check_type(section: str, key: str, current: Any, value: Any) -> None:
    """Overrides keep the type of the default; None defaults accept anything."""
    if current is None or value is None or (section, key) in _MIXED_KEYS:
        return
    if isinstance(current, bool):
        ok = isinstance(value, bool)
    elif isinstance(current, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(current, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(current))
    if not ok:
        raise TypeError(f"'{key}' in section '{section}' expects {type(current).__name__}, "
                        f"got {type(value).__name__} {value!r}")


def update_config(section: str, key: str, value: Any) -> None:
    """Update a specific configuration value.

    ``section`` may be the global name (``"ESTIMATOR_SETTINGS"``) or its short
    name (``"estimator"``). Raises TypeError when ``value`` does not fit the default's type.
    """
    section = _SECTIONS.get(section, section)
    if section in globals() and section in _SECTIONS.values():
        config_dict = globals()[section]
        if key in config_dict:
            _check_type(section, key, config_dict[key], value)
            config_dict[key] = value
        else:
            raise KeyError(f"Key '{key}' not found in section '{section}'")
    else:
        raise KeyError(f"Section '{section}' not found in configuration")


def load_config_file(path: str) -> Dict[str, Any]:
    """Apply overrides from a YAML file keyed by short section names."""
    with open(path, "r") as f:
        overrides: Optional[Dict[str, Any]] = yaml.safe_load(f)
    for section, values in (overrides or {}).items():
        if not isinstance(values, dict):
            raise KeyError(f"Section '{section}' must map keys to values")
        for key, value in values.items():
            update_config(section, key, value)
    return get_config()
