"""Configuration loading and defaults."""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path


DEFAULT_CONFIG = {
    "tolerance": {
        "equality": 1e-9,
        "violation": 1e-6,
    },
    "output": {
        "format": "text",
        "precision": 6,
    },
    "audit": {
        "max_assignments": 1_000_000,
    },
}

# File extensions mapped to document kinds
DOCUMENT_EXTENSIONS: dict[str, str] = {
    ".cfr": "rulebase",
    ".idg": "diagram",
}


class Config:
    def __init__(self, data: dict, config_dir: Path):
        self._data = data
        self.config_dir = config_dir

    @classmethod
    def load(cls, project_root: Path) -> "Config":
        config_dir = project_root / ".cfaudit"
        config_file = config_dir / "config.toml"

        data = _deep_merge(DEFAULT_CONFIG, {})

        if config_file.exists():
            with open(config_file, "rb") as f:
                user_data = tomllib.load(f)
            data = _deep_merge(DEFAULT_CONFIG, user_data)

        return cls(data, config_dir)

    @classmethod
    def load_from_cwd(cls) -> "Config":
        root = _find_project_root(Path.cwd())
        return cls.load(root)

    # --- tolerance ---
    @property
    def equality_tolerance(self) -> float:
        return float(self._data["tolerance"]["equality"])

    @property
    def violation_tolerance(self) -> float:
        return float(self._data["tolerance"]["violation"])

    # --- output ---
    @property
    def output_format(self) -> str:
        return self._data["output"]["format"]

    @property
    def precision(self) -> int:
        return int(self._data["output"]["precision"])

    # --- audit ---
    @property
    def max_assignments(self) -> int:
        return int(self._data["audit"]["max_assignments"])


def _deep_merge(base: dict, override: dict) -> dict:
    result = dict(base)
    for key, val in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(val, dict):
            result[key] = _deep_merge(result[key], val)
        else:
            result[key] = val
    return result


def _find_project_root(start: Path) -> Path:
    """Walk up to find the directory containing .cfaudit/ or .git/."""
    current = start.resolve()
    while True:
        if (current / ".cfaudit").exists() or (current / ".git").exists():
            return current
        parent = current.parent
        if parent == current:
            return start.resolve()
        current = parent


DEFAULT_CONFIG_TOML = """\
[tolerance]
equality  = 1e-9
violation = 1e-6

[output]
format    = "text"
precision = 6

[audit]
max_assignments = 1000000
"""
