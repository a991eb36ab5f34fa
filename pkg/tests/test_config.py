"""Tests for configuration loading."""

from pathlib import Path

from cfaudit.config import DEFAULT_CONFIG_TOML, Config


def _write_config(root: Path, text: str) -> None:
    (root / ".cfaudit").mkdir(exist_ok=True)
    (root / ".cfaudit" / "config.toml").write_text(text)


def test_defaults_without_config_file(tmp_path):
    config = Config.load(tmp_path)
    assert config.equality_tolerance == 1e-9
    assert config.violation_tolerance == 1e-6
    assert config.output_format == "text"
    assert config.precision == 6
    assert config.max_assignments == 1_000_000
    assert config.config_dir == tmp_path / ".cfaudit"


def test_default_toml_matches_defaults(tmp_path):
    _write_config(tmp_path, DEFAULT_CONFIG_TOML)
    loaded = Config.load(tmp_path)
    default = Config.load(tmp_path / "elsewhere")
    for name in ("equality_tolerance", "violation_tolerance", "output_format", "precision", "max_assignments"):
        assert getattr(loaded, name) == getattr(default, name)


def test_partial_override_keeps_other_defaults(tmp_path):
    _write_config(tmp_path, "[tolerance]\nviolation = 1e-3\n")
    config = Config.load(tmp_path)
    assert config.violation_tolerance == 1e-3
    assert config.equality_tolerance == 1e-9
    assert config.precision == 6


def test_load_from_cwd_walks_up(tmp_path, monkeypatch):
    _write_config(tmp_path, '[output]\nformat = "json"\n')
    nested = tmp_path / "rules" / "medical"
    nested.mkdir(parents=True)
    monkeypatch.chdir(nested)
    assert Config.load_from_cwd().output_format == "json"

