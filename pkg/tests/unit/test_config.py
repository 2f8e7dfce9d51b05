"""Unit tests for subpuf.core.config."""
import pytest
import yaml

from subpuf.core.config import DEFAULT_CONFIG_PATH, load_settings
from subpuf.core.exceptions import ConfigFileError, ConfigValidationError


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestLoadSettings:
    """Test suite for YAML, environment and override layering."""

    def test_reference_file(self):
        """Test the shipped settings file validates."""
        settings = load_settings(DEFAULT_CONFIG_PATH)
        assert settings.geometry.n_cells == 4096
        assert settings.stabilize.tmv_k == 11
        assert settings.run.seeds == list(range(1, 11))

    def test_yaml_values(self, small_config):
        """Test values come from the given file."""
        settings = load_settings(small_config)
        assert settings.geometry.shape == (8, 16)
        assert settings.run.n_evals == 21

    def test_overrides_win_and_merge(self, small_config):
        """Test overrides replace single keys and keep the rest of the section."""
        settings = load_settings(small_config, {"run": {"threads": 4}})
        assert settings.run.threads == 4
        assert settings.run.seeds == [1, 2]

    def test_environment_override(self, small_config, monkeypatch):
        """Test SUBPUF_<SECTION>__<KEY> overrides the file."""
        monkeypatch.setenv("SUBPUF_METRICS__BITS_PER_CHIP", "64")
        settings = load_settings(small_config)
        assert settings.metrics.bits_per_chip == 64
        assert settings.metrics.autocorr_max_lag == 20

    def test_missing_explicit_file(self, tmp_path):
        """Test a named file that does not exist is an error."""
        with pytest.raises(ConfigFileError):
            load_settings(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        """Test unparsable YAML raises ConfigFileError."""
        path = tmp_path / "bad.yaml"
        path.write_text("geometry: [rows: 1\n")
        with pytest.raises(ConfigFileError):
            load_settings(path)

    def test_non_mapping(self, tmp_path):
        """Test a top-level list is rejected."""
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigFileError):
            load_settings(path)


class TestValidation:
    """Test suite for key and value validation."""

    def test_unknown_key_named(self, tmp_path):
        """Test an unknown nested key is reported by its path."""
        path = write_yaml(tmp_path / "s.yaml", {"geometry": {"rowz": 8}})
        with pytest.raises(ConfigValidationError) as exc_info:
            load_settings(path)
        assert "geometry.rowz" in exc_info.value.message
        assert exc_info.value.details["errors"][0]["key"] == "geometry.rowz"

    def test_unknown_section(self, tmp_path):
        """Test an unknown top-level section is rejected."""
        path = write_yaml(tmp_path / "s.yaml", {"plotting": {"dpi": 300}})
        with pytest.raises(ConfigValidationError):
            load_settings(path)

    @pytest.mark.parametrize("key", ["tmv_k", "golden_votes", "enroll_votes"])
    def test_even_votes(self, tmp_path, key):
        """Test vote counts must be odd."""
        path = write_yaml(tmp_path / "s.yaml", {"stabilize": {key: 4}})
        with pytest.raises(ConfigValidationError) as exc_info:
            load_settings(path)
        assert f"stabilize.{key}" in exc_info.value.message

    def test_vpw_limit(self, tmp_path):
        """Test body bias beyond 0.4 V is rejected."""
        path = write_yaml(tmp_path / "s.yaml", {"stabilize": {"vpw_sweep": [-0.6, 0.0]}})
        with pytest.raises(ConfigValidationError):
            load_settings(path)

    def test_geometry_tiling(self, tmp_path):
        """Test the regulator block must divide the rows."""
        path = write_yaml(
            tmp_path / "s.yaml", {"geometry": {"rows": 10, "cols": 4, "cells_per_regulator": 4}}
        )
        with pytest.raises(ConfigValidationError):
            load_settings(path)

    def test_log_level(self, tmp_path):
        """Test unknown log levels are rejected and known ones normalised."""
        bad = write_yaml(tmp_path / "bad.yaml", {"logging": {"level": "LOUD"}})
        with pytest.raises(ConfigValidationError):
            load_settings(bad)
        good = write_yaml(tmp_path / "good.yaml", {"logging": {"level": "debug"}})
        assert load_settings(good).logging.level == "DEBUG"

    def test_output_format(self, small_config):
        """Test only csv and json are accepted."""
        with pytest.raises(ConfigValidationError):
            load_settings(small_config, {"run": {"output_format": "xlsx"}})


class TestConfigHash:
    """Test suite for the configuration fingerprint."""

    def test_stable(self, small_config):
        """Test the same configuration hashes identically."""
        assert load_settings(small_config).config_hash() == load_settings(small_config).config_hash()

    def test_sensitive(self, small_config):
        """Test any changed value changes the hash."""
        base = load_settings(small_config).config_hash()
        changed = load_settings(small_config, {"noise": {"sigma_n": 0.3e-3}}).config_hash()
        assert base != changed
