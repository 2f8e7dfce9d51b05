"""Unit tests for subpuf.core.constants module."""
import pytest

from subpuf.core import constants


class TestConstants:
    """Test suite for constants module."""

    def test_system_constants(self):
        """Test system-level constants are defined."""
        assert constants.SYSTEM_NAME == "subpuf"
        assert constants.SYSTEM_VERSION == "0.1.0"
        assert isinstance(constants.SYSTEM_DESCRIPTION, str)

    def test_reference_corner(self):
        """Test the nominal corner is 27 degC at 1.2 V."""
        assert constants.T_REF - constants.CELSIUS_OFFSET == pytest.approx(27.0)
        assert constants.NOMINAL_SUPPLY_V == 1.2

    def test_array_defaults(self):
        """Test the reference array is 32 x 128 with one regulator per column."""
        assert constants.DEFAULT_ROWS == 32
        assert constants.DEFAULT_COLS == 128
        assert constants.DEFAULT_CELLS_PER_REGULATOR == constants.DEFAULT_ROWS
        assert constants.STAGES_PER_CELL == 4

    def test_vote_defaults_are_odd(self):
        """Test every default vote count is odd."""
        for k in (
            constants.DEFAULT_TMV_K,
            constants.DEFAULT_GOLDEN_VOTES,
            constants.DEFAULT_ENROLL_VOTES,
            constants.DEFAULT_SWEEP_EVALS,
        ):
            assert k % 2 == 1

    def test_vpw_sweep_within_limit(self):
        """Test the default body-bias sweep stays within the limit."""
        assert all(abs(v) <= constants.VPW_LIMIT_V for v in constants.DEFAULT_VPW_SWEEP)

    def test_stream_keys_distinct(self):
        """Test stream and purpose codes do not collide."""
        streams = [
            constants.STREAM_MISMATCH,
            constants.STREAM_GLOBAL,
            constants.STREAM_REGULATOR,
            constants.STREAM_NOISE,
        ]
        purposes = [
            constants.PURPOSE_GOLDEN,
            constants.PURPOSE_READ,
            constants.PURPOSE_ENROLL,
            constants.PURPOSE_ORACLE,
            constants.PURPOSE_SWEEP,
        ]
        assert len(set(streams)) == len(streams)
        assert len(set(purposes)) == len(purposes)
        assert len(set(constants.ROLE_CODES.values())) == len(constants.ROLE_CODES)

    def test_exit_codes(self):
        """Test exit codes."""
        assert constants.EXIT_OK == 0
        assert constants.EXIT_RUNTIME == 1
        assert constants.EXIT_CONFIG == 2

    def test_enum_lists(self):
        """Test that enum lists contain expected values."""
        assert "evb" in constants.PROVENANCES
        assert "temp_oracle" in constants.PROVENANCES
        assert "json" in constants.LOG_FORMATS
        assert "console" in constants.LOG_FORMATS
        assert "DEBUG" in constants.LOG_LEVELS
