"""Unit tests for subpuf.core.exceptions module."""
import pytest

from subpuf.core import exceptions


class TestSubpufError:
    """Test suite for SubpufError base class."""

    def test_basic_exception(self):
        """Test basic exception creation."""
        exc = exceptions.SubpufError("Test error")
        assert str(exc) == "Test error"
        assert exc.message == "Test error"
        assert exc.details == {}

    def test_exception_with_details(self):
        """Test exception with details."""
        details = {"regulator": 3, "column": 3}
        exc = exceptions.SubpufError("Test error", details=details)
        assert exc.details == details


class TestExceptionHierarchy:
    """Test suite for exception hierarchy."""

    def test_configuration_errors_inherit(self):
        """Test configuration errors inherit from ConfigurationError."""
        assert issubclass(exceptions.ConfigurationError, exceptions.SubpufError)
        assert issubclass(exceptions.ConfigFileError, exceptions.ConfigurationError)
        assert issubclass(exceptions.ConfigValidationError, exceptions.ConfigurationError)

    def test_model_errors_inherit(self):
        """Test model errors inherit from ModelError."""
        assert issubclass(exceptions.DomainError, exceptions.ModelError)
        assert issubclass(exceptions.RegulatorConfigError, exceptions.ModelError)

    def test_numeric_errors_inherit(self):
        """Test solver failures are numeric errors, not model errors."""
        assert issubclass(exceptions.ConvergenceError, exceptions.NumericError)
        assert not issubclass(exceptions.ConvergenceError, exceptions.ModelError)

    def test_artifact_errors_inherit(self):
        """Test artifact errors inherit from ArtifactError."""
        assert issubclass(exceptions.ArtifactNotFoundError, exceptions.ArtifactError)
        assert issubclass(exceptions.SerializationError, exceptions.ArtifactError)

    def test_configuration_is_separate_from_runtime(self):
        """Test runtime errors are not configuration errors (exit codes differ)."""
        runtime = [
            exceptions.DomainError,
            exceptions.ConvergenceError,
            exceptions.DimensionError,
            exceptions.ContractError,
            exceptions.ArtifactNotFoundError,
            exceptions.SelfTestError,
        ]
        for cls in runtime:
            assert not issubclass(cls, exceptions.ConfigurationError)


class TestExceptionUsage:
    """Test suite for exception usage patterns."""

    def test_catching_base_exception(self):
        """Test that all exceptions can be caught via base class."""
        exceptions_to_test = [
            exceptions.ConfigurationError("test"),
            exceptions.ModelError("test"),
            exceptions.NumericError("test"),
            exceptions.DimensionError("test"),
            exceptions.ContractError("test"),
            exceptions.ArtifactError("test"),
            exceptions.SelfTestError("test"),
        ]

        for exc in exceptions_to_test:
            with pytest.raises(exceptions.SubpufError):
                raise exc

    def test_exception_attributes(self):
        """Test exception attributes are accessible."""
        details = {"path": "out/chips/chip-000001.json"}
        exc = exceptions.ArtifactNotFoundError("Chip file not found", details=details)
        assert exc.message == "Chip file not found"
        assert exc.details == details
        assert isinstance(exc, exceptions.SubpufError)
