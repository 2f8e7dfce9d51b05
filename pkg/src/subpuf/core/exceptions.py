"""Exception hierarchy for subpuf."""
from typing import Optional


class SubpufError(Exception):
    """Base exception for all subpuf errors."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


# =============================================================================
# Configuration Errors
# =============================================================================

class ConfigurationError(SubpufError):
    """Base exception for configuration errors."""
    pass


class ConfigFileError(ConfigurationError):
    """Error loading a configuration file."""
    pass


class ConfigValidationError(ConfigurationError):
    """Configuration validation failed."""
    pass


# =============================================================================
# Model Errors
# =============================================================================

class ModelError(SubpufError):
    """Base exception for device/circuit model errors."""
    pass


class DomainError(ModelError):
    """An argument lies outside the physical domain of a model equation."""
    pass


class RegulatorConfigError(ModelError):
    """Regulator parameters give a non-physical closed-form solution."""
    pass


# =============================================================================
# Numeric Errors
# =============================================================================

class NumericError(SubpufError):
    """Base exception for numerical solver failures."""
    pass


class ConvergenceError(NumericError):
    """A root-finder found no bracket or did not converge."""
    pass


# =============================================================================
# Data Errors
# =============================================================================

class DimensionError(SubpufError):
    """Bit matrices or maps have incompatible shapes."""
    pass


class ContractError(SubpufError):
    """An operation was called outside its documented preconditions."""
    pass


# =============================================================================
# Artifact Errors
# =============================================================================

class ArtifactError(SubpufError):
    """Base exception for on-disk artifacts (chips, maps, reports)."""
    pass


class ArtifactNotFoundError(ArtifactError):
    """A prerequisite artifact is missing."""
    pass


class SerializationError(ArtifactError):
    """An artifact could not be parsed or written."""
    pass


class SelfTestError(SubpufError):
    """One or more self-test checks disagree with their reference values."""
    pass
