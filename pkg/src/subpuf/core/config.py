"""Configuration loader for subpuf.

Loads configuration from a YAML file and environment variables.
Uses Pydantic Settings with a custom YAML source.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from subpuf.cell.noise import NoiseModel
from subpuf.chip.geometry import ArrayGeometry
from subpuf.core.constants import (
    DEFAULT_AUTOCORR_BOUND_SCALE,
    DEFAULT_AUTOCORR_MAX_LAG,
    DEFAULT_ENROLL_VOTES,
    DEFAULT_GOLDEN_VOTES,
    DEFAULT_SWEEP_EVALS,
    DEFAULT_TMV_K,
    DEFAULT_VPW_SWEEP,
    LOG_FORMATS,
    LOG_LEVELS,
    NIST_ALPHA,
    VPW_LIMIT_V,
)
from subpuf.core.exceptions import ConfigFileError, ConfigValidationError
from subpuf.device.params import (
    Environment,
    MismatchModel,
    PhysicalConstants,
    TransistorParams,
)

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent.parent / "config" / "settings.yaml"


class YamlConfigSource(PydanticBaseSettingsSource):
    """Custom settings source that loads from a YAML file."""

    def __init__(self, settings_cls: type, yaml_file: Path, required: bool = False):
        super().__init__(settings_cls)
        self.yaml_file = yaml_file
        self.required = required

    def _load(self) -> Dict[str, Any]:
        if not self.yaml_file.exists():
            if self.required:
                raise ConfigFileError(
                    f"Config file not found: {self.yaml_file}",
                    details={"path": str(self.yaml_file)},
                )
            return {}
        try:
            with open(self.yaml_file, "r") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigFileError(
                f"Config file is not valid YAML: {self.yaml_file}",
                details={"path": str(self.yaml_file), "error": str(e)},
            )
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigFileError(
                "Config file must contain a mapping at top level",
                details={"path": str(self.yaml_file)},
            )
        return data

    def get_field_value(self, field: Any, field_name: str) -> tuple[Any, str, bool]:
        """Get field value from the YAML file."""
        data = self._load()
        return data.get(field_name), field_name, False

    def __call__(self) -> Dict[str, Any]:
        """Load all settings from the YAML file."""
        return self._load()


class LoggingSettings(BaseSettings):
    """Logging configuration."""

    model_config = SettingsConfigDict(env_prefix="LOG_", extra="forbid")

    level: str = "INFO"
    format: str = "json"
    component_levels: Dict[str, str] = Field(default_factory=dict)

    @field_validator("level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        if v.upper() not in LOG_LEVELS:
            raise ValueError(f"level must be one of {LOG_LEVELS}")
        return v.upper()

    @field_validator("format")
    @classmethod
    def _known_format(cls, v: str) -> str:
        if v not in LOG_FORMATS:
            raise ValueError(f"format must be one of {LOG_FORMATS}")
        return v


def _inverter_nmos() -> TransistorParams:
    return TransistorParams(
        mobility_cox=250e-6, width_w=0.2e-6, length_l=0.5e-6, slope_m=1.4, vth_nominal=0.45
    )


def _inverter_pmos() -> TransistorParams:
    return TransistorParams(
        mobility_cox=100e-6, width_w=0.5e-6, length_l=0.5e-6, slope_m=1.4, vth_nominal=0.45
    )


def _native() -> TransistorParams:
    return TransistorParams(
        mobility_cox=250e-6,
        width_w=3.279e-6,
        length_l=0.5e-6,
        slope_m=1.3,
        vth_nominal=-0.05,
        body_gamma=0.0,
    )


class DeviceSettings(BaseModel):
    """Reference transistor set."""

    model_config = ConfigDict(extra="forbid")

    constants: PhysicalConstants = Field(default_factory=PhysicalConstants)
    nmos: TransistorParams = Field(default_factory=_inverter_nmos)
    pmos: TransistorParams = Field(default_factory=_inverter_pmos)
    native: TransistorParams = Field(default_factory=_native)


class RegulatorSettings(BaseModel):
    """Column regulator configuration."""

    model_config = ConfigDict(extra="forbid")

    vm_fraction: float = Field(default=0.5, gt=0, lt=1)
    compensate_temperature: bool = True
    target_vvdd: Optional[float] = Field(
        default=None, gt=0, description="solve V_BIAS for this rail at the nominal corner"
    )


class EnvironmentSettings(BaseModel):
    """Nominal operating point and sweep grids."""

    model_config = ConfigDict(extra="forbid")

    nominal: Environment = Field(default_factory=lambda: Environment(bias_vbias=0.399))
    temperatures_c: List[float] = Field(
        default_factory=lambda: [float(t) for t in range(-55, 126, 10)]
    )
    supplies: List[float] = Field(
        default_factory=lambda: [0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4]
    )
    vpw: List[float] = Field(default_factory=lambda: list(DEFAULT_VPW_SWEEP))

    @field_validator("vpw")
    @classmethod
    def _vpw_within_limit(cls, v: List[float]) -> List[float]:
        if any(abs(x) > VPW_LIMIT_V + 1e-12 for x in v):
            raise ValueError(f"body bias must stay within +/-{VPW_LIMIT_V} V")
        return v


class StabilizeSettings(BaseModel):
    """Golden key, TMV and R-MAP enrollment configuration."""

    model_config = ConfigDict(extra="forbid")

    tmv_k: int = Field(default=DEFAULT_TMV_K, ge=1)
    golden_votes: int = Field(default=DEFAULT_GOLDEN_VOTES, ge=3)
    enroll_votes: int = Field(default=DEFAULT_ENROLL_VOTES, ge=1)
    vpw_sweep: List[float] = Field(default_factory=lambda: list(DEFAULT_VPW_SWEEP))
    oracle_temperatures_c: List[float] = Field(
        default_factory=lambda: [float(t) for t in range(-55, 126, 20)]
    )
    nominal_screen: bool = True
    screen_threshold: float = Field(default=0.0, ge=0, lt=0.5)
    mask_threshold: float = Field(default=0.0, ge=0, lt=0.5)

    @field_validator("tmv_k", "golden_votes", "enroll_votes")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("vote counts must be odd")
        return v

    @field_validator("vpw_sweep")
    @classmethod
    def _vpw_within_limit(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("vpw_sweep must not be empty")
        if any(abs(x) > VPW_LIMIT_V + 1e-12 for x in v):
            raise ValueError(f"body bias must stay within +/-{VPW_LIMIT_V} V")
        return v


class NistSettings(BaseModel):
    """Per-test parameters; None selects the recommended value for the sequence length."""

    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=NIST_ALPHA, gt=0, lt=1)
    block_frequency_m: Optional[int] = Field(default=None, ge=2)
    serial_m: Optional[int] = Field(default=None, ge=2)
    approximate_entropy_m: Optional[int] = Field(default=None, ge=1)
    enabled: Optional[List[str]] = None


class MetricsSettings(BaseModel):
    """Metric configuration."""

    model_config = ConfigDict(extra="forbid")

    autocorr_max_lag: int = Field(default=DEFAULT_AUTOCORR_MAX_LAG, ge=1)
    autocorr_bound_scale: float = Field(default=DEFAULT_AUTOCORR_BOUND_SCALE, gt=0)
    bits_per_chip: int = Field(default=4096, ge=1)
    nist: NistSettings = Field(default_factory=NistSettings)


class RunSettings(BaseSettings):
    """Batch-run configuration."""

    model_config = SettingsConfigDict(env_prefix="SUBPUF_RUN_", extra="forbid")

    seeds: List[int] = Field(default_factory=lambda: [1])
    out_dir: Path = Path("out")
    threads: int = Field(default=1, ge=1)
    n_evals: int = Field(default=2000, ge=1)
    sweep_evals: int = Field(default=DEFAULT_SWEEP_EVALS, ge=1)
    output_format: str = "csv"

    @field_validator("output_format")
    @classmethod
    def _known_format(cls, v: str) -> str:
        if v not in ("csv", "json"):
            raise ValueError("output_format must be csv or json")
        return v

    @field_validator("seeds")
    @classmethod
    def _non_negative_seeds(cls, v: List[int]) -> List[int]:
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        return v


class Settings(BaseSettings):
    """Main settings class combining all configuration sources.

    Priority (highest to lowest):
    1. Explicit keyword arguments (command-line overrides)
    2. Environment variables (SUBPUF_ prefix, __ nested delimiter)
    3. YAML config file
    4. Default values
    """

    model_config = SettingsConfigDict(
        env_prefix="SUBPUF_",
        env_nested_delimiter="__",
        extra="forbid",
    )

    version: str = "0.1.0"

    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    device: DeviceSettings = Field(default_factory=DeviceSettings)
    mismatch: MismatchModel = Field(default_factory=MismatchModel)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    regulator: RegulatorSettings = Field(default_factory=RegulatorSettings)
    geometry: ArrayGeometry = Field(default_factory=ArrayGeometry)
    environment: EnvironmentSettings = Field(default_factory=EnvironmentSettings)
    stabilize: StabilizeSettings = Field(default_factory=StabilizeSettings)
    metrics: MetricsSettings = Field(default_factory=MetricsSettings)
    run: RunSettings = Field(default_factory=RunSettings)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """Customize settings sources to include the YAML file."""
        return (
            init_settings,
            env_settings,
            YamlConfigSource(settings_cls, _source_path, required=_source_required),
        )

    def config_hash(self) -> str:
        """Stable SHA-256 of the validated configuration."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


_source_path: Path = DEFAULT_CONFIG_PATH
_source_required: bool = False


def _error_paths(error: ValidationError) -> List[Dict[str, str]]:
    return [
        {"key": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
        for e in error.errors()
    ]


def load_settings(
    path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None
) -> Settings:
    """Build settings from ``path`` (default ``config/settings.yaml``) and overrides.

    Raises:
        ConfigFileError: If an explicit ``path`` is missing or unreadable.
        ConfigValidationError: If any key is unknown or violates a constraint;
            ``details["errors"]`` lists each offending key path.
    """
    global _source_path, _source_required
    _source_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    _source_required = path is not None
    try:
        return Settings(**(overrides or {}))
    except ValidationError as e:
        errors = _error_paths(e)
        keys = ", ".join(err["key"] for err in errors)
        raise ConfigValidationError(
            f"Invalid configuration: {keys}", details={"errors": errors}
        )

