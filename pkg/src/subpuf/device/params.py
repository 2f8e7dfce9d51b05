"""Parameter records for the device model.

All quantities are SI: volts, kelvin, metres, A/V^2.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from subpuf.core.constants import (
    BOLTZMANN_K,
    ELECTRON_CHARGE_Q,
    NOMINAL_SUPPLY_V,
    NOMINAL_TEMPERATURE_K,
)


class PhysicalConstants(BaseModel):
    """Boltzmann constant and elementary charge."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    boltzmann_k: float = Field(default=BOLTZMANN_K, gt=0)
    electron_charge_q: float = Field(default=ELECTRON_CHARGE_Q, gt=0)


class TransistorParams(BaseModel):
    """Physical parameters of one device type.

    ``vth_nominal`` is a magnitude for PMOS devices; it may be negative for
    native (near-zero threshold) devices.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mobility_cox: float = Field(gt=0, description="mu*Cox product, A/V^2")
    width_w: float = Field(gt=0, description="channel width, m")
    length_l: float = Field(gt=0, description="channel length, m")
    slope_m: float = Field(gt=1, description="subthreshold slope factor")
    vth_nominal: float = Field(description="threshold voltage at T_ref, V")
    body_gamma: float = Field(default=0.2, ge=0, description="body factor, V^0.5")
    fermi_phi: float = Field(default=0.35, gt=0, description="Fermi potential, V")
    vth_temp_coeff: float = Field(
        default=1.5e-3, ge=0, description="threshold decrease per kelvin, V/K"
    )

    @property
    def area(self) -> float:
        return self.width_w * self.length_l

    @property
    def aspect(self) -> float:
        return self.width_w / self.length_l

    def scaled(self, width_factor: float) -> "TransistorParams":
        """Copy with the width multiplied by ``width_factor``."""
        return self.model_copy(update={"width_w": self.width_w * width_factor})


class Environment(BaseModel):
    """Operating point of a die."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    temperature: float = Field(default=NOMINAL_TEMPERATURE_K, gt=0)
    supply_vdd: float = Field(default=NOMINAL_SUPPLY_V, ge=0)
    bias_vbias: float = Field(default=0.40, description="native transistor gate bias, V")
    body_vpw: float = Field(default=0.0, description="p-well body bias, V")

    @property
    def temperature_c(self) -> float:
        return self.temperature - 273.15

    def with_(self, **changes) -> "Environment":
        """Copy with ``changes`` applied and re-validated."""
        return Environment.model_validate({**self.model_dump(), **changes})


class MismatchModel(BaseModel):
    """Statistical mismatch model (Pelgrom area law plus environment sensitivity)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pelgrom_avt: float = Field(default=8.0e-9, ge=0, description="A_VT, V*m")
    tempco_sigma: float = Field(default=4.0e-6, ge=0, description="V/K")
    gamma_sigma_rel: float = Field(default=0.025, ge=0)
    slope_sigma_rel: float = Field(default=0.001, ge=0)
    tempco_gamma_correlation: float = Field(default=0.8, ge=-1, le=1)
    global_sigma: float = Field(default=0.020, ge=0, description="die-to-die Vth sigma, V")

    @model_validator(mode="after")
    def _slope_mismatch_keeps_m_above_one(self) -> "MismatchModel":
        if self.slope_sigma_rel > 0.05:
            raise ValueError("slope_sigma_rel above 5% leaves the subthreshold model")
        return self

    def vth_sigma(self, params: TransistorParams) -> float:
        """Static threshold standard deviation for a device of ``params`` area."""
        return self.pelgrom_avt / np.sqrt(params.area)

    @classmethod
    def zero(cls) -> "MismatchModel":
        return cls(
            pelgrom_avt=0.0,
            tempco_sigma=0.0,
            gamma_sigma_rel=0.0,
            slope_sigma_rel=0.0,
            global_sigma=0.0,
        )


@dataclass(frozen=True)
class VthDeviation:
    """Sampled per-device deviations; every field broadcasts against the others.

    Attributes:
        static: threshold offset, V
        tempco: extra threshold decrease per kelvin, V/K
        gamma: body-factor offset, V^0.5
        slope: relative slope-factor offset
    """

    static: np.ndarray
    tempco: np.ndarray
    gamma: np.ndarray
    slope: np.ndarray

    @classmethod
    def zeros(cls, size: Union[int, Tuple[int, ...]] = 1) -> "VthDeviation":
        z = np.zeros(size)
        return cls(static=z, tempco=z, gamma=z, slope=z)

    @property
    def size(self) -> int:
        return int(np.size(self.static))

    def mean_with(self, other: "VthDeviation") -> "VthDeviation":
        """Element-wise average of two deviation sets (merged device)."""
        return VthDeviation(
            static=(self.static + other.static) / 2,
            tempco=(self.tempco + other.tempco) / 2,
            gamma=(self.gamma + other.gamma) / 2,
            slope=(self.slope + other.slope) / 2,
        )

    def shifted(self, delta_v: float) -> "VthDeviation":
        """Copy with ``delta_v`` added to the static offset."""
        return VthDeviation(
            static=self.static + delta_v,
            tempco=self.tempco,
            gamma=self.gamma,
            slope=self.slope,
        )

    def take(self, index) -> "VthDeviation":
        """Select a subset of devices with numpy indexing."""
        return VthDeviation(
            static=np.asarray(self.static)[index],
            tempco=np.asarray(self.tempco)[index],
            gamma=np.asarray(self.gamma)[index],
            slope=np.asarray(self.slope)[index],
        )
