"""Device model: constants, transistor parameters, threshold and current laws, mismatch."""

from subpuf.device.mismatch import RandomStream, sample_mismatch
from subpuf.device.model import (
    effective_slope,
    effective_vth,
    log_subthreshold_current,
    mobility_factor,
    subthreshold_current,
    thermal_voltage,
)
from subpuf.device.params import (
    Environment,
    MismatchModel,
    PhysicalConstants,
    TransistorParams,
    VthDeviation,
)

__all__ = [
    "Environment",
    "MismatchModel",
    "PhysicalConstants",
    "RandomStream",
    "TransistorParams",
    "VthDeviation",
    "effective_slope",
    "effective_vth",
    "log_subthreshold_current",
    "mobility_factor",
    "sample_mismatch",
    "subthreshold_current",
    "thermal_voltage",
]
