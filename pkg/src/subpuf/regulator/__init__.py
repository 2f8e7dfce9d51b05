"""Native-transistor column regulator."""

from subpuf.regulator.model import (
    FixedPointResult,
    RegulatorConfig,
    RegulatorSweep,
    sensitivity_sweep,
    solve_bias_for_vvdd,
    temperature_compensating_ratio,
    virtual_vdd_closed_form,
    virtual_vdd_fixed_point,
)

__all__ = [
    "FixedPointResult",
    "RegulatorConfig",
    "RegulatorSweep",
    "sensitivity_sweep",
    "solve_bias_for_vvdd",
    "temperature_compensating_ratio",
    "virtual_vdd_closed_form",
    "virtual_vdd_fixed_point",
]
