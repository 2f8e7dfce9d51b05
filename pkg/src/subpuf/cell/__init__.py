"""Inverter-chain cell: topology, trip points, decision and noise."""

from subpuf.cell.noise import NoiseModel
from subpuf.cell.model import (
    CellConfig,
    CellMismatch,
    InverterDesign,
    decision_margin,
    evaluate_bit,
    flip_probability,
    switching_voltage,
)

__all__ = [
    "CellConfig",
    "CellMismatch",
    "InverterDesign",
    "NoiseModel",
    "decision_margin",
    "evaluate_bit",
    "flip_probability",
    "switching_voltage",
]
