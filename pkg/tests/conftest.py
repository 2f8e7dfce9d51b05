"""Test configuration and fixtures for subpuf."""
from pathlib import Path

import pytest
import yaml

from subpuf.cell.model import InverterDesign
from subpuf.cell.noise import NoiseModel
from subpuf.chip.geometry import ArrayGeometry
from subpuf.chip.sim import Process, generate_chip
from subpuf.core.config import DeviceSettings
from subpuf.device.params import Environment, MismatchModel


@pytest.fixture
def device_settings():
    """Reference device set."""
    return DeviceSettings()


@pytest.fixture
def nmos(device_settings):
    return device_settings.nmos


@pytest.fixture
def process(device_settings):
    """Reference process with a temperature-compensated native regulator."""
    return Process(
        design=InverterDesign(nmos=device_settings.nmos, pmos=device_settings.pmos),
        native=device_settings.native,
    )


@pytest.fixture
def mismatch_model():
    return MismatchModel()


@pytest.fixture
def noise():
    return NoiseModel()


@pytest.fixture
def nominal_env():
    """Room temperature, 1.2 V supply, bias for a ~0.57 V rail."""
    return Environment(bias_vbias=0.399)


@pytest.fixture
def small_geometry():
    return ArrayGeometry(rows=8, cols=16, cells_per_regulator=8)


@pytest.fixture
def small_chip(small_geometry, process, mismatch_model):
    """A 128-cell die."""
    return generate_chip(3, small_geometry, process, mismatch_model)


@pytest.fixture
def regulator_cfg(process):
    """Column regulator of the reference 32-cell column."""
    return process.regulator_template(ArrayGeometry())


@pytest.fixture
def small_config(tmp_path) -> Path:
    """Settings file for a fast end-to-end run on two small chips."""
    data = {
        "logging": {"level": "WARNING", "format": "console"},
        "geometry": {"rows": 8, "cols": 16, "cells_per_regulator": 8},
        "environment": {
            "temperatures_c": [-55, 25, 125],
            "supplies": [0.8, 1.2],
        },
        "stabilize": {
            "golden_votes": 101,
            "enroll_votes": 5,
            "vpw_sweep": [-0.4, 0.4],
            "oracle_temperatures_c": [-55, 25, 125],
        },
        "metrics": {"autocorr_max_lag": 20, "bits_per_chip": 128},
        "run": {
            "seeds": [1, 2],
            "out_dir": str(tmp_path / "out"),
            "n_evals": 21,
            "sweep_evals": 5,
        },
    }
    path = tmp_path / "settings.yaml"
    path.write_text(yaml.safe_dump(data))
    return path
