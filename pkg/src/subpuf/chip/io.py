"""Chip artifacts and bit-matrix export.

A chip file is a JSON descriptor: the chip is regenerated from its seed and
the descriptor's parameter hash guards against regenerating it under a
different process. Bit matrices are written row-major, one bit per cell,
most significant bit first.
"""
import csv
import json
from pathlib import Path
from typing import Any, Dict, Sequence, TextIO, Union

import numpy as np

from subpuf.chip.geometry import ArrayGeometry
from subpuf.chip.sim import ChipInstance, Process, SweepPoint, generate_chip, parameter_hash
from subpuf.core.exceptions import ArtifactNotFoundError, DimensionError, SerializationError
from subpuf.device.params import MismatchModel

CHIP_FORMAT_VERSION = 1

SWEEP_CSV_COLUMNS = [
    "temperature_K",
    "supply_V",
    "vbias_V",
    "vpw_V",
    "n_evals",
    "ber",
    "unstable_fraction",
]


def pack_bits(bits: np.ndarray) -> bytes:
    """Row-major, MSB-first packing; the last byte is zero-padded."""
    return np.packbits(np.asarray(bits, dtype=np.uint8).reshape(-1), bitorder="big").tobytes()


def unpack_bits(data: bytes, shape: Sequence[int]) -> np.ndarray:
    n = int(np.prod(shape))
    flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")
    if flat.size < n:
        raise DimensionError(
            "Packed data too short for shape", details={"bits": int(flat.size), "shape": list(shape)}
        )
    return flat[:n].reshape(shape)


def bits_to_hex(bits: np.ndarray) -> str:
    return pack_bits(bits).hex()


def hex_to_bits(text: str, shape: Sequence[int]) -> np.ndarray:
    try:
        data = bytes.fromhex(text.strip())
    except ValueError as e:
        raise SerializationError("Invalid hex bit matrix", details={"error": str(e)})
    return unpack_bits(data, shape)


def write_bits(path: Union[str, Path], bits: np.ndarray) -> None:
    """Write ``<path>.bin`` (packed) and ``<path>.hex`` (text) side by side."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.with_suffix(".bin").write_bytes(pack_bits(bits))
    path.with_suffix(".hex").write_text(bits_to_hex(bits) + "\n")


def read_bits(path: Union[str, Path], shape: Sequence[int]) -> np.ndarray:
    path = Path(path).with_suffix(".bin")
    if not path.exists():
        raise ArtifactNotFoundError(f"Bit matrix not found: {path}", details={"path": str(path)})
    return unpack_bits(path.read_bytes(), shape)


def chip_descriptor(chip: ChipInstance, nominal_bits: np.ndarray) -> Dict[str, Any]:
    return {
        "format_version": CHIP_FORMAT_VERSION,
        "chip_id": chip.chip_id,
        "seed": chip.seed,
        "geometry": chip.geometry.model_dump(mode="json"),
        "param_hash": chip.param_hash,
        "global_vth_shift": round(chip.global_vth_shift, 12),
        "nominal_response_hex": bits_to_hex(nominal_bits),
    }


def write_chip(path: Union[str, Path], chip: ChipInstance, nominal_bits: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(chip_descriptor(chip, nominal_bits), indent=2, sort_keys=True)
    path.write_text(text + "\n")


def read_descriptor(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"Chip file not found: {path}", details={"path": str(path)})
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SerializationError(f"Corrupt chip file: {path}", details={"error": str(e)})
    for key in ("chip_id", "seed", "geometry", "param_hash"):
        if key not in data:
            raise SerializationError(
                f"Chip file missing '{key}': {path}", details={"path": str(path), "key": key}
            )
    return data


def load_chip(
    path: Union[str, Path], process: Process, mismatch_model: MismatchModel
) -> ChipInstance:
    """Regenerate the chip described by ``path``.

    Raises:
        SerializationError: If the descriptor was written under other parameters.
    """
    data = read_descriptor(path)
    geometry = ArrayGeometry.model_validate(data["geometry"])
    expected = parameter_hash(process, geometry, mismatch_model)
    if data["param_hash"] != expected:
        raise SerializationError(
            "Chip file was generated with different process parameters",
            details={"path": str(path), "stored": data["param_hash"], "current": expected},
        )
    return generate_chip(int(data["seed"]), geometry, process, mismatch_model)


def write_sweep_csv(target: Union[str, Path, TextIO], points: Sequence[SweepPoint]) -> None:
    """Sweep aggregates; an empty sweep writes the header only."""
    if isinstance(target, (str, Path)):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="") as f:
            write_sweep_csv(f, points)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(SWEEP_CSV_COLUMNS)
    for p in points:
        writer.writerow([
            f"{p.env.temperature:.6g}",
            f"{p.env.supply_vdd:.6g}",
            f"{p.env.bias_vbias:.6g}",
            f"{p.env.body_vpw:.6g}",
            p.n_evals,
            f"{p.ber:.9g}",
            f"{p.unstable_fraction:.9g}",
        ])
