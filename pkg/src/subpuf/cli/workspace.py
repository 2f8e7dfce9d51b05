"""On-disk layout of a run directory.

    <out>/chips/<chip>.json           chip descriptor
    <out>/chips/<chip>.golden.bin     golden key (also .hex)
    <out>/enroll/<chip>.<method>.rmap
    <out>/enroll/<chip>.<method>.mask
    <out>/enroll/<chip>.<method>.golden.bin   key under the R-MAP
    <out>/<command>/...               per-command reports and manifest.json
"""
from pathlib import Path
from typing import Tuple

import numpy as np

from subpuf.chip.io import read_bits
from subpuf.chip.sim import ChipInstance
from subpuf.core.exceptions import ArtifactNotFoundError
from subpuf.stabilize.maps import Mask, RMap


class Workspace:
    def __init__(self, root: Path):
        self.root = Path(root)

    @property
    def chips_dir(self) -> Path:
        return self.root / "chips"

    def command_dir(self, command: str) -> Path:
        return self.root / command

    def manifest_file(self, command: str) -> Path:
        return self.command_dir(command) / "manifest.json"

    def chip_file(self, chip_id: str) -> Path:
        return self.chips_dir / f"{chip_id}.json"

    def golden_file(self, chip_id: str) -> Path:
        return self.chips_dir / f"{chip_id}.golden.bin"

    def rmap_file(self, chip_id: str, method: str) -> Path:
        return self.command_dir("enroll") / f"{chip_id}.{method}.rmap"

    def mask_file(self, chip_id: str, method: str) -> Path:
        return self.command_dir("enroll") / f"{chip_id}.{method}.mask"

    def reconfigured_key_file(self, chip_id: str, method: str) -> Path:
        return self.command_dir("enroll") / f"{chip_id}.{method}.golden.bin"

    def golden_bits(self, chip: ChipInstance) -> np.ndarray:
        """Golden key written by ``generate``."""
        path = self.golden_file(chip.chip_id)
        if not path.exists():
            raise ArtifactNotFoundError(
                f"Golden key for {chip.chip_id} not found; run 'generate' first",
                details={"path": str(path)},
            )
        return read_bits(path, chip.geometry.shape)

    def enrollment(self, chip: ChipInstance, method: str) -> Tuple[RMap, Mask, np.ndarray]:
        """R-MAP, mask and reconfigured key written by ``enroll``."""
        rmap_path = self.rmap_file(chip.chip_id, method)
        if not rmap_path.exists():
            raise ArtifactNotFoundError(
                f"No {method} enrollment for {chip.chip_id}; run 'enroll --method {method}' first",
                details={"path": str(rmap_path)},
            )
        rmap = RMap.load(rmap_path)
        mask = Mask.load(self.mask_file(chip.chip_id, method))
        key = read_bits(self.reconfigured_key_file(chip.chip_id, method), chip.geometry.shape)
        return rmap, mask, key
