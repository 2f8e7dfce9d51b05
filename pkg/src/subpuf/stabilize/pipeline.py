"""End-to-end enrollment: golden key, R-MAP, reconfigured key and mask."""
from dataclasses import dataclass
from typing import Optional, Sequence

from subpuf.cell.noise import NoiseModel
from subpuf.chip.sim import ChipInstance
from subpuf.core.config import StabilizeSettings
from subpuf.core.constants import CELSIUS_OFFSET, PROVENANCE_EVB, PROVENANCE_TEMP_ORACLE
from subpuf.core.exceptions import ContractError
from subpuf.core.logging import bind_chip, get_logger
from subpuf.device.params import Environment
from subpuf.stabilize.enroll import (
    derive_mask,
    enroll_rmap_evb,
    enroll_rmap_temperature_oracle,
)
from subpuf.stabilize.golden import GoldenKey, collect_golden
from subpuf.stabilize.maps import Mask, RMap

logger = get_logger(__name__)

METHODS = {"evb": PROVENANCE_EVB, "temp-oracle": PROVENANCE_TEMP_ORACLE}


@dataclass(eq=False)
class Enrollment:
    golden: GoldenKey
    rmap: RMap
    golden_reconfigured: GoldenKey
    mask: Mask


def celsius_to_kelvin(values: Sequence[float]) -> list[float]:
    return [v + CELSIUS_OFFSET for v in values]


def enroll_chip(
    chip: ChipInstance,
    env_nominal: Environment,
    noise: NoiseModel,
    settings: StabilizeSettings,
    method: str = "evb",
    golden: Optional[GoldenKey] = None,
    threads: int = 1,
) -> Enrollment:
    """Run one enrollment method and derive the reconfigured key and mask."""
    if method not in METHODS:
        raise ContractError(
            f"Unknown enrollment method '{method}'", details={"methods": sorted(METHODS)}
        )
    log = bind_chip(logger, chip.chip_id, chip.seed).bind(method=method)
    if golden is None:
        golden = collect_golden(chip, env_nominal, noise, settings.golden_votes, threads=threads)
    if method == "evb":
        rmap = enroll_rmap_evb(
            chip,
            golden,
            settings.vpw_sweep,
            noise,
            settings.enroll_votes,
            nominal_screen=settings.nominal_screen,
            screen_threshold=settings.screen_threshold,
            threads=threads,
        )
    else:
        rmap = enroll_rmap_temperature_oracle(
            chip,
            golden,
            celsius_to_kelvin(settings.oracle_temperatures_c),
            noise,
            settings.enroll_votes,
            threads=threads,
        )
    golden_r = collect_golden(
        chip, env_nominal, noise, settings.golden_votes, rmap=rmap, threads=threads
    )
    mask = derive_mask(golden_r, rmap, settings.mask_threshold)
    log.info("chip enrolled", reconfigured=rmap.count, masked=mask.count)
    return Enrollment(golden=golden, rmap=rmap, golden_reconfigured=golden_r, mask=mask)
