"""R-MAP enrollment.

Cells that disagree with the golden key when the operating point is
perturbed are marked for reconfiguration. The production method perturbs the
p-well body bias at the nominal temperature; the temperature oracle sweeps
temperature directly and is the reference the body-bias method is measured
against.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from subpuf.cell.noise import NoiseModel
from subpuf.chip.sim import ChipInstance, evaluate_array, majority
from subpuf.core.constants import (
    PROVENANCE_EVB,
    PROVENANCE_TEMP_ORACLE,
    PURPOSE_ENROLL,
    PURPOSE_ORACLE,
    VPW_LIMIT_V,
)
from subpuf.core.exceptions import ContractError, DimensionError
from subpuf.core.logging import get_logger
from subpuf.device.params import Environment
from subpuf.stabilize.golden import GoldenKey, _require_odd
from subpuf.stabilize.maps import Mask, RMap

logger = get_logger(__name__)


def disagreement(
    chip: ChipInstance,
    golden: GoldenKey,
    env: Environment,
    noise: NoiseModel,
    votes: int,
    purpose: int,
    threads: int = 1,
) -> np.ndarray:
    """Cells whose ``votes``-majority at ``env`` differs from the golden bit."""
    readouts = evaluate_array(
        chip, env, golden.reconfigure, noise, votes, purpose=purpose, threads=threads
    )
    return majority(readouts) != golden.bits


def _format_grid(values: Sequence[float]) -> str:
    return ",".join(f"{v:g}" for v in values)


def enroll_rmap_evb(
    chip: ChipInstance,
    golden: GoldenKey,
    vpw_sweep: Sequence[float],
    noise: NoiseModel,
    votes: int,
    nominal_screen: bool = True,
    screen_threshold: float = 0.0,
    threads: int = 1,
) -> RMap:
    """Body-bias enrollment at the golden key's temperature and supply.

    Every VPW point is read with ``votes``-vote majority; a cell is flagged
    if any point disagrees with the golden key. With ``nominal_screen`` the
    cells that already dissent during golden collection are flagged too.

    Raises:
        ContractError: If the sweep is empty or leaves +/-0.4 V.
    """
    _require_odd(votes, "votes")
    if not vpw_sweep:
        raise ContractError("VPW sweep must not be empty")
    out_of_range = [v for v in vpw_sweep if abs(v) > VPW_LIMIT_V + 1e-12]
    if out_of_range:
        raise ContractError(
            f"Body bias outside +/-{VPW_LIMIT_V} V", details={"vpw": out_of_range}
        )
    flagged = np.zeros(golden.bits.shape, dtype=bool)
    for vpw in vpw_sweep:
        env = golden.collected_at.with_(body_vpw=vpw)
        point = disagreement(chip, golden, env, noise, votes, PURPOSE_ENROLL, threads)
        logger.debug("evb point", chip_id=chip.chip_id, vpw=vpw, flagged=int(point.sum()))
        flagged |= point
    if nominal_screen:
        flagged |= golden.unstable(screen_threshold)
    rmap = RMap(
        chip_id=chip.chip_id,
        reconfigure=flagged,
        provenance=PROVENANCE_EVB,
        header={
            "vpw_sweep": _format_grid(vpw_sweep),
            "votes": str(votes),
            "nominal_screen": str(nominal_screen).lower(),
        },
    )
    logger.info(
        "rmap enrolled",
        chip_id=chip.chip_id,
        method=PROVENANCE_EVB,
        flagged=rmap.count,
        fraction=rmap.fraction,
    )
    return rmap


def enroll_rmap_temperature_oracle(
    chip: ChipInstance,
    golden: GoldenKey,
    temp_grid: Sequence[float],
    noise: NoiseModel,
    votes: int,
    threads: int = 1,
) -> RMap:
    """Flag every cell whose majority at any grid temperature (K) differs from golden."""
    _require_odd(votes, "votes")
    if not temp_grid:
        raise ContractError("Temperature grid must not be empty")
    flagged = np.zeros(golden.bits.shape, dtype=bool)
    for temperature in temp_grid:
        env = golden.collected_at.with_(temperature=temperature)
        flagged |= disagreement(chip, golden, env, noise, votes, PURPOSE_ORACLE, threads)
    rmap = RMap(
        chip_id=chip.chip_id,
        reconfigure=flagged,
        provenance=PROVENANCE_TEMP_ORACLE,
        header={"temperatures_K": _format_grid(temp_grid), "votes": str(votes)},
    )
    logger.info(
        "rmap enrolled",
        chip_id=chip.chip_id,
        method=PROVENANCE_TEMP_ORACLE,
        flagged=rmap.count,
        fraction=rmap.fraction,
    )
    return rmap


@dataclass(frozen=True)
class MapComparison:
    """Set comparison of a candidate map against a reference map."""

    flagged: int
    reference: int
    overlap: int

    @property
    def precision(self) -> Optional[float]:
        """Share of flagged cells that the reference also flags; None if nothing is flagged."""
        return self.overlap / self.flagged if self.flagged else None

    @property
    def recall(self) -> Optional[float]:
        return self.overlap / self.reference if self.reference else None

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {
            "flagged": self.flagged,
            "reference": self.reference,
            "overlap": self.overlap,
            "precision": self.precision,
            "recall": self.recall,
        }


def compare_maps(candidate: RMap, reference: RMap) -> MapComparison:
    """Precision/recall of ``candidate`` (e.g. body-bias) against ``reference`` (oracle)."""
    if candidate.shape != reference.shape:
        raise DimensionError(
            "Maps differ in shape", details={"candidate": candidate.shape, "reference": reference.shape}
        )
    return MapComparison(
        flagged=candidate.count,
        reference=reference.count,
        overlap=int(np.count_nonzero(candidate.reconfigure & reference.reconfigure)),
    )


def detection_rate_by_vpw(
    chip: ChipInstance,
    golden: GoldenKey,
    vpw_values: Sequence[float],
    oracle: RMap,
    noise: NoiseModel,
    votes: int,
    threads: int = 1,
) -> List[tuple[float, MapComparison]]:
    """Single-point body-bias detection against the oracle, one entry per VPW.

    The detection rate of a point is its precision: truly temperature-unstable
    cells over all cells that point flags.
    """
    results = []
    for vpw in vpw_values:
        single = enroll_rmap_evb(
            chip, golden, [vpw], noise, votes, nominal_screen=False, threads=threads
        )
        results.append((vpw, compare_maps(single, oracle)))
    return results


def derive_mask(
    golden_reconfigured: GoldenKey, rmap: RMap, threshold: float = 0.0
) -> Mask:
    """Discard reconfigured cells that still dissent in the reconfigured topology.

    Raises:
        ContractError: If the golden key was not collected with ``rmap`` applied.
    """
    if golden_reconfigured.reconfigure is None:
        raise ContractError("Mask derivation needs a golden key collected with the R-MAP")
    if golden_reconfigured.bits.shape != rmap.shape:
        raise DimensionError("Golden key and R-MAP differ in shape")
    discard = rmap.reconfigure & golden_reconfigured.unstable(threshold)
    mask = Mask(
        chip_id=rmap.chip_id,
        discard=discard,
        header={"threshold": f"{threshold:g}", "votes": str(golden_reconfigured.votes)},
    )
    logger.info("mask derived", chip_id=rmap.chip_id, masked=mask.count)
    return mask
