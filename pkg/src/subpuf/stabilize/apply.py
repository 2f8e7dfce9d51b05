"""Stabilized readout and the reconfiguration probability bookkeeping."""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from subpuf.cell.noise import NoiseModel
from subpuf.chip.sim import ChipInstance, SweepPoint, margin_map, noise_stream, read_many
from subpuf.core.constants import PURPOSE_READ, PURPOSE_SWEEP
from subpuf.core.exceptions import ContractError, DimensionError
from subpuf.device.params import Environment
from subpuf.stabilize.golden import GoldenKey, _require_odd
from subpuf.stabilize.maps import Mask, RMap, mask_array


@dataclass(eq=False)
class StabilizedReadout:
    """``n_outputs`` TMV-aggregated readouts and the mask that applies to them."""

    bits: np.ndarray
    mask: Optional[np.ndarray]
    tmv_k: int

    @property
    def n_outputs(self) -> int:
        return int(self.bits.shape[0])


def apply_stabilization(
    chip: ChipInstance,
    rmap: Optional[Union[RMap, np.ndarray]],
    mask: Optional[Union[Mask, np.ndarray]],
    env: Environment,
    noise: NoiseModel,
    tmv_k: int,
    n_outputs: int = 1,
    regulated: bool = True,
    threads: int = 1,
    purpose: int = PURPOSE_READ,
) -> StabilizedReadout:
    """Reconfigured evaluation followed by TMV-k.

    Output ``j`` votes over evaluations ``j*k .. j*k + k - 1`` of the same
    streams a raw evaluation uses, so ``k = 1`` with empty maps reproduces
    the raw readouts.
    """
    _require_odd(tmv_k, "tmv_k")
    if n_outputs < 1:
        raise ContractError("n_outputs must be at least 1", details={"n_outputs": n_outputs})
    state = margin_map(chip, env, rmap, noise, regulated)
    readouts = read_many(
        state, noise_stream(chip, env, purpose), n_outputs * tmv_k, threads=threads
    )
    stack = np.stack([r.bits for r in readouts]).reshape(
        n_outputs, tmv_k, *chip.geometry.shape
    )
    bits = (2 * stack.sum(axis=1, dtype=np.int64) > tmv_k).astype(np.uint8)
    discard = mask_array(mask)
    if discard is not None and discard.shape != chip.geometry.shape:
        raise DimensionError("Mask shape does not match chip geometry")
    return StabilizedReadout(bits=bits, mask=discard, tmv_k=tmv_k)


def stabilized_sweep(
    chip: ChipInstance,
    env_grid: Sequence[Environment],
    rmap: Optional[Union[RMap, np.ndarray]],
    mask: Optional[Union[Mask, np.ndarray]],
    golden: np.ndarray,
    noise: NoiseModel,
    tmv_k: int,
    n_outputs: int,
    regulated: bool = True,
    threads: int = 1,
) -> List[SweepPoint]:
    """Flips of the stabilized outputs against ``golden`` at every grid point.

    With ``tmv_k = 1`` and empty maps this is the raw-read sweep.
    """
    if not env_grid:
        raise ContractError("Stabilized sweep needs a non-empty grid")
    golden = np.asarray(golden, dtype=np.uint8)
    points = []
    for env in env_grid:
        out = apply_stabilization(
            chip, rmap, mask, env, noise, tmv_k, n_outputs,
            regulated=regulated, threads=threads, purpose=PURPOSE_SWEEP,
        )
        ones = out.bits.sum(axis=0)
        points.append(
            SweepPoint(
                env=env,
                bits=(2 * ones > n_outputs).astype(np.uint8),
                flip_counts=np.count_nonzero(out.bits != golden, axis=0),
                n_evals=n_outputs,
                mask=out.mask,
            )
        )
    return points


# =============================================================================
# Probability bookkeeping
# =============================================================================

STABLE_ZERO = 1
STABLE_ONE = 2
RECONFIGURED_ZERO = 3
RECONFIGURED_ONE = 4
UNSTABLE = 5

CLASS_NAMES = {
    STABLE_ZERO: "stable_0",
    STABLE_ONE: "stable_1",
    RECONFIGURED_ZERO: "reconfigured_0",
    RECONFIGURED_ONE: "reconfigured_1",
    UNSTABLE: "unstable",
}


def table_probabilities(p_o: float, p_r: float) -> Dict[str, float]:
    """Expected share of each cell class.

    A cell is unstable in the original topology with probability ``p_o``;
    an unstable cell stays unstable after reconfiguration with ``p_r``.
    Stable outcomes split evenly between '0' and '1'.
    """
    for name, p in (("p_o", p_o), ("p_r", p_r)):
        if not 0.0 <= p <= 1.0:
            raise ContractError(f"{name} must be a probability", details={name: p})
    return {
        CLASS_NAMES[STABLE_ZERO]: 0.5 * (1 - p_o),
        CLASS_NAMES[STABLE_ONE]: 0.5 * (1 - p_o),
        CLASS_NAMES[RECONFIGURED_ZERO]: 0.5 * p_o * (1 - p_r),
        CLASS_NAMES[RECONFIGURED_ONE]: 0.5 * p_o * (1 - p_r),
        CLASS_NAMES[UNSTABLE]: p_o * p_r,
    }


def predicted_reconfigured_probability(p_o: float, noise: NoiseModel) -> float:
    """First-order P_R for small-margin cells.

    The merged-stage margin is narrower by sqrt(2/1.5) and the shorter chain
    adds noise by gain_original/gain_reconfigured.
    """
    return min(1.0, np.sqrt(2.0 / 1.5) * noise.gain_original / noise.gain_reconfigured * p_o)


@dataclass(eq=False)
class StabilityLedger:
    """Per-cell class assignment after enrollment plus the empirical P_O and P_R."""

    classes: np.ndarray
    p_o: float
    p_r: float

    @classmethod
    def from_maps(
        cls,
        golden: Union[GoldenKey, np.ndarray],
        rmap: RMap,
        golden_reconfigured: Optional[Union[GoldenKey, np.ndarray]] = None,
        mask: Optional[Mask] = None,
    ) -> "StabilityLedger":
        flagged = rmap.reconfigure
        discard = mask_array(mask)
        if discard is None:
            discard = np.zeros_like(flagged)
        before = np.asarray(getattr(golden, "bits", golden))
        after = before if golden_reconfigured is None else np.asarray(
            getattr(golden_reconfigured, "bits", golden_reconfigured)
        )

        classes = np.where(before == 0, STABLE_ZERO, STABLE_ONE)
        classes = np.where(
            flagged, np.where(after == 0, RECONFIGURED_ZERO, RECONFIGURED_ONE), classes
        )
        classes = np.where(flagged & discard, UNSTABLE, classes)

        n_flagged = int(flagged.sum())
        p_o = n_flagged / max(flagged.size, 1)
        p_r = int((flagged & discard).sum()) / n_flagged if n_flagged else 0.0
        return cls(classes=classes.astype(np.int8), p_o=p_o, p_r=p_r)

    @classmethod
    def pooled(cls, ledgers: Sequence["StabilityLedger"]) -> "StabilityLedger":
        """One ledger over the cells of several chips."""
        if not ledgers:
            raise ContractError("At least one ledger is required")
        classes = np.concatenate([ledger.classes.reshape(-1) for ledger in ledgers])
        flagged = int(np.isin(classes, (RECONFIGURED_ZERO, RECONFIGURED_ONE, UNSTABLE)).sum())
        unstable = int(np.count_nonzero(classes == UNSTABLE))
        return cls(
            classes=classes,
            p_o=flagged / classes.size if classes.size else 0.0,
            p_r=unstable / flagged if flagged else 0.0,
        )

    def counts(self) -> Dict[str, int]:
        return {name: int(np.count_nonzero(self.classes == c)) for c, name in CLASS_NAMES.items()}

    def empirical(self) -> Dict[str, float]:
        total = max(self.classes.size, 1)
        return {name: n / total for name, n in self.counts().items()}

    def expected(self) -> Dict[str, float]:
        return table_probabilities(self.p_o, self.p_r)
