"""Golden keys and temporal majority voting."""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from subpuf.cell.noise import NoiseModel
from subpuf.chip.sim import ChipInstance, evaluate_array
from subpuf.core.constants import PURPOSE_GOLDEN
from subpuf.core.exceptions import ContractError
from subpuf.core.logging import get_logger
from subpuf.device.params import Environment
from subpuf.stabilize.maps import RMap

logger = get_logger(__name__)


def _require_odd(k: int, name: str = "k") -> None:
    if k < 1 or k % 2 == 0:
        raise ContractError(f"{name} must be a positive odd count", details={name: k})


@dataclass(eq=False)
class GoldenKey:
    """Majority key with the per-cell ones tally it was voted from."""

    bits: np.ndarray
    collected_at: Environment
    votes: int
    ones: np.ndarray
    reconfigure: Optional[np.ndarray] = None

    def __post_init__(self):
        _require_odd(self.votes, "votes")

    @property
    def dissent(self) -> np.ndarray:
        """Fraction of votes against the majority, per cell."""
        return np.minimum(self.ones, self.votes - self.ones) / self.votes

    def unstable(self, threshold: float = 0.0) -> np.ndarray:
        """Cells whose dissent exceeds ``threshold``."""
        return self.dissent > threshold


def collect_golden(
    chip: ChipInstance,
    env_nominal: Environment,
    noise: NoiseModel,
    votes: int,
    rmap: Optional[Union[RMap, np.ndarray]] = None,
    threads: int = 1,
) -> GoldenKey:
    """Per-cell majority over ``votes`` evaluations at ``env_nominal``.

    With ``rmap`` the flagged cells are read in the reconfigured topology.

    Raises:
        ContractError: If ``votes`` is even or below 3.
    """
    _require_odd(votes, "votes")
    if votes < 3:
        raise ContractError("Golden keys need at least 3 votes", details={"votes": votes})
    readouts = evaluate_array(
        chip, env_nominal, rmap, noise, votes, purpose=PURPOSE_GOLDEN, threads=threads
    )
    ones = np.sum([r.bits for r in readouts], axis=0, dtype=np.int64)
    flags = None
    if rmap is not None:
        flags = np.asarray(getattr(rmap, "reconfigure", rmap), dtype=bool).copy()
    golden = GoldenKey(
        bits=(2 * ones > votes).astype(np.uint8),
        collected_at=env_nominal,
        votes=votes,
        ones=ones,
        reconfigure=flags,
    )
    logger.info(
        "golden collected",
        chip_id=chip.chip_id,
        votes=votes,
        reconfigured=0 if flags is None else int(flags.sum()),
        dissenting=int(golden.unstable().sum()),
    )
    return golden


def tmv(samples: Union[Sequence[int], np.ndarray], k: int) -> Union[int, np.ndarray]:
    """Majority of ``k`` samples.

    ``samples`` may be a flat sequence of k bits or an array whose first axis
    has length k, in which case the vote is taken per element.

    Raises:
        ContractError: If ``k`` is even or does not match the sample count.
    """
    _require_odd(k)
    arr = np.asarray(samples, dtype=np.int64)
    if arr.shape[0] != k:
        raise ContractError(
            "Sample count does not match k", details={"k": k, "samples": int(arr.shape[0])}
        )
    out = (2 * arr.sum(axis=0) > k).astype(np.uint8)
    return int(out) if out.ndim == 0 else out


def tmv_error_probability(p: Union[float, np.ndarray], k: int) -> Union[float, np.ndarray]:
    """Probability that a k-vote majority is wrong, P(Bin(k, p) > k/2)."""
    _require_odd(k)
    result = stats.binom.sf(k // 2, k, p)
    return float(result) if np.ndim(result) == 0 else result
