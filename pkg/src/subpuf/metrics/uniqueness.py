"""Intra- and inter-die Hamming distances."""
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

from subpuf.core.exceptions import DimensionError


def fractional_hd(
    a: np.ndarray, b: np.ndarray, mask: Optional[np.ndarray] = None
) -> float:
    """Share of differing bits, over the cells not in ``mask``."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise DimensionError("Keys differ in shape", details={"a": a.shape, "b": b.shape})
    keep = np.ones(a.shape, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    cells = int(keep.sum())
    if cells == 0:
        return 0.0
    return float(np.count_nonzero((a != b) & keep)) / cells


class DistributionSummary(BaseModel):
    count: int
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values: Sequence[float]) -> Optional["DistributionSummary"]:
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            return None
        return cls(
            count=int(arr.size),
            mean=float(arr.mean()),
            std=float(arr.std()),
            min=float(arr.min()),
            max=float(arr.max()),
        )


@dataclass
class HammingDistances:
    """Raw distances and their summaries; ``separation`` is mean inter over mean intra."""

    intra: np.ndarray
    inter: np.ndarray

    @property
    def intra_summary(self) -> Optional[DistributionSummary]:
        return DistributionSummary.of(self.intra)

    @property
    def inter_summary(self) -> Optional[DistributionSummary]:
        return DistributionSummary.of(self.inter)

    @property
    def separation(self) -> Optional[float]:
        if self.intra.size == 0 or self.inter.size == 0:
            return None
        intra = float(self.intra.mean())
        if intra == 0.0:
            return float("inf")
        return float(self.inter.mean()) / intra

    def histogram(self, bins: int = 50) -> dict:
        """Counts over [0, 1] for both distributions on shared bin edges."""
        edges = np.linspace(0.0, 1.0, bins + 1)
        return {
            "edges": edges.tolist(),
            "intra": np.histogram(self.intra, edges)[0].tolist(),
            "inter": np.histogram(self.inter, edges)[0].tolist(),
        }


def hamming_distances(
    keys: Sequence[np.ndarray],
    readouts: Optional[Sequence[Sequence[np.ndarray]]] = None,
    masks: Optional[Sequence[Optional[np.ndarray]]] = None,
) -> HammingDistances:
    """Distances of every readout to its own chip's key, and of every key pair.

    With fewer than two keys the inter-die distribution is empty.
    """
    masks = list(masks) if masks is not None else [None] * len(keys)
    if len(masks) != len(keys):
        raise DimensionError("One mask per key is required")

    intra = []
    if readouts is not None:
        if len(readouts) != len(keys):
            raise DimensionError("One readout list per key is required")
        for key, chip_reads, mask in zip(keys, readouts, masks):
            intra.extend(fractional_hd(key, getattr(r, "bits", r), mask) for r in chip_reads)

    inter = []
    for i, j in combinations(range(len(keys)), 2):
        mask = _union(masks[i], masks[j])
        inter.append(fractional_hd(keys[i], keys[j], mask))

    return HammingDistances(intra=np.asarray(intra, dtype=float), inter=np.asarray(inter, dtype=float))


def _union(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if a is None:
        return b
    if b is None:
        return a
    return np.asarray(a, dtype=bool) | np.asarray(b, dtype=bool)
