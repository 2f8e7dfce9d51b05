"""Reliability metrics against a golden key.

Readouts are stacked as an (n_evals, rows, cols) array or passed as a
sequence of (rows, cols) matrices. Masked cells are excluded from every
denominator.
"""
from typing import Optional, Sequence, Union

import numpy as np

from subpuf.core.exceptions import ContractError, DimensionError

BitStack = Union[np.ndarray, Sequence[np.ndarray]]


def _stack(readouts: BitStack) -> np.ndarray:
    if isinstance(readouts, np.ndarray):
        stack = readouts
    else:
        stack = np.stack([getattr(r, "bits", r) for r in readouts]) if len(readouts) else None
    if stack is None or stack.shape[0] == 0:
        raise ContractError("At least one readout is required")
    return np.asarray(stack, dtype=np.uint8)


def _keep(shape, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise DimensionError(
            "Mask shape does not match key", details={"mask": mask.shape, "key": shape}
        )
    return ~mask


def flip_counts(golden: np.ndarray, readouts: BitStack) -> np.ndarray:
    """Per-cell number of readouts that disagree with ``golden``.

    Raises:
        DimensionError: If a readout does not have the golden key's shape.
    """
    golden = np.asarray(golden, dtype=np.uint8)
    stack = _stack(readouts)
    if stack.shape[1:] != golden.shape:
        raise DimensionError(
            "Readout shape does not match golden key",
            details={"readout": stack.shape[1:], "golden": golden.shape},
        )
    return np.count_nonzero(stack != golden, axis=0)


def ber_from_counts(
    counts: np.ndarray, n_evals: int, mask: Optional[np.ndarray] = None
) -> float:
    keep = _keep(counts.shape, mask)
    cells = int(keep.sum())
    if cells == 0 or n_evals == 0:
        return 0.0
    return float(counts[keep].sum()) / (cells * n_evals)


def unstable_from_counts(counts: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    keep = _keep(counts.shape, mask)
    cells = int(keep.sum())
    if cells == 0:
        return 0.0
    return float(np.count_nonzero(counts[keep])) / cells


def ber(golden: np.ndarray, readouts: BitStack, mask: Optional[np.ndarray] = None) -> float:
    """Mismatching bits over cells x evaluations."""
    counts = flip_counts(golden, readouts)
    return ber_from_counts(counts, _stack(readouts).shape[0], mask)


def unstable_fraction(
    golden: np.ndarray, readouts: BitStack, mask: Optional[np.ndarray] = None
) -> float:
    """Fraction of cells that disagreed with ``golden`` at least once."""
    return unstable_from_counts(flip_counts(golden, readouts), mask)


def unstable_growth(
    golden: np.ndarray, readouts: BitStack, mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """Unstable fraction after each successive readout (non-decreasing)."""
    golden = np.asarray(golden, dtype=np.uint8)
    stack = _stack(readouts)
    keep = _keep(golden.shape, mask)
    ever = np.logical_or.accumulate(stack != golden, axis=0)
    cells = max(int(keep.sum()), 1)
    return ever[:, keep].sum(axis=1) / cells


def ber_growth(
    golden: np.ndarray, readouts: BitStack, mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """Cumulative BER after each successive readout."""
    golden = np.asarray(golden, dtype=np.uint8)
    stack = _stack(readouts)
    keep = _keep(golden.shape, mask)
    per_eval = (stack != golden)[:, keep].sum(axis=1)
    cells = max(int(keep.sum()), 1)
    return np.cumsum(per_eval) / (cells * np.arange(1, stack.shape[0] + 1))


def bit_aliasing(
    keys: BitStack, masks: Optional[Sequence[Optional[np.ndarray]]] = None
) -> np.ndarray:
    """Per-cell fraction of ones across chips (ideal 0.5).

    A chip that masks a cell leaves that cell's average; cells masked on
    every chip are NaN.
    """
    stack = _stack(keys)
    if masks is None:
        return stack.mean(axis=0)
    if len(masks) != stack.shape[0]:
        raise DimensionError("One mask per key is required")
    keep = np.stack([_keep(stack.shape[1:], m) for m in masks])
    ones = (stack * keep).sum(axis=0)
    n = keep.sum(axis=0)
    return np.divide(ones, n, out=np.full(n.shape, np.nan), where=n > 0)
