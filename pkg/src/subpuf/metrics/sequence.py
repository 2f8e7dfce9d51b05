"""Autocorrelation and bit-bias entropy of flat bit sequences."""
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO, Union

import numpy as np
from scipy import stats

from subpuf.core.constants import AUTOCORR_Z95, DEFAULT_AUTOCORR_BOUND_SCALE
from subpuf.core.exceptions import ContractError


def autocorrelation_bound(n: int, scale: float = DEFAULT_AUTOCORR_BOUND_SCALE) -> float:
    """95% white-noise band: scale * 1.96 / sqrt(n).

    The default scale sqrt(2) gives 0.013697 at n = 40960.
    """
    return scale * AUTOCORR_Z95 / math.sqrt(n)


@dataclass
class Autocorrelation:
    lags: np.ndarray
    values: np.ndarray
    bound: float

    @property
    def within_bound(self) -> float:
        """Share of lags whose |value| is inside the bound."""
        if self.values.size == 0:
            return 1.0
        return float(np.mean(np.abs(self.values) <= self.bound))

    def write_csv(self, target: Union[str, Path, TextIO]) -> None:
        if isinstance(target, (str, Path)):
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", newline="") as f:
                self.write_csv(f)
            return
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["lag", "autocorrelation", "bound"])
        for lag, value in zip(self.lags, self.values):
            writer.writerow([int(lag), f"{value:.9f}", f"{self.bound:.9f}"])


def autocorrelation(
    bits: np.ndarray, max_lag: int, bound_scale: float = DEFAULT_AUTOCORR_BOUND_SCALE
) -> Autocorrelation:
    """Normalised autocorrelation of the +/-1 sequence at lags 1..max_lag.

    The mean is removed and each lag's mean product is divided by the
    variance (denominator N). A constant sequence has correlation 1 at every
    lag. Computed by FFT.

    Raises:
        ContractError: If ``max_lag`` is not below the sequence length.
    """
    x = 2.0 * np.asarray(bits, dtype=float).reshape(-1) - 1.0
    n = x.size
    if not 1 <= max_lag < n:
        raise ContractError("max_lag must be in [1, length)", details={"max_lag": max_lag, "n": n})
    lags = np.arange(1, max_lag + 1)
    centred = x - x.mean()
    variance = float(np.mean(centred ** 2))
    if variance == 0.0:
        values = np.ones(max_lag)
    else:
        size = 1 << (2 * n - 1).bit_length()
        spectrum = np.fft.rfft(centred, size)
        raw = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1]
        values = raw[1:] / (n - lags) / variance
    return Autocorrelation(lags=lags, values=values, bound=autocorrelation_bound(n, bound_scale))


def ones_fraction(bits: np.ndarray) -> float:
    bits = np.asarray(bits).reshape(-1)
    if bits.size == 0:
        raise ContractError("Entropy needs a non-empty sequence")
    return float(np.mean(bits))


def shannon_entropy(bits: np.ndarray) -> float:
    """Binary entropy of the ones fraction, in bits per bit."""
    p = ones_fraction(bits)
    return float(stats.entropy([p, 1.0 - p], base=2))
