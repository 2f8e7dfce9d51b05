"""Subset of the NIST SP 800-22 statistical test suite.

Formulas follow the suite's reference descriptions; each test's
``compute`` reproduces the published worked examples. Parameters left unset
are chosen from the sequence length with the suite's recommendations.
"""
import math
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import special, stats

from subpuf.metrics.randomness.base import RandomnessTest, TestResult, to_pm1
from subpuf.metrics.randomness.registry import TestRegistry


class FrequencyTest(RandomnessTest):
    name = "frequency"
    description = "Proportion of ones in the whole sequence"
    min_length = 100

    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        n = bits.size
        s_obs = abs(int(to_pm1(bits).sum())) / math.sqrt(n)
        p = float(special.erfc(s_obs / math.sqrt(2)))
        return [TestResult(name=self.name, statistic=s_obs, p_value=p)]


class BlockFrequencyTest(RandomnessTest):
    name = "block_frequency"
    description = "Proportion of ones within M-bit blocks"
    min_length = 100

    def resolve_params(self, n: int, block_size: Optional[int] = None, **_: Any) -> Dict[str, Any]:
        if block_size is None:
            block_size = 128 if n >= 1280 else 20
        return {"block_size": block_size}

    def compute(self, bits: np.ndarray, block_size: int = 128, **_: Any) -> List[TestResult]:
        n_blocks = bits.size // block_size
        if n_blocks < 1:
            raise ValueError(f"block size {block_size} exceeds sequence length {bits.size}")
        blocks = bits[: n_blocks * block_size].reshape(n_blocks, block_size)
        pi = blocks.mean(axis=1)
        chi2 = 4.0 * block_size * float(np.sum((pi - 0.5) ** 2))
        p = float(special.gammaincc(n_blocks / 2.0, chi2 / 2.0))
        return [
            TestResult(name=self.name, statistic=chi2, p_value=p, params={"block_size": block_size})
        ]


def _cusum_p_value(n: int, z: int) -> float:
    if z == 0:
        return 1.0
    sqrt_n = math.sqrt(n)
    q = n // z
    total = 1.0
    # bounds use C integer division (truncation toward zero)
    for k in range(int((-q + 1) / 4), int((q - 1) / 4) + 1):
        total -= stats.norm.cdf((4 * k + 1) * z / sqrt_n) - stats.norm.cdf((4 * k - 1) * z / sqrt_n)
    for k in range(int((-q - 3) / 4), int((q - 1) / 4) + 1):
        total += stats.norm.cdf((4 * k + 3) * z / sqrt_n) - stats.norm.cdf((4 * k + 1) * z / sqrt_n)
    return float(min(max(total, 0.0), 1.0))


class CumulativeSumsTest(RandomnessTest):
    name = "cumulative_sums"
    description = "Maximal excursion of the random walk, forward and backward"
    min_length = 100
    sub_tests = ["cumulative_sums_forward", "cumulative_sums_backward"]

    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        x = to_pm1(bits)
        results = []
        for sub, seq in zip(self.sub_tests, (x, x[::-1])):
            z = int(np.max(np.abs(np.cumsum(seq))))
            results.append(
                TestResult(name=sub, statistic=float(z), p_value=_cusum_p_value(bits.size, z))
            )
        return results


class RunsTest(RandomnessTest):
    name = "runs"
    description = "Number of uninterrupted runs of identical bits"
    min_length = 100

    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        n = bits.size
        pi = float(bits.mean())
        v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
        if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
            # frequency prerequisite failed
            return [TestResult(name=self.name, statistic=float(v_obs), p_value=0.0)]
        p = special.erfc(
            abs(v_obs - 2.0 * n * pi * (1 - pi)) / (2.0 * math.sqrt(2.0 * n) * pi * (1 - pi))
        )
        return [TestResult(name=self.name, statistic=float(v_obs), p_value=float(p))]


_LONGEST_RUN_TABLES = [
    # (min n, block size M, class upper bounds, class probabilities)
    (6272, 128, [4, 5, 6, 7, 8], [0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124]),
    (128, 8, [1, 2, 3], [0.2148, 0.3672, 0.2305, 0.1875]),
]


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row."""
    longest = np.zeros(blocks.shape[0], dtype=np.int64)
    current = np.zeros(blocks.shape[0], dtype=np.int64)
    for col in blocks.T:
        current = np.where(col == 1, current + 1, 0)
        longest = np.maximum(longest, current)
    return longest


class LongestRunTest(RandomnessTest):
    name = "longest_run"
    description = "Longest run of ones within M-bit blocks"
    min_length = 128

    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        n = bits.size
        _, m, bounds, pi = next(t for t in _LONGEST_RUN_TABLES if n >= t[0])
        n_blocks = n // m
        longest = _longest_runs(bits[: n_blocks * m].reshape(n_blocks, m))
        clipped = np.clip(longest, bounds[0], bounds[-1] + 1)
        counts = np.array([np.count_nonzero(clipped == b) for b in range(bounds[0], bounds[-1] + 2)])
        expected = n_blocks * np.asarray(pi)
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        p = float(special.gammaincc((len(pi) - 1) / 2.0, chi2 / 2.0))
        return [TestResult(name=self.name, statistic=chi2, p_value=p, params={"block_size": m})]


class SpectralTest(RandomnessTest):
    name = "dft"
    description = "Peak heights in the discrete Fourier transform"
    min_length = 1000

    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        n = bits.size
        modulus = np.abs(np.fft.fft(to_pm1(bits)))[: n // 2]
        threshold = math.sqrt(math.log(1 / 0.05) * n)
        n0 = 0.95 * n / 2.0
        n1 = float(np.count_nonzero(modulus < threshold))
        d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
        p = float(special.erfc(abs(d) / math.sqrt(2)))
        return [TestResult(name=self.name, statistic=d, p_value=p)]


def _pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Overlapping m-bit pattern counts with the first m-1 bits wrapped around."""
    if m == 0:
        return np.array([bits.size])
    n = bits.size
    extended = np.concatenate([bits, bits[: m - 1]]).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | extended[j:j + n]
    return np.bincount(codes, minlength=2 ** m)


def _psi_squared(bits: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    n = bits.size
    counts = _pattern_counts(bits, m)
    return float((2 ** m) / n * np.sum(counts.astype(float) ** 2) - n)


class SerialTest(RandomnessTest):
    name = "serial"
    description = "Frequency of all overlapping m-bit patterns"
    min_length = 100
    sub_tests = ["serial_1", "serial_2"]

    def resolve_params(self, n: int, block_size: Optional[int] = None, **_: Any) -> Dict[str, Any]:
        if block_size is None:
            block_size = int(math.floor(math.log2(n))) - 3
        return {"block_size": block_size}

    def compute(self, bits: np.ndarray, block_size: int = 9, **_: Any) -> List[TestResult]:
        m = block_size
        if m < 2:
            raise ValueError("serial block size must be at least 2")
        psi = [_psi_squared(bits, m - i) for i in range(3)]
        d1 = psi[0] - psi[1]
        d2 = psi[0] - 2 * psi[1] + psi[2]
        p1 = float(special.gammaincc(2 ** (m - 2), d1 / 2.0))
        first = TestResult(name="serial_1", statistic=d1, p_value=p1, params={"block_size": m})
        if m < 3:
            return [first, TestResult.skip("serial_2", "needs block size of at least 3")]
        p2 = float(special.gammaincc(2 ** (m - 3), d2 / 2.0))
        return [
            first,
            TestResult(name="serial_2", statistic=d2, p_value=p2, params={"block_size": m}),
        ]


class ApproximateEntropyTest(RandomnessTest):
    name = "approximate_entropy"
    description = "Frequency of overlapping m- and (m+1)-bit patterns"
    min_length = 100

    def resolve_params(self, n: int, block_size: Optional[int] = None, **_: Any) -> Dict[str, Any]:
        if block_size is None:
            block_size = max(1, int(math.floor(math.log2(n))) - 6)
        return {"block_size": block_size}

    @staticmethod
    def _phi(bits: np.ndarray, m: int) -> float:
        counts = _pattern_counts(bits, m)
        freq = counts[counts > 0] / bits.size
        return float(np.sum(freq * np.log(freq)))

    def compute(self, bits: np.ndarray, block_size: int = 6, **_: Any) -> List[TestResult]:
        n, m = bits.size, block_size
        ap_en = self._phi(bits, m) - self._phi(bits, m + 1)
        chi2 = 2.0 * n * (math.log(2) - ap_en)
        p = float(special.gammaincc(2 ** (m - 1), chi2 / 2.0))
        return [TestResult(name=self.name, statistic=chi2, p_value=p, params={"block_size": m})]


ALL_TESTS = [
    FrequencyTest,
    BlockFrequencyTest,
    CumulativeSumsTest,
    RunsTest,
    LongestRunTest,
    SpectralTest,
    SerialTest,
    ApproximateEntropyTest,
]


def default_registry() -> TestRegistry:
    registry = TestRegistry()
    for cls in ALL_TESTS:
        registry.register(cls())
    return registry
