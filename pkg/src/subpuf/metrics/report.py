"""Evaluation report: the metric bundle for a set of chips.

Usage:
    report = build_report(keys, readouts, masks, settings.metrics)
    Path("report.json").write_text(report.to_json())
    print(report.to_text())
"""
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy import special

from subpuf.core.config import MetricsSettings, NistSettings
from subpuf.core.exceptions import DimensionError
from subpuf.core.logging import get_logger
from subpuf.metrics.randomness.base import TestResult
from subpuf.metrics.randomness.nist import default_registry
from subpuf.metrics.randomness.registry import TestRegistry
from subpuf.metrics.reliability import bit_aliasing, flip_counts
from subpuf.metrics.sequence import autocorrelation, shannon_entropy
from subpuf.metrics.uniqueness import DistributionSummary, hamming_distances
from subpuf.stabilize.apply import StabilityLedger

logger = get_logger(__name__)


class AutocorrSeries(BaseModel):
    lags: List[int]
    values: List[float]
    bound: float
    within_bound: float = Field(ge=0, le=1)


class ChipTestResults(BaseModel):
    chip_id: str
    n_bits: int
    results: List[TestResult]


class TestSummary(BaseModel):
    """One row of the randomness table: pass rate and p-value uniformity over chips."""

    __test__ = False

    name: str
    applicable: int
    passed: int
    pass_rate: Optional[float] = None
    uniformity_p: Optional[float] = None


class ClassShare(BaseModel):
    """Observed vs predicted share of one stability class."""

    name: str
    count: int
    empirical: float = Field(ge=0, le=1)
    expected: float = Field(ge=0, le=1)


class EvalReport(BaseModel):
    n_chips: int
    n_evals: int
    ber: Optional[float] = Field(default=None, ge=0, le=1)
    unstable_fraction: Optional[float] = Field(default=None, ge=0, le=1)
    intra_hd: Optional[DistributionSummary] = None
    inter_hd: Optional[DistributionSummary] = None
    separation: Optional[float] = None
    aliasing: Optional[DistributionSummary] = None
    autocorr: Optional[AutocorrSeries] = None
    entropy_bits: float = Field(ge=0, le=1)
    test_results: List[ChipTestResults] = Field(default_factory=list)
    test_summary: List[TestSummary] = Field(default_factory=list)
    p_o: Optional[float] = Field(default=None, ge=0, le=1)
    p_r: Optional[float] = Field(default=None, ge=0, le=1)
    stability: List[ClassShare] = Field(default_factory=list)

    @property
    def pass_rate(self) -> Optional[float]:
        """Pooled pass rate over every applicable (non-skipped) sub-test run."""
        applicable = sum(row.applicable for row in self.test_summary)
        if applicable == 0:
            return None
        return sum(row.passed for row in self.test_summary) / applicable

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def to_text(self) -> str:
        def fmt(value: Optional[float], spec: str = ".6f") -> str:
            return "-" if value is None else format(value, spec)

        lines = [
            f"{'chips':<22}{self.n_chips}",
            f"{'evaluations':<22}{self.n_evals}",
            f"{'ber':<22}{fmt(self.ber, '.6%')}",
            f"{'unstable fraction':<22}{fmt(self.unstable_fraction, '.4%')}",
            f"{'intra-die HD mean':<22}{fmt(self.intra_hd.mean if self.intra_hd else None)}",
            f"{'inter-die HD mean':<22}{fmt(self.inter_hd.mean if self.inter_hd else None)}",
            f"{'separation':<22}{fmt(self.separation, '.1f')}",
            f"{'bit aliasing mean':<22}{fmt(self.aliasing.mean if self.aliasing else None)}",
            f"{'entropy (bit/bit)':<22}{fmt(self.entropy_bits)}",
        ]
        if self.autocorr is not None:
            lines.append(
                f"{'autocorr in bound':<22}{self.autocorr.within_bound:.2%}"
                f" (bound {self.autocorr.bound:.6f}, {len(self.autocorr.lags)} lags)"
            )
        if self.stability:
            lines += [
                "",
                f"P_O {fmt(self.p_o, '.4%')}  P_R {fmt(self.p_r, '.4%')}",
                f"{'class':<22}{'count':>10}{'observed':>12}{'predicted':>12}",
            ]
            for share in self.stability:
                lines.append(
                    f"{share.name:<22}{share.count:>10}"
                    f"{share.empirical:>12.4%}{share.expected:>12.4%}"
                )
        if self.test_summary:
            lines += ["", f"{'test':<28}{'passed':>10}{'rate':>10}{'uniformity p':>16}"]
            for row in self.test_summary:
                lines.append(
                    f"{row.name:<28}{f'{row.passed}/{row.applicable}':>10}"
                    f"{fmt(row.pass_rate, '.2%'):>10}{fmt(row.uniformity_p):>16}"
                )
        return "\n".join(lines) + "\n"


def nist_params(nist: NistSettings) -> Dict[str, Dict[str, Optional[int]]]:
    return {
        "block_frequency": {"block_size": nist.block_frequency_m},
        "serial": {"block_size": nist.serial_m},
        "approximate_entropy": {"block_size": nist.approximate_entropy_m},
    }


def key_sequence(key: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Row-major key bits with masked cells dropped."""
    key = np.asarray(key, dtype=np.uint8)
    if mask is None:
        return key.reshape(-1)
    return key[~np.asarray(mask, dtype=bool)]


def uniformity_p_value(p_values: Sequence[float], bins: int = 10) -> Optional[float]:
    """Chi-square uniformity of p-values over ``bins`` equal intervals."""
    if len(p_values) == 0:
        return None
    counts = np.histogram(np.clip(p_values, 0.0, 1.0), bins=bins, range=(0.0, 1.0))[0]
    expected = len(p_values) / bins
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    return float(special.gammaincc((bins - 1) / 2.0, chi2 / 2.0))


def summarize_tests(per_chip: Sequence[ChipTestResults]) -> List[TestSummary]:
    grouped: Dict[str, List[TestResult]] = defaultdict(list)
    for chip in per_chip:
        for result in chip.results:
            grouped[result.name].append(result)
    rows = []
    for name, results in grouped.items():
        ran = [r for r in results if not r.skipped]
        passed = sum(1 for r in ran if r.passed)
        rows.append(
            TestSummary(
                name=name,
                applicable=len(ran),
                passed=passed,
                pass_rate=passed / len(ran) if ran else None,
                uniformity_p=uniformity_p_value([r.p_value for r in ran]),
            )
        )
    return rows


def stability_shares(ledger: StabilityLedger) -> List[ClassShare]:
    counts = ledger.counts()
    empirical = ledger.empirical()
    expected = ledger.expected()
    return [
        ClassShare(name=name, count=n, empirical=empirical[name], expected=expected[name])
        for name, n in counts.items()
    ]


def nist_800_22_subset(
    bits: np.ndarray,
    nist: Optional[NistSettings] = None,
    registry: Optional[TestRegistry] = None,
) -> List[TestResult]:
    """Every enabled randomness test on ``bits`` with the configured parameters.

    Tests whose minimum length exceeds the sequence are returned as skipped.
    """
    nist = nist or NistSettings()
    registry = registry or default_registry()
    return registry.run_all(bits, alpha=nist.alpha, enabled=nist.enabled, params=nist_params(nist))


def run_nist(
    sequences: Sequence[np.ndarray],
    chip_ids: Sequence[str],
    nist: NistSettings,
    registry: Optional[TestRegistry] = None,
) -> List[ChipTestResults]:
    registry = registry or default_registry()
    return [
        ChipTestResults(
            chip_id=chip_id,
            n_bits=int(bits.size),
            results=nist_800_22_subset(bits, nist, registry),
        )
        for chip_id, bits in zip(chip_ids, sequences)
    ]


def build_report(
    keys: Sequence[np.ndarray],
    readouts: Optional[Sequence[Sequence[np.ndarray]]] = None,
    masks: Optional[Sequence[Optional[np.ndarray]]] = None,
    settings: Optional[MetricsSettings] = None,
    chip_ids: Optional[Sequence[str]] = None,
    registry: Optional[TestRegistry] = None,
    ledgers: Optional[Sequence[StabilityLedger]] = None,
) -> EvalReport:
    """Evaluate every metric over a set of chips.

    BER and unstable fraction pool flips over all chips; masked cells leave
    every denominator. The randomness suite runs on the first
    ``bits_per_chip`` unmasked key bits of each chip and autocorrelation and
    entropy on their concatenation.

    Bit aliasing is reported from two chips up. With ``ledgers`` the pooled
    stability classes are compared against the shares predicted from P_O
    and P_R.

    Raises:
        DimensionError: If the per-chip inputs disagree in count or shape.
    """
    settings = settings or MetricsSettings()
    if not keys:
        raise DimensionError("At least one key is required")
    masks = list(masks) if masks is not None else [None] * len(keys)
    chip_ids = list(chip_ids) if chip_ids is not None else [f"chip-{i}" for i in range(len(keys))]
    if len(masks) != len(keys) or len(chip_ids) != len(keys):
        raise DimensionError("Keys, masks and chip ids must have one entry per chip")

    ber = unstable = None
    n_evals = 0
    if readouts is not None:
        if len(readouts) != len(keys):
            raise DimensionError("One readout list per key is required")
        n_evals = len(readouts[0])
        flips = bit_slots = ever = cells = 0
        for key, chip_reads, mask in zip(keys, readouts, masks):
            if len(chip_reads) != n_evals:
                raise DimensionError("Every chip needs the same number of readouts")
            counts = flip_counts(key, chip_reads)
            keep = np.ones(counts.shape, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
            flips += int(counts[keep].sum())
            ever += int(np.count_nonzero(counts[keep]))
            cells += int(keep.sum())
            bit_slots += int(keep.sum()) * n_evals
        ber = flips / bit_slots if bit_slots else 0.0
        unstable = ever / cells if cells else 0.0

    hd = hamming_distances(keys, readouts, masks)

    sequences = [key_sequence(k, m)[: settings.bits_per_chip] for k, m in zip(keys, masks)]
    pooled = np.concatenate(sequences)

    series = None
    max_lag = min(settings.autocorr_max_lag, pooled.size - 1)
    if max_lag >= 1:
        ac = autocorrelation(pooled, max_lag, settings.autocorr_bound_scale)
        series = AutocorrSeries(
            lags=ac.lags.tolist(),
            values=ac.values.tolist(),
            bound=ac.bound,
            within_bound=ac.within_bound,
        )

    aliasing = None
    if len(keys) >= 2:
        per_cell = bit_aliasing(keys, masks)
        aliasing = DistributionSummary.of(per_cell[~np.isnan(per_cell)])

    ledger = StabilityLedger.pooled(ledgers) if ledgers else None

    per_chip = run_nist(sequences, chip_ids, settings.nist, registry)
    report = EvalReport(
        n_chips=len(keys),
        n_evals=n_evals,
        ber=ber,
        unstable_fraction=unstable,
        intra_hd=hd.intra_summary,
        inter_hd=hd.inter_summary,
        separation=hd.separation,
        aliasing=aliasing,
        autocorr=series,
        entropy_bits=shannon_entropy(pooled),
        test_results=per_chip,
        test_summary=summarize_tests(per_chip),
        p_o=ledger.p_o if ledger else None,
        p_r=ledger.p_r if ledger else None,
        stability=stability_shares(ledger) if ledger else [],
    )
    logger.info(
        "report built",
        chips=report.n_chips,
        ber=report.ber,
        inter_hd=report.inter_hd.mean if report.inter_hd else None,
        pass_rate=report.pass_rate,
    )
    return report
