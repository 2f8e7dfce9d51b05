"""Quick oracle checks behind ``subpuf selftest``.

Each check compares the implementation against a closed-form or published
reference value and returns a :class:`CheckResult`; none of them raises on
a mismatch.
"""
from typing import Callable, List

import numpy as np
from pydantic import BaseModel

from subpuf.cell.model import CellMismatch, original_margin, reconfigured_margin, switching_voltage
from subpuf.chip.sim import Process
from subpuf.core.config import Settings
from subpuf.core.constants import CELSIUS_OFFSET
from subpuf.device.mismatch import RandomStream
from subpuf.metrics.randomness import nist
from subpuf.metrics.sequence import autocorrelation_bound, shannon_entropy
from subpuf.regulator.model import (
    sensitivity_sweep,
    virtual_vdd_closed_form,
    virtual_vdd_fixed_point,
)
from subpuf.stabilize.golden import tmv, tmv_error_probability

FREQUENCY_EXAMPLE = (
    "11001001000011111101101010100010001000010110100011"
    "00001000110100110001001100011001100010100010111000"
)


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


def _bits(text: str) -> np.ndarray:
    return np.array([int(c) for c in text], dtype=np.uint8)


def _close(name: str, got: float, want: float, tol: float) -> CheckResult:
    return CheckResult(
        name=name, passed=abs(got - want) <= tol, detail=f"got {got:.6f}, want {want:.6f}"
    )


def check_nist_examples(settings: Settings) -> List[CheckResult]:
    serial = nist.SerialTest().compute(_bits("0011011101"), block_size=3)
    cusum = nist.CumulativeSumsTest().compute(_bits("1011010111"))
    return [
        _close(
            "nist frequency example",
            nist.FrequencyTest().compute(_bits(FREQUENCY_EXAMPLE))[0].p_value,
            0.109599,
            1e-6,
        ),
        _close(
            "nist block frequency example",
            nist.BlockFrequencyTest().compute(_bits("0110011010"), block_size=3)[0].p_value,
            0.801252,
            1e-6,
        ),
        _close(
            "nist runs example",
            nist.RunsTest().compute(_bits("1001101011"))[0].p_value,
            0.147232,
            1e-6,
        ),
        _close("nist cusum forward example", cusum[0].p_value, 0.4116588, 1e-6),
        _close("nist serial 1 example", serial[0].p_value, 0.808792, 1e-6),
        _close("nist serial 2 example", serial[1].p_value, 0.670320, 1e-6),
        _close(
            "nist dft example",
            nist.SpectralTest().compute(_bits("1001010011"))[0].p_value,
            0.029523,
            1e-6,
        ),
    ]


def check_entropy(settings: Settings) -> List[CheckResult]:
    bits = np.zeros(1000, dtype=np.uint8)
    bits[:489] = 1
    return [_close("entropy at p=0.489", shannon_entropy(bits), 0.99965, 1e-5)]


def check_autocorrelation_bound(settings: Settings) -> List[CheckResult]:
    bound = autocorrelation_bound(40960, settings.metrics.autocorr_bound_scale)
    return [
        CheckResult(
            name="autocorrelation bound at N=40960",
            passed=abs(bound - 0.01385) <= 0.1 * 0.01385,
            detail=f"bound {bound:.6f}",
        )
    ]


def check_tmv_oracle(settings: Settings, trials: int = 20000) -> List[CheckResult]:
    k = 11
    results = []
    for i, p in enumerate((0.05, 0.1, 0.3)):
        draws = RandomStream(0, (i,)).generator().random((k, trials)) < p
        empirical = float(np.mean(tmv(draws.astype(np.uint8), k)))
        exact = tmv_error_probability(p, k)
        band = 3.0 * np.sqrt(exact * (1 - exact) / trials) + 1.0 / trials
        results.append(
            CheckResult(
                name=f"tmv-{k} error at p={p}",
                passed=abs(empirical - exact) <= band,
                detail=f"monte carlo {empirical:.5f}, exact {exact:.5f}",
            )
        )
    return results


def check_regulator(settings: Settings) -> List[CheckResult]:
    cfg = Process.from_settings(settings).regulator_template(settings.geometry)
    nominal = settings.environment.nominal
    grid = [
        nominal.with_(temperature=t + CELSIUS_OFFSET, bias_vbias=nominal.bias_vbias + db)
        for t in (-55.0, -10.0, 27.0, 70.0, 125.0)
        for db in (-0.04, -0.02, 0.0, 0.02, 0.04)
    ]
    worst = max(
        abs(virtual_vdd_closed_form(cfg, env) - virtual_vdd_fixed_point(cfg, env)) for env in grid
    )
    low = virtual_vdd_closed_form(cfg, nominal.with_(supply_vdd=0.7))
    high = virtual_vdd_closed_form(cfg, nominal.with_(supply_vdd=1.4))
    sweep = sensitivity_sweep(cfg, [nominal.with_(supply_vdd=0.7), nominal.with_(supply_vdd=1.4)])
    line = max(abs(v) for v in sweep.line_sensitivity.values()) if sweep.line_sensitivity else float("nan")
    return [
        CheckResult(
            name="regulator closed form vs fixed point",
            passed=worst < 1e-3,
            detail=f"worst gap {1e3 * worst:.4f} mV over {len(grid)} points",
        ),
        CheckResult(
            name="regulator closed form supply independence",
            passed=low == high,
            detail=f"{low:.9f} V at 0.7 V, {high:.9f} V at 1.4 V",
        ),
        CheckResult(
            name="regulator line sensitivity",
            passed=line < 6.0,
            detail=f"{line:.3f} mV/V",
        ),
    ]


def check_variance_algebra(settings: Settings, cells: int = 20000) -> List[CheckResult]:
    process = Process.from_settings(settings)
    env = settings.environment.nominal
    v_vdd = virtual_vdd_closed_form(process.regulator_template(settings.geometry), env)
    sample = CellMismatch.sample(process.design, settings.mismatch, RandomStream(0, (99,)), cells)
    d = process.design
    sigma_vm = float(np.std(
        switching_voltage(d.nmos, d.pmos, env, v_vdd, sample.nmos[3], sample.pmos[3])
    ))
    ratio_o = float(np.std(original_margin(sample, env, v_vdd))) / sigma_vm
    ratio_r = float(np.std(reconfigured_margin(sample, env, v_vdd))) / sigma_vm
    return [
        _close("original margin spread", ratio_o, np.sqrt(2.0), 0.03 * np.sqrt(2.0)),
        _close("reconfigured margin spread", ratio_r, np.sqrt(1.5), 0.03 * np.sqrt(1.5)),
    ]


CHECKS: List[Callable[[Settings], List[CheckResult]]] = [
    check_nist_examples,
    check_entropy,
    check_autocorrelation_bound,
    check_tmv_oracle,
    check_regulator,
    check_variance_algebra,
]


def run_checks(settings: Settings) -> List[CheckResult]:
    results: List[CheckResult] = []
    for check in CHECKS:
        results.extend(check(settings))
    return results
