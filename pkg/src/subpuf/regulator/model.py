"""Native-transistor supply regulation.

The native transistor M0 acts as a source follower from the supply to the
virtual rail V_VDD; the first inverter stage (pull-down M2 at V_gs = V_M)
sinks the column current. Balancing the two subthreshold currents gives
V_VDD, either in closed form (drain terms dropped) or as a numeric fixed
point (drain terms kept).
"""
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from subpuf.core.constants import BISECTION_MAX_ITER, BISECTION_XTOL_V
from subpuf.core.exceptions import ContractError, ConvergenceError, RegulatorConfigError
from subpuf.device.model import (
    effective_vth,
    log_subthreshold_current,
    mobility_factor,
    thermal_voltage,
)
from subpuf.device.params import Environment, PhysicalConstants, TransistorParams

_CONSTANTS = PhysicalConstants()


class RegulatorConfig(BaseModel):
    """One native regulator and the load it drives."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    native: TransistorParams
    pull_down: TransistorParams
    cells_per_regulator: int = Field(default=32, ge=1)
    vm_fraction: float = Field(default=0.5, gt=0, lt=1)
    native_offset: float = Field(default=0.0, description="sampled native Vth offset, V")
    pull_down_offset: float = Field(default=0.0, description="shift of the average load Vth, V")


@dataclass(frozen=True)
class _Coefficients:
    log_term: float
    vth2: float
    bias: float


def _coefficients(cfg: RegulatorConfig) -> _Coefficients:
    m0 = cfg.native.slope_m
    m2 = cfg.pull_down.slope_m
    denominator = m2 + cfg.vm_fraction * m0
    return _Coefficients(
        log_term=m0 * m2 / denominator,
        vth2=m0 / denominator,
        bias=m2 / denominator,
    )


def strength_ratio(cfg: RegulatorConfig) -> float:
    """Argument of the closed-form logarithm, including the N-cell load."""
    n, p = cfg.native, cfg.pull_down
    return (
        n.mobility_cox * n.width_w * p.length_l * (n.slope_m - 1)
    ) / (
        cfg.cells_per_regulator
        * p.mobility_cox * p.width_w * n.length_l * (p.slope_m - 1)
    )


def _thresholds(cfg: RegulatorConfig, env: Environment) -> Tuple[float, float]:
    vth0 = effective_vth(cfg.native, env, v_sb=0.0) + cfg.native_offset
    vth2 = effective_vth(cfg.pull_down, env) + cfg.pull_down_offset
    return vth0, vth2


def virtual_vdd_closed_form(cfg: RegulatorConfig, env: Environment) -> float:
    """Closed-form V_VDD with drain terms neglected.

    For V_M = V_VDD/2 this is
    (2m0m2/(m0+2m2)) V_T ln(R/N) + (2m0/(m0+2m2)) Vth2 + (2m2/(m0+2m2))(V_BIAS - Vth0).
    The supply voltage does not enter.

    Raises:
        RegulatorConfigError: If the logarithm argument is not positive.
    """
    ratio = strength_ratio(cfg)
    if not ratio > 0:
        raise RegulatorConfigError(
            "Non-positive regulator strength ratio", details={"ratio": ratio}
        )
    c = _coefficients(cfg)
    v_t = thermal_voltage(_CONSTANTS, env.temperature)
    vth0, vth2 = _thresholds(cfg, env)
    return float(
        c.log_term * v_t * math.log(ratio)
        + c.vth2 * vth2
        + c.bias * (env.bias_vbias - vth0)
    )


def current_balance(cfg: RegulatorConfig, env: Environment, v_vdd: float) -> float:
    """ln(I_native) - ln(N * I_pulldown) at the candidate rail ``v_vdd``.

    Strictly decreasing in ``v_vdd``.
    """
    v_t = thermal_voltage(_CONSTANTS, env.temperature)
    mu = mobility_factor(env.temperature)
    vth0, vth2 = _thresholds(cfg, env)
    v_m = cfg.vm_fraction * v_vdd
    log_native = log_subthreshold_current(
        cfg.native,
        v_gs=env.bias_vbias - v_vdd,
        v_ds=env.supply_vdd - v_vdd,
        vth_eff=vth0,
        v_t=v_t,
        mobility_scale=mu,
    )
    log_load = log_subthreshold_current(
        cfg.pull_down,
        v_gs=v_m,
        v_ds=v_m,
        vth_eff=vth2,
        v_t=v_t,
        mobility_scale=mu,
    )
    return float(log_native - math.log(cfg.cells_per_regulator) - log_load)


@dataclass(frozen=True)
class FixedPointResult:
    """Outcome of the regulator current-balance solve."""

    v_vdd: float
    iterations: int
    converged: bool


def solve_fixed_point(cfg: RegulatorConfig, env: Environment) -> FixedPointResult:
    """Bisect the current balance on (0, supply) to 1 uV.

    Raises:
        ConvergenceError: If the balance does not change sign in the interval.
    """
    edge = 1e-9
    lo, hi = edge, env.supply_vdd - edge
    if hi <= lo:
        raise ConvergenceError(
            "Supply too low to bracket the regulator fixed point",
            details={"supply_vdd": env.supply_vdd},
        )
    f_lo = current_balance(cfg, env, lo)
    f_hi = current_balance(cfg, env, hi)
    if not (f_lo > 0 > f_hi):
        raise ConvergenceError(
            "No sign change of the regulator current balance",
            details={
                "bracket": [lo, hi],
                "balance": [f_lo, f_hi],
                "temperature": env.temperature,
                "supply_vdd": env.supply_vdd,
                "bias_vbias": env.bias_vbias,
            },
        )
    root, info = optimize.bisect(
        lambda v: current_balance(cfg, env, v),
        lo,
        hi,
        xtol=BISECTION_XTOL_V,
        maxiter=BISECTION_MAX_ITER,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise ConvergenceError(
            "Regulator bisection did not converge",
            details={"iterations": info.iterations, "flag": info.flag},
        )
    return FixedPointResult(v_vdd=float(root), iterations=info.iterations, converged=True)


def virtual_vdd_fixed_point(cfg: RegulatorConfig, env: Environment) -> float:
    """V_VDD at which native and N-cell load currents balance (drain terms kept)."""
    return solve_fixed_point(cfg, env).v_vdd


def solve_bias_for_vvdd(
    cfg: RegulatorConfig,
    env: Environment,
    target_vvdd: float,
    fixed_point: bool = False,
    bracket: Tuple[float, float] = (-0.5, 1.5),
) -> float:
    """Gate bias V_BIAS that puts the rail at ``target_vvdd`` (Brent's method)."""
    solve = virtual_vdd_fixed_point if fixed_point else virtual_vdd_closed_form

    def residual(v_bias: float) -> float:
        return solve(cfg, env.with_(bias_vbias=v_bias)) - target_vvdd

    try:
        return float(optimize.brentq(residual, *bracket, xtol=1e-9))
    except ValueError as e:
        raise ConvergenceError(
            "Bias calibration bracket does not enclose the target",
            details={"target_vvdd": target_vvdd, "bracket": list(bracket), "error": str(e)},
        )


def temperature_compensating_ratio(cfg: RegulatorConfig) -> float:
    """Native aspect ratio W0/L0 that cancels the first-order rail drift with T.

    d V_VDD / dT = A (k/q) ln(R/N) - B k_T2 + C k_T0 = 0 fixes R; mobility
    scaling is common to both devices and cancels.
    """
    c = _coefficients(cfg)
    k_over_q = _CONSTANTS.boltzmann_k / _CONSTANTS.electron_charge_q
    log_ratio = (
        c.vth2 * cfg.pull_down.vth_temp_coeff - c.bias * cfg.native.vth_temp_coeff
    ) / (c.log_term * k_over_q)
    ratio = cfg.cells_per_regulator * math.exp(log_ratio)
    n, p = cfg.native, cfg.pull_down
    return ratio * (p.mobility_cox * p.aspect * (p.slope_m - 1)) / (
        n.mobility_cox * (n.slope_m - 1)
    )


def compensated(cfg: RegulatorConfig) -> RegulatorConfig:
    """Copy of ``cfg`` with the native width resized for temperature compensation."""
    aspect = temperature_compensating_ratio(cfg)
    native = cfg.native.model_copy(update={"width_w": aspect * cfg.native.length_l})
    return cfg.model_copy(update={"native": native})


# =============================================================================
# Sweeps
# =============================================================================

SWEEP_COLUMNS = ["temperature_K", "supply_V", "vbias_V", "vvdd_V", "converged"]


@dataclass(frozen=True)
class SweepRow:
    env: Environment
    v_vdd: Optional[float]
    converged: bool
    error: Optional[str] = None


@dataclass
class RegulatorSweep:
    """Per-point fixed-point rail and derived sensitivities.

    ``line_sensitivity`` maps (temperature, bias) to mV/V across the swept
    supplies; ``temperature_span`` maps (supply, bias) to the mV range across
    the swept temperatures. Groups with a single point are absent.
    """

    rows: List[SweepRow]
    line_sensitivity: Dict[Tuple[float, float], float] = field(default_factory=dict)
    temperature_span: Dict[Tuple[float, float], float] = field(default_factory=dict)

    def write_csv(self, target: Union[str, Path, TextIO]) -> None:
        if isinstance(target, (str, Path)):
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", newline="") as f:
                self.write_csv(f)
            return
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            writer.writerow([
                f"{row.env.temperature:.6g}",
                f"{row.env.supply_vdd:.6g}",
                f"{row.env.bias_vbias:.6g}",
                "" if row.v_vdd is None else f"{row.v_vdd:.9f}",
                int(row.converged),
            ])


def _group_range(
    rows: Sequence[SweepRow], key, axis
) -> Dict[Tuple[float, float], Tuple[float, float]]:
    groups: Dict[Tuple[float, float], List[Tuple[float, float]]] = {}
    for row in rows:
        if row.converged:
            groups.setdefault(key(row.env), []).append((axis(row.env), row.v_vdd))
    ranges = {}
    for k, points in groups.items():
        xs = {x for x, _ in points}
        if len(xs) < 2:
            continue
        vs = [v for _, v in points]
        ranges[k] = (max(xs) - min(xs), max(vs) - min(vs))
    return ranges


def sensitivity_sweep(
    cfg: RegulatorConfig, env_grid: Sequence[Environment]
) -> RegulatorSweep:
    """Fixed-point V_VDD over ``env_grid`` with line and temperature sensitivity.

    Convergence failures are recorded per row rather than raised.
    """
    if not env_grid:
        raise ContractError("Regulator sweep needs a non-empty grid")
    rows = []
    for env in env_grid:
        try:
            rows.append(SweepRow(env=env, v_vdd=virtual_vdd_fixed_point(cfg, env), converged=True))
        except ConvergenceError as e:
            rows.append(SweepRow(env=env, v_vdd=None, converged=False, error=e.message))

    line = {
        k: 1e3 * dv / dx
        for k, (dx, dv) in _group_range(
            rows, key=lambda e: (e.temperature, e.bias_vbias), axis=lambda e: e.supply_vdd
        ).items()
    }
    span = {
        k: 1e3 * dv
        for k, (_, dv) in _group_range(
            rows, key=lambda e: (e.supply_vdd, e.bias_vbias), axis=lambda e: e.temperature
        ).items()
    }
    return RegulatorSweep(rows=rows, line_sensitivity=line, temperature_span=span)
