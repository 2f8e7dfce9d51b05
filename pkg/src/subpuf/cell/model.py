"""Four-stage subthreshold inverter chain.

A cell's bit is decided by the difference of the first two stage switching
voltages (original topology) or, after reconfiguration, by the merged
stage-1/2 inverter against stage 3. Stages beyond the compared pair only set
the chain gain, which enters through the noise model.

All operations are vectorised over cells: a ``CellMismatch`` holds one
deviation vector per (stage, role) and every result is an array with one
entry per cell.
"""
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats

from subpuf.cell.noise import NoiseModel
from subpuf.core.constants import (
    BISECTION_MAX_ITER,
    BISECTION_XTOL_V,
    MODE_ORIGINAL,
    MODE_RECONFIGURED,
    ROLE_CODES,
    ROLE_NMOS,
    ROLE_PMOS,
    STAGES_PER_CELL,
    STREAM_MISMATCH,
)
from subpuf.core.exceptions import ConvergenceError, DomainError
from subpuf.device.mismatch import RandomStream, sample_mismatch
from subpuf.device.model import (
    effective_slope,
    effective_vth,
    log_subthreshold_current,
    mobility_factor,
    thermal_voltage,
)
from subpuf.device.params import (
    Environment,
    MismatchModel,
    PhysicalConstants,
    TransistorParams,
    VthDeviation,
)

ArrayLike = Union[float, np.ndarray]

_CONSTANTS = PhysicalConstants()


class InverterDesign(BaseModel):
    """Nominal NMOS/PMOS pair shared by every stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    nmos: TransistorParams
    pmos: TransistorParams

    def merged(self) -> "InverterDesign":
        """Stage 1 and stage 2 in parallel: doubled widths."""
        return InverterDesign(nmos=self.nmos.scaled(2.0), pmos=self.pmos.scaled(2.0))


class CellConfig(BaseModel):
    """Topology a cell is evaluated in."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["original", "reconfigured"] = MODE_ORIGINAL

    @property
    def reconfigured(self) -> bool:
        return self.mode == MODE_RECONFIGURED

    @classmethod
    def original(cls) -> "CellConfig":
        return cls(mode=MODE_ORIGINAL)

    @classmethod
    def reconfigured_mode(cls) -> "CellConfig":
        return cls(mode=MODE_RECONFIGURED)


@dataclass(frozen=True)
class CellMismatch:
    """Sampled deviations of one or more cells.

    ``nmos[s]`` and ``pmos[s]`` are the deviations of stage ``s + 1``; each is
    a vector with one entry per cell.
    """

    design: InverterDesign
    nmos: Tuple[VthDeviation, ...]
    pmos: Tuple[VthDeviation, ...]

    def __post_init__(self):
        if len(self.nmos) != STAGES_PER_CELL or len(self.pmos) != STAGES_PER_CELL:
            raise ValueError(f"a cell has exactly {STAGES_PER_CELL} stages per role")

    @property
    def size(self) -> int:
        return self.nmos[0].size

    @classmethod
    def sample(
        cls,
        design: InverterDesign,
        model: MismatchModel,
        stream: RandomStream,
        size: int,
        global_shift: float = 0.0,
    ) -> "CellMismatch":
        """Draw ``size`` cells; stream key (STREAM_MISMATCH, stage, role)."""
        def draw(params: TransistorParams, role: str, stage: int) -> VthDeviation:
            dev = sample_mismatch(
                model, params, stream.child(STREAM_MISMATCH, stage, ROLE_CODES[role]), size
            )
            return dev.shifted(global_shift) if global_shift else dev

        return cls(
            design=design,
            nmos=tuple(draw(design.nmos, ROLE_NMOS, s) for s in range(STAGES_PER_CELL)),
            pmos=tuple(draw(design.pmos, ROLE_PMOS, s) for s in range(STAGES_PER_CELL)),
        )

    @classmethod
    def nominal(cls, design: InverterDesign, size: int = 1) -> "CellMismatch":
        zeros = tuple(VthDeviation.zeros(size) for _ in range(STAGES_PER_CELL))
        return cls(design=design, nmos=zeros, pmos=zeros)

    def take(self, index) -> "CellMismatch":
        return CellMismatch(
            design=self.design,
            nmos=tuple(d.take(index) for d in self.nmos),
            pmos=tuple(d.take(index) for d in self.pmos),
        )

    def replace_stage(
        self, stage: int, nmos: Optional[VthDeviation] = None, pmos: Optional[VthDeviation] = None
    ) -> "CellMismatch":
        """Copy with the deviations of ``stage`` (1-based) replaced."""
        n, p = list(self.nmos), list(self.pmos)
        if nmos is not None:
            n[stage - 1] = nmos
        if pmos is not None:
            p[stage - 1] = pmos
        return CellMismatch(design=self.design, nmos=tuple(n), pmos=tuple(p))

    def swap_stages(self, a: int, b: int) -> "CellMismatch":
        n, p = list(self.nmos), list(self.pmos)
        n[a - 1], n[b - 1] = n[b - 1], n[a - 1]
        p[a - 1], p[b - 1] = p[b - 1], p[a - 1]
        return CellMismatch(design=self.design, nmos=tuple(n), pmos=tuple(p))

    def merged_stage(self) -> Tuple[VthDeviation, VthDeviation]:
        """Deviations of the merged stage-1/2 inverter (constituent average)."""
        return self.nmos[0].mean_with(self.nmos[1]), self.pmos[0].mean_with(self.pmos[1])


def _bisect_increasing(
    balance: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    xtol: float = BISECTION_XTOL_V,
    max_iter: int = BISECTION_MAX_ITER,
) -> np.ndarray:
    """Element-wise bisection for a balance that increases from < 0 to > 0."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        above = balance(mid) > 0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo < xtol):
            return 0.5 * (lo + hi)
    raise ConvergenceError(
        "Switching-voltage bisection did not converge",
        details={"max_width": float(np.max(hi - lo)), "iterations": max_iter},
    )


def switching_voltage(
    nmos: TransistorParams,
    pmos: TransistorParams,
    env: Environment,
    v_vdd: ArrayLike,
    nmos_dev: Optional[VthDeviation] = None,
    pmos_dev: Optional[VthDeviation] = None,
) -> np.ndarray:
    """Trip point V_M of an inverter on the rail ``v_vdd``.

    At the trip point input equals output, so the NMOS sees V_gs = V_ds = V
    and the PMOS V_sg = V_sd = v_vdd - V; V_M is where the two currents are
    equal. Mobility scaling is common to both devices and cancels.

    Raises:
        DomainError: If ``v_vdd`` is not positive.
    """
    v_vdd = np.asarray(v_vdd, dtype=float)
    if np.any(v_vdd <= 0):
        raise DomainError("Rail voltage must be positive", details={"v_vdd": v_vdd.tolist()})
    v_t = thermal_voltage(_CONSTANTS, env.temperature)
    mu = mobility_factor(env.temperature)
    vth_n = effective_vth(nmos, env, nmos_dev)
    vth_p = effective_vth(pmos, env, pmos_dev)
    m_n = effective_slope(nmos, nmos_dev)
    m_p = effective_slope(pmos, pmos_dev)

    def balance(v: np.ndarray) -> np.ndarray:
        i_n = log_subthreshold_current(nmos, v, v, vth_n, v_t, slope=m_n, mobility_scale=mu)
        v_p = v_vdd - v
        i_p = log_subthreshold_current(pmos, v_p, v_p, vth_p, v_t, slope=m_p, mobility_scale=mu)
        return i_n - i_p

    size = max(
        np.size(vth_n), np.size(vth_p), np.size(m_n), np.size(m_p), np.size(v_vdd)
    )
    lo = np.zeros(size)
    hi = np.broadcast_to(v_vdd, (size,)).copy()
    return _bisect_increasing(balance, lo, hi)


def original_margin(cell: CellMismatch, env: Environment, v_vdd: ArrayLike) -> np.ndarray:
    """V_M1 - V_M2."""
    d = cell.design
    v1 = switching_voltage(d.nmos, d.pmos, env, v_vdd, cell.nmos[0], cell.pmos[0])
    v2 = switching_voltage(d.nmos, d.pmos, env, v_vdd, cell.nmos[1], cell.pmos[1])
    return v1 - v2


def reconfigured_margin(cell: CellMismatch, env: Environment, v_vdd: ArrayLike) -> np.ndarray:
    """V_M1* - V_M3, with V_M1* the trip point of the merged stage-1/2 inverter."""
    d = cell.design
    merged = d.merged()
    n_star, p_star = cell.merged_stage()
    v1 = switching_voltage(merged.nmos, merged.pmos, env, v_vdd, n_star, p_star)
    v3 = switching_voltage(d.nmos, d.pmos, env, v_vdd, cell.nmos[2], cell.pmos[2])
    return v1 - v3


def decision_margin(
    cell: CellMismatch,
    cfg: Union[CellConfig, np.ndarray],
    env: Environment,
    v_vdd: ArrayLike,
) -> np.ndarray:
    """Decision margin per cell; positive reads '0', negative reads '1'.

    ``cfg`` is a single topology for every cell or a boolean array that is
    True where a cell is reconfigured.
    """
    if isinstance(cfg, CellConfig):
        if cfg.reconfigured:
            return reconfigured_margin(cell, env, v_vdd)
        return original_margin(cell, env, v_vdd)

    reconfigure = np.asarray(cfg, dtype=bool).reshape(-1)
    margin = original_margin(cell, env, v_vdd)
    if reconfigure.any():
        idx = np.flatnonzero(reconfigure)
        v = np.asarray(v_vdd, dtype=float)
        v_sub = v if v.ndim == 0 else np.broadcast_to(v, (cell.size,))[idx]
        margin = margin.copy()
        margin[idx] = reconfigured_margin(cell.take(idx), env, v_sub)
    return margin


def noise_sigma(noise: NoiseModel, cfg: Union[CellConfig, np.ndarray]) -> ArrayLike:
    """Effective comparison noise per cell."""
    if isinstance(cfg, CellConfig):
        return noise.effective_sigma(cfg.mode)
    return np.where(
        np.asarray(cfg, dtype=bool),
        noise.effective_sigma(MODE_RECONFIGURED),
        noise.effective_sigma(MODE_ORIGINAL),
    )


def decide(
    margin: np.ndarray, sigma: ArrayLike, z: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Bits and degenerate flags for ``margin`` plus ``sigma * z`` noise.

    A value of exactly zero reads '1'; it is flagged degenerate when there is
    no noise to break the tie.
    """
    margin = np.asarray(margin, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), margin.shape)
    value = margin if z is None else margin + sigma * z
    bits = (value <= 0).astype(np.uint8)
    degenerate = (margin == 0) & (sigma == 0)
    return bits, degenerate


def evaluate_bit(
    cell: CellMismatch,
    cfg: Union[CellConfig, np.ndarray],
    env: Environment,
    v_vdd: ArrayLike,
    noise: NoiseModel,
    stream: RandomStream,
) -> Tuple[np.ndarray, np.ndarray]:
    """One noisy evaluation of every cell.

    ``stream`` is the evaluation's stream; element ``i`` of its normal vector
    is the noise of cell ``i``.

    Returns:
        (bits, degenerate) arrays, one entry per cell.
    """
    margin = decision_margin(cell, cfg, env, v_vdd)
    sigma = noise_sigma(noise, cfg)
    z = stream.normal(margin.shape) if noise.sigma_n > 0 else None
    return decide(margin, sigma, z)


def flip_probability(
    margin: ArrayLike, noise: NoiseModel, mode: Union[CellConfig, np.ndarray]
) -> ArrayLike:
    """Probability that noise moves the decision to the other side of zero.

    Phi(-|margin| / sigma_eff); 0.5 when both margin and noise are zero.
    """
    m = np.abs(np.asarray(margin, dtype=float))
    sigma = np.broadcast_to(np.asarray(noise_sigma(noise, mode), dtype=float), m.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(sigma > 0, stats.norm.sf(m / np.where(sigma > 0, sigma, 1.0)), 0.0)
    p = np.where((sigma == 0) & (m == 0), 0.5, p)
    return float(p) if p.ndim == 0 else p


def switching_voltage_sigma(
    design: InverterDesign,
    model: MismatchModel,
    env: Environment,
    v_vdd: float,
    step: float = 1e-3,
) -> float:
    """Linearised std of V_M from independent NMOS and PMOS static offsets."""
    def vm(dn: float, dp: float) -> float:
        n = VthDeviation.zeros().shifted(dn)
        p = VthDeviation.zeros().shifted(dp)
        return float(switching_voltage(design.nmos, design.pmos, env, v_vdd, n, p)[0])

    dvm_dn = (vm(step, 0.0) - vm(-step, 0.0)) / (2 * step)
    dvm_dp = (vm(0.0, step) - vm(0.0, -step)) / (2 * step)
    return float(np.hypot(
        dvm_dn * model.vth_sigma(design.nmos), dvm_dp * model.vth_sigma(design.pmos)
    ))
