"""Chip assembly and array evaluation.

A chip is a rows x cols array of cells in row-major order. Every
``cells_per_regulator`` cells of a column share one native regulator whose
V_VDD feeds them. A chip is fully determined by its seed, geometry, process
and mismatch model, so nothing but the seed needs to be stored.
"""
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from subpuf.cell.model import (
    CellMismatch,
    InverterDesign,
    decide,
    decision_margin,
    noise_sigma,
)
from subpuf.cell.noise import NoiseModel
from subpuf.chip.geometry import ArrayGeometry
from subpuf.core.constants import (
    PURPOSE_READ,
    PURPOSE_SWEEP,
    STREAM_GLOBAL,
    STREAM_NOISE,
    STREAM_REGULATOR,
)
from subpuf.core.exceptions import ContractError, ConvergenceError, DimensionError
from subpuf.core.logging import get_logger
from subpuf.device.mismatch import RandomStream
from subpuf.device.params import Environment, MismatchModel, TransistorParams
from subpuf.metrics.reliability import ber_from_counts, unstable_from_counts
from subpuf.regulator.model import (
    RegulatorConfig,
    compensated,
    solve_bias_for_vvdd,
    virtual_vdd_fixed_point,
)

if TYPE_CHECKING:
    from subpuf.core.config import Settings
    from subpuf.stabilize.maps import RMap

logger = get_logger(__name__)

ReconfigureLike = Union["RMap", np.ndarray, None]


class Process(BaseModel):
    """Nominal devices and regulator topology shared by every chip."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    design: InverterDesign
    native: TransistorParams
    vm_fraction: float = Field(default=0.5, gt=0, lt=1)
    compensate_temperature: bool = True

    @classmethod
    def from_settings(cls, settings: "Settings") -> "Process":
        return cls(
            design=InverterDesign(nmos=settings.device.nmos, pmos=settings.device.pmos),
            native=settings.device.native,
            vm_fraction=settings.regulator.vm_fraction,
            compensate_temperature=settings.regulator.compensate_temperature,
        )

    def regulator_template(self, geometry: ArrayGeometry) -> RegulatorConfig:
        cfg = RegulatorConfig(
            native=self.native,
            pull_down=self.design.nmos,
            cells_per_regulator=geometry.cells_per_regulator,
            vm_fraction=self.vm_fraction,
        )
        return compensated(cfg) if self.compensate_temperature else cfg


def parameter_hash(process: Process, geometry: ArrayGeometry, model: MismatchModel) -> str:
    payload = json.dumps(
        {
            "process": process.model_dump(mode="json"),
            "geometry": geometry.model_dump(mode="json"),
            "mismatch": model.model_dump(mode="json"),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def calibrate_bias(
    process: Process, geometry: ArrayGeometry, env: Environment, target_vvdd: float
) -> Environment:
    """``env`` with V_BIAS solved so a nominal regulator delivers ``target_vvdd``."""
    bias = solve_bias_for_vvdd(process.regulator_template(geometry), env, target_vvdd)
    logger.info("bias calibrated", target_vvdd=target_vvdd, bias_vbias=bias)
    return env.with_(bias_vbias=bias)


@dataclass(frozen=True)
class ChipInstance:
    """One simulated die.

    ``cells`` holds rows*cols cells in row-major order; ``regulators`` holds
    one configuration per regulator, indexed as ``geometry.regulator_index()``.
    """

    chip_id: str
    seed: int
    geometry: ArrayGeometry
    process: Process
    mismatch_model: MismatchModel
    global_vth_shift: float
    cells: CellMismatch
    regulators: List[RegulatorConfig]

    @property
    def param_hash(self) -> str:
        return parameter_hash(self.process, self.geometry, self.mismatch_model)

    def stream(self) -> RandomStream:
        return RandomStream(self.seed)


def chip_id_for(seed: int) -> str:
    return f"chip-{seed:06d}"


def generate_chip(
    seed: int,
    geometry: ArrayGeometry,
    process: Process,
    mismatch_model: MismatchModel,
) -> ChipInstance:
    """Sample a die from ``seed``.

    The global shift is added to every transistor of every cell and to every
    regulator device; native regulators additionally get a per-regulator
    static offset from the Pelgrom law on the native area.
    """
    stream = RandomStream(seed)
    global_shift = float(
        stream.child(STREAM_GLOBAL).normal(1, mismatch_model.global_sigma)[0]
    )
    cells = CellMismatch.sample(
        process.design, mismatch_model, stream, geometry.n_cells, global_shift
    )
    template = process.regulator_template(geometry)
    native_offsets = stream.child(STREAM_REGULATOR).normal(
        geometry.n_regulators, mismatch_model.vth_sigma(template.native)
    )
    regulators = [
        template.model_copy(
            update={
                "native_offset": float(offset) + global_shift,
                "pull_down_offset": global_shift,
            }
        )
        for offset in native_offsets
    ]
    chip = ChipInstance(
        chip_id=chip_id_for(seed),
        seed=seed,
        geometry=geometry,
        process=process,
        mismatch_model=mismatch_model,
        global_vth_shift=global_shift,
        cells=cells,
        regulators=regulators,
    )
    logger.debug("chip generated", chip_id=chip.chip_id, seed=seed, global_shift=global_shift)
    return chip


def rail_voltages(chip: ChipInstance, env: Environment, regulated: bool = True) -> np.ndarray:
    """Per-cell V_VDD, shape (rows, cols).

    Unregulated cells sit directly on the supply.

    Raises:
        ConvergenceError: Naming the regulator (and its column) that failed.
    """
    g = chip.geometry
    if not regulated:
        return np.full(g.shape, env.supply_vdd)
    rails = np.empty(g.n_regulators)
    for i, cfg in enumerate(chip.regulators):
        try:
            rails[i] = virtual_vdd_fixed_point(cfg, env)
        except ConvergenceError as e:
            raise ConvergenceError(
                f"Regulator {i} (column {i % g.cols}) did not converge: {e.message}",
                details={**e.details, "chip_id": chip.chip_id, "regulator": i, "column": i % g.cols},
            )
    return rails[g.regulator_index()]


def _reconfigure_mask(chip: ChipInstance, rmap: ReconfigureLike) -> np.ndarray:
    if rmap is None:
        return np.zeros(chip.geometry.shape, dtype=bool)
    flags = np.asarray(getattr(rmap, "reconfigure", rmap), dtype=bool)
    if flags.shape != chip.geometry.shape:
        raise DimensionError(
            "R-MAP shape does not match chip geometry",
            details={"rmap": flags.shape, "geometry": chip.geometry.shape},
        )
    return flags


def env_key(env: Environment) -> int:
    """Stable 32-bit key of an operating point, used in noise stream keys."""
    text = (
        f"{env.temperature:.6f}|{env.supply_vdd:.6f}|{env.bias_vbias:.6f}|{env.body_vpw:.6f}"
    )
    return int(hashlib.sha256(text.encode()).hexdigest()[:8], 16)


@dataclass(frozen=True)
class Readout:
    """One evaluation of the whole array."""

    bits: np.ndarray
    env: Environment
    reconfigure: np.ndarray
    degenerate: np.ndarray
    eval_index: int = 0


@dataclass(frozen=True)
class MarginMap:
    """Noise-free decision state of a chip at one operating point.

    Margins and rails do not change between evaluations at a fixed
    operating point, so they are computed once and reused by every read.
    """

    chip: ChipInstance
    env: Environment
    reconfigure: np.ndarray
    margins: np.ndarray
    sigma: np.ndarray
    v_vdd: np.ndarray

    def read(self, stream: Optional[RandomStream], eval_index: int = 0) -> Readout:
        g = self.chip.geometry
        z = None
        if stream is not None and np.any(self.sigma > 0):
            z = stream.normal(g.n_cells)
        bits, degenerate = decide(self.margins, self.sigma, z)
        return Readout(
            bits=bits.reshape(g.shape),
            env=self.env,
            reconfigure=self.reconfigure,
            degenerate=degenerate.reshape(g.shape),
            eval_index=eval_index,
        )


def margin_map(
    chip: ChipInstance,
    env: Environment,
    rmap: ReconfigureLike,
    noise: NoiseModel,
    regulated: bool = True,
) -> MarginMap:
    flags = _reconfigure_mask(chip, rmap)
    v_vdd = rail_voltages(chip, env, regulated)
    flat = flags.reshape(-1)
    margins = decision_margin(chip.cells, flat, env, v_vdd.reshape(-1))
    sigma = np.asarray(noise_sigma(noise, flat), dtype=float)
    return MarginMap(
        chip=chip, env=env, reconfigure=flags, margins=margins, sigma=sigma, v_vdd=v_vdd
    )


def noise_stream(chip: ChipInstance, env: Environment, purpose: int) -> RandomStream:
    """Parent of the per-evaluation streams at ``env``; child ``e`` is evaluation ``e``."""
    return chip.stream().child(STREAM_NOISE, purpose, env_key(env))


def read_many(
    state: MarginMap,
    parent: RandomStream,
    n_evals: int,
    start: int = 0,
    threads: int = 1,
) -> List[Readout]:
    """Evaluations ``start .. start + n_evals - 1``, in order.

    Each evaluation draws only from its own keyed stream, so the result does
    not depend on ``threads``.
    """
    if n_evals < 1:
        raise ContractError("n_evals must be at least 1", details={"n_evals": n_evals})
    indices = range(start, start + n_evals)
    if threads <= 1:
        return [state.read(parent.child(e), e) for e in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda e: state.read(parent.child(e), e), indices))


def evaluate_array(
    chip: ChipInstance,
    env: Environment,
    rmap: ReconfigureLike,
    noise: NoiseModel,
    n_evals: int,
    regulated: bool = True,
    purpose: int = PURPOSE_READ,
    threads: int = 1,
) -> List[Readout]:
    """``n_evals`` noisy readouts of ``chip`` at ``env``.

    Cells flagged in ``rmap`` are evaluated in the reconfigured topology.
    ``regulated=False`` feeds every cell straight from the supply.
    """
    if n_evals < 1:
        raise ContractError("n_evals must be at least 1", details={"n_evals": n_evals})
    state = margin_map(chip, env, rmap, noise, regulated)
    readouts = read_many(state, noise_stream(chip, env, purpose), n_evals, threads=threads)
    logger.debug(
        "array evaluated",
        chip_id=chip.chip_id,
        n_evals=n_evals,
        temperature=env.temperature,
        supply_vdd=env.supply_vdd,
        body_vpw=env.body_vpw,
        reconfigured=int(state.reconfigure.sum()),
    )
    return readouts


def majority(readouts: Sequence[Readout]) -> np.ndarray:
    """Per-cell majority bit over an odd number of readouts."""
    if len(readouts) % 2 == 0:
        raise ContractError("Majority needs an odd number of readouts", details={"n": len(readouts)})
    ones = np.sum([r.bits for r in readouts], axis=0)
    return (2 * ones > len(readouts)).astype(np.uint8)


@dataclass
class SweepPoint:
    """Aggregate of ``n_evals`` readouts at one operating point."""

    env: Environment
    bits: np.ndarray
    flip_counts: np.ndarray
    n_evals: int
    mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def ber(self) -> float:
        return ber_from_counts(self.flip_counts, self.n_evals, self.mask)

    @property
    def unstable_fraction(self) -> float:
        return unstable_from_counts(self.flip_counts, self.mask)


def environment_sweep(
    chip: ChipInstance,
    env_grid: Sequence[Environment],
    rmap: ReconfigureLike,
    noise: NoiseModel,
    n_evals: int,
    golden: np.ndarray,
    mask: Optional[np.ndarray] = None,
    regulated: bool = True,
    threads: int = 1,
) -> List[SweepPoint]:
    """Majority bits and per-cell flips against ``golden`` at every grid point."""
    if not env_grid:
        raise ContractError("Environment sweep needs a non-empty grid")
    golden = np.asarray(golden, dtype=np.uint8)
    points = []
    for env in env_grid:
        readouts = evaluate_array(
            chip, env, rmap, noise, n_evals, regulated=regulated, purpose=PURPOSE_SWEEP,
            threads=threads,
        )
        stack = np.stack([r.bits for r in readouts])
        ones = stack.sum(axis=0)
        points.append(
            SweepPoint(
                env=env,
                bits=(2 * ones > n_evals).astype(np.uint8),
                flip_counts=np.count_nonzero(stack != golden, axis=0),
                n_evals=n_evals,
                mask=mask,
            )
        )
    logger.info("sweep completed", chip_id=chip.chip_id, points=len(points), n_evals=n_evals)
    return points


def nominal_response(chip: ChipInstance, env: Environment, rmap: ReconfigureLike = None) -> np.ndarray:
    """Noise-free bit map (sign of margin)."""
    state = margin_map(chip, env, rmap, NoiseModel.silent())
    return state.read(None).bits
