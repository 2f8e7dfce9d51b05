"""Command-line interface for subpuf.

Usage:
    subpuf generate --seed 1 --seed 2 --out runs/a
    subpuf enroll --method evb --out runs/a
    subpuf stabilize --method evb --out runs/a
    subpuf report --out runs/a

Every command loads one configuration, writes its outputs plus a
``manifest.json`` under ``<out>/<command>/`` and exits with 0 on success,
1 on a runtime failure and 2 on a configuration error.
"""
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, Iterator, List, Optional

import numpy as np
import typer

from subpuf.cell.noise import NoiseModel
from subpuf.chip.io import load_chip, write_bits, write_chip, write_sweep_csv
from subpuf.chip.sim import (
    ChipInstance,
    Process,
    calibrate_bias,
    chip_id_for,
    evaluate_array,
    generate_chip,
    nominal_response,
)
from subpuf.cli.manifest import Manifest, flatten, write_table
from subpuf.cli.selftest import CheckResult, run_checks
from subpuf.cli.workspace import Workspace
from subpuf.core.config import Settings, load_settings
from subpuf.core.constants import (
    CELSIUS_OFFSET,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    SYSTEM_DESCRIPTION,
)
from subpuf.core.exceptions import ConfigurationError, SelfTestError, SubpufError
from subpuf.core.logging import bind_chip, configure_logging, get_logger
from subpuf.device.params import Environment
from subpuf.metrics.reliability import (
    ber,
    ber_growth,
    bit_aliasing,
    unstable_fraction,
    unstable_growth,
)
from subpuf.metrics.report import ClassShare, TestSummary, build_report
from subpuf.metrics.uniqueness import hamming_distances
from subpuf.regulator.model import sensitivity_sweep
from subpuf.stabilize.apply import (
    CLASS_NAMES,
    StabilityLedger,
    apply_stabilization,
    stabilized_sweep,
)
from subpuf.stabilize.enroll import compare_maps, detection_rate_by_vpw
from subpuf.stabilize.golden import collect_golden
from subpuf.stabilize.maps import RMap
from subpuf.stabilize.pipeline import enroll_chip

logger = get_logger(__name__)

app = typer.Typer(name="subpuf", help=SYSTEM_DESCRIPTION, no_args_is_help=True)


class Method(str, Enum):
    evb = "evb"
    temp_oracle = "temp-oracle"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


ConfigOption = Annotated[
    Optional[Path], typer.Option("--config", "-c", help="Settings YAML (default config/settings.yaml)")
]
SeedOption = Annotated[
    Optional[List[int]], typer.Option("--seed", help="Chip seed; repeat for several chips")
]
OutOption = Annotated[Optional[Path], typer.Option("--out", help="Output directory")]
ThreadsOption = Annotated[
    Optional[int], typer.Option("--threads", min=1, help="Worker threads (results do not change)")
]
FormatOption = Annotated[
    Optional[OutputFormat], typer.Option("--format", help="Format of tabular outputs")
]
LogLevelOption = Annotated[Optional[str], typer.Option("--log-level", help="Log level")]
MethodOption = Annotated[Method, typer.Option("--method", help="R-MAP enrollment method")]

CLASS_COLUMNS = [f"class_{name}" for name in CLASS_NAMES.values()]
CHIPS_COLUMNS = ["chip_id", "seed", "global_vth_shift_V", "ones_fraction", "golden_dissent_fraction"]
ENROLL_COLUMNS = ["chip_id", "method", "flagged_fraction", "masked_fraction", *CLASS_COLUMNS]
DETECTION_COLUMNS = ["chip_id", "vpw_V", "flagged", "reference", "overlap", "precision", "recall"]
GROWTH_COLUMNS = ["evaluations", "ber", "unstable_fraction"]
EVALUATE_COLUMNS = ["chip_id", "n_evals", "ber", "unstable_fraction"]
SWEEP_TABLE_COLUMNS = ["chip_id", "curve", "axis", "temperature_K", "supply_V", "ber"]
STABILIZE_COLUMNS = [
    "chip_id", "method", "n_outputs", "tmv_k", "ber_raw", "ber_tmv", "ber_stabilized",
    "improvement", "reconfigured_fraction", "masked_fraction",
]
AUTOCORR_COLUMNS = ["lag", "autocorrelation", "bound"]
HISTOGRAM_COLUMNS = ["hd_low", "hd_high", "intra", "inter"]
ALIASING_COLUMNS = ["row", "col", "ones_fraction"]


@dataclass
class RunContext:
    """Everything a command needs once the configuration is loaded."""

    command: str
    settings: Settings
    workspace: Workspace
    manifest: Manifest
    process: Process
    noise: NoiseModel
    env_nominal: Environment

    @property
    def threads(self) -> int:
        return self.settings.run.threads

    @property
    def output_format(self) -> str:
        return self.settings.run.output_format

    @property
    def out_dir(self) -> Path:
        return self.workspace.command_dir(self.command)

    def record(self, path: Path) -> Path:
        self.manifest.add_file(path, self.workspace.root)
        return path

    def table(self, name: str, columns: List[str], rows: List[Dict[str, Any]]) -> None:
        self.record(write_table(self.out_dir / name, rows, self.output_format, columns))

    def chips(self) -> Iterator[ChipInstance]:
        """Chips of the configured seeds; a missing chip is recorded and skipped."""
        for seed in self.settings.run.seeds:
            chip_id = chip_id_for(seed)
            try:
                yield load_chip(
                    self.workspace.chip_file(chip_id), self.process, self.settings.mismatch
                )
            except SubpufError as e:
                self.fail(chip_id, e)

    def fail(self, target: str, error: SubpufError) -> None:
        self.manifest.add_failure(target, error)
        logger.error("step failed", target=target, error=type(error).__name__, message=error.message)
        typer.echo(f"error: {target}: {error.message}", err=True)


def _overrides(
    seeds: Optional[List[int]],
    out: Optional[Path],
    threads: Optional[int],
    output_format: Optional[OutputFormat],
    log_level: Optional[str],
) -> Dict[str, Any]:
    run: Dict[str, Any] = {}
    if seeds:
        run["seeds"] = list(seeds)
    if out is not None:
        run["out_dir"] = str(out)
    if threads is not None:
        run["threads"] = threads
    if output_format is not None:
        run["output_format"] = output_format.value
    overrides: Dict[str, Any] = {"run": run} if run else {}
    if log_level is not None:
        overrides["logging"] = {"level": log_level}
    return overrides


def _context(command: str, config: Optional[Path], overrides: Dict[str, Any]) -> RunContext:
    settings = load_settings(config, overrides)
    configure_logging(settings.logging)
    for key, value in flatten(overrides).items():
        logger.info("override applied", key=key, value=value)

    process = Process.from_settings(settings)
    env = settings.environment.nominal
    if settings.regulator.target_vvdd is not None:
        env = calibrate_bias(process, settings.geometry, env, settings.regulator.target_vvdd)
    return RunContext(
        command=command,
        settings=settings,
        workspace=Workspace(settings.run.out_dir),
        manifest=Manifest(
            command=command,
            config_hash=settings.config_hash(),
            seeds=list(settings.run.seeds),
            overrides=flatten(overrides),
        ),
        process=process,
        noise=settings.noise,
        env_nominal=env,
    )


def _execute(
    command: str,
    config: Optional[Path],
    overrides: Dict[str, Any],
    body: Callable[[RunContext], None],
) -> None:
    try:
        ctx = _context(command, config, overrides)
    except ConfigurationError as e:
        logger.error("configuration rejected", message=e.message, details=e.details)
        typer.echo(f"error: {e.message}", err=True)
        raise typer.Exit(EXIT_CONFIG)
    except SubpufError as e:
        typer.echo(f"error: {e.message}", err=True)
        raise typer.Exit(EXIT_RUNTIME)

    logger.info("command started", command=command, seeds=ctx.settings.run.seeds)
    try:
        body(ctx)
    except SubpufError as e:
        ctx.fail(command, e)
    finally:
        ctx.manifest.write(ctx.workspace.manifest_file(command))

    if ctx.manifest.failures:
        raise typer.Exit(EXIT_RUNTIME)
    logger.info("command finished", command=command, files=len(ctx.manifest.files))
    raise typer.Exit(EXIT_OK)


# =============================================================================
# Commands
# =============================================================================


@app.command()
def generate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Sample one chip per seed and collect its golden key."""

    def body(ctx: RunContext) -> None:
        s = ctx.settings
        rows = []
        for chip_seed in s.run.seeds:
            chip_id = chip_id_for(chip_seed)
            try:
                chip = generate_chip(chip_seed, s.geometry, ctx.process, s.mismatch)
                write_chip(
                    ctx.record(ctx.workspace.chip_file(chip_id)),
                    chip,
                    nominal_response(chip, ctx.env_nominal),
                )
                golden = collect_golden(
                    chip, ctx.env_nominal, ctx.noise, s.stabilize.golden_votes, threads=ctx.threads
                )
                path = ctx.workspace.golden_file(chip_id)
                write_bits(path, golden.bits)
                ctx.record(path)
                ctx.record(path.with_suffix(".hex"))
            except SubpufError as e:
                ctx.fail(chip_id, e)
                continue
            bind_chip(logger, chip_id, chip_seed).info("chip generated")
            rows.append({
                "chip_id": chip_id,
                "seed": chip_seed,
                "global_vth_shift_V": chip.global_vth_shift,
                "ones_fraction": float(golden.bits.mean()),
                "golden_dissent_fraction": float(golden.unstable().mean()),
            })
        ctx.table("chips", CHIPS_COLUMNS, rows)

    _execute("generate", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def enroll(
    method: MethodOption = Method.evb,
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Build each chip's R-MAP and mask with the chosen method."""

    def body(ctx: RunContext) -> None:
        s = ctx.settings
        ws = ctx.workspace
        other = Method.temp_oracle if method is Method.evb else Method.evb
        rows, detection = [], []
        for chip in ctx.chips():
            try:
                golden = collect_golden(
                    chip, ctx.env_nominal, ctx.noise, s.stabilize.golden_votes, threads=ctx.threads
                )
                result = enroll_chip(
                    chip, ctx.env_nominal, ctx.noise, s.stabilize, method.value, golden, ctx.threads
                )
                result.rmap.save(ctx.record(ws.rmap_file(chip.chip_id, method.value)))
                result.mask.save(ctx.record(ws.mask_file(chip.chip_id, method.value)))
                key_path = ws.reconfigured_key_file(chip.chip_id, method.value)
                write_bits(key_path, result.golden_reconfigured.bits)
                ctx.record(key_path)
                ctx.record(key_path.with_suffix(".hex"))

                ledger = StabilityLedger.from_maps(
                    result.golden, result.rmap, result.golden_reconfigured, result.mask
                )
                row: Dict[str, Any] = {
                    "chip_id": chip.chip_id,
                    "method": method.value,
                    "flagged_fraction": result.rmap.fraction,
                    "masked_fraction": result.mask.fraction,
                    **{f"class_{k}": v for k, v in ledger.counts().items()},
                }

                other_path = ws.rmap_file(chip.chip_id, other.value)
                if other_path.exists():
                    counterpart = RMap.load(other_path)
                    evb, oracle = (
                        (result.rmap, counterpart) if method is Method.evb else (counterpart, result.rmap)
                    )
                    row.update({f"vs_oracle_{k}": v for k, v in compare_maps(evb, oracle).as_dict().items()})
                    for vpw, comparison in detection_rate_by_vpw(
                        chip, golden, s.stabilize.vpw_sweep, oracle, ctx.noise,
                        s.stabilize.enroll_votes, threads=ctx.threads,
                    ):
                        detection.append({
                            "chip_id": chip.chip_id,
                            "vpw_V": vpw,
                            **comparison.as_dict(),
                        })
                rows.append(row)
            except SubpufError as e:
                ctx.fail(chip.chip_id, e)
        ctx.table(f"enroll_{method.value}", ENROLL_COLUMNS, rows)
        if detection:
            ctx.table("detection_rate", DETECTION_COLUMNS, detection)
        if rows:
            flagged = float(np.mean([r["flagged_fraction"] for r in rows]))
            typer.echo(f"{method.value}: mean flagged fraction {flagged:.2%} over {len(rows)} chips")

    _execute("enroll", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def evaluate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Raw readouts at the nominal point: BER and unstable-bit growth."""

    def body(ctx: RunContext) -> None:
        n_evals = ctx.settings.run.n_evals
        rows = []
        for chip in ctx.chips():
            try:
                golden = ctx.workspace.golden_bits(chip)
                readouts = evaluate_array(
                    chip, ctx.env_nominal, None, ctx.noise, n_evals, threads=ctx.threads
                )
                stack = np.stack([r.bits for r in readouts])
                path = ctx.out_dir / f"{chip.chip_id}.readouts.bin"
                write_bits(path, stack)
                ctx.record(path)
                ctx.record(path.with_suffix(".hex"))
                growth = [
                    {"evaluations": i + 1, "ber": b, "unstable_fraction": u}
                    for i, (b, u) in enumerate(
                        zip(ber_growth(golden, stack), unstable_growth(golden, stack))
                    )
                ]
                ctx.table(f"{chip.chip_id}.growth", GROWTH_COLUMNS, growth)
                rows.append({
                    "chip_id": chip.chip_id,
                    "n_evals": n_evals,
                    "ber": ber(golden, stack),
                    "unstable_fraction": unstable_fraction(golden, stack),
                })
            except SubpufError as e:
                ctx.fail(chip.chip_id, e)
        ctx.table("evaluate", EVALUATE_COLUMNS, rows)

    _execute("evaluate", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def sweep(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """BER against temperature and supply for every available stabilization method."""

    def body(ctx: RunContext) -> None:
        s = ctx.settings
        nominal = ctx.env_nominal
        temps = [nominal.with_(temperature=t + CELSIUS_OFFSET) for t in s.environment.temperatures_c]
        supplies = [nominal.with_(supply_vdd=v) for v in s.environment.supplies]

        regulator_grid = [t.with_(supply_vdd=v) for t in temps for v in s.environment.supplies]
        if regulator_grid:
            regulator = sensitivity_sweep(
                ctx.process.regulator_template(s.geometry), regulator_grid
            )
            regulator.write_csv(ctx.record(ctx.out_dir / "regulator.csv"))

        k, n = s.stabilize.tmv_k, s.run.sweep_evals
        rows = []
        for chip in ctx.chips():
            try:
                golden = ctx.workspace.golden_bits(chip)
                curves = [("raw", None, None, golden, 1), ("tmv", None, None, golden, k)]
                for method in Method:
                    if ctx.workspace.rmap_file(chip.chip_id, method.value).exists():
                        rmap, mask, key = ctx.workspace.enrollment(chip, method.value)
                        curves.append((f"{method.value}-tmv", rmap, mask, key, k))

                for axis, grid in (("temperature", temps), ("supply", supplies)):
                    for name, rmap, mask, key, votes in curves:
                        points = (
                            stabilized_sweep(
                                chip, grid, rmap, mask, key, ctx.noise, votes, n,
                                threads=ctx.threads,
                            )
                            if grid else []
                        )
                        path = ctx.out_dir / chip.chip_id / f"{axis}_{name}.csv"
                        write_sweep_csv(path, points)
                        ctx.record(path)
                        rows.extend(
                            {"chip_id": chip.chip_id, "curve": name, "axis": axis,
                             "temperature_K": p.env.temperature, "supply_V": p.env.supply_vdd,
                             "ber": p.ber}
                            for p in points
                        )
                if supplies:
                    points = stabilized_sweep(
                        chip, supplies, None, None, golden, ctx.noise, 1, n,
                        regulated=False, threads=ctx.threads,
                    )
                    path = ctx.out_dir / chip.chip_id / "supply_unregulated.csv"
                    write_sweep_csv(path, points)
                    ctx.record(path)
            except SubpufError as e:
                ctx.fail(chip.chip_id, e)
        ctx.table("sweep", SWEEP_TABLE_COLUMNS, rows)

    _execute("sweep", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def stabilize(
    method: MethodOption = Method.evb,
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Compare raw, TMV and R-MAP + TMV readouts at the nominal point."""

    def body(ctx: RunContext) -> None:
        s = ctx.settings
        k, n = s.stabilize.tmv_k, s.run.n_evals
        rows = []
        for chip in ctx.chips():
            try:
                golden = ctx.workspace.golden_bits(chip)
                rmap, mask, key = ctx.workspace.enrollment(chip, method.value)
                env = ctx.env_nominal
                raw = apply_stabilization(chip, None, None, env, ctx.noise, 1, n, threads=ctx.threads)
                voted = apply_stabilization(chip, None, None, env, ctx.noise, k, n, threads=ctx.threads)
                full = apply_stabilization(chip, rmap, mask, env, ctx.noise, k, n, threads=ctx.threads)

                path = ctx.out_dir / f"{chip.chip_id}.{method.value}.bits.bin"
                write_bits(path, full.bits)
                ctx.record(path)
                ctx.record(path.with_suffix(".hex"))

                ber_raw = ber(golden, raw.bits)
                ber_full = ber(key, full.bits, full.mask)
                rows.append({
                    "chip_id": chip.chip_id,
                    "method": method.value,
                    "n_outputs": n,
                    "tmv_k": k,
                    "ber_raw": ber_raw,
                    "ber_tmv": ber(golden, voted.bits),
                    "ber_stabilized": ber_full,
                    "improvement": ber_raw / ber_full if ber_full > 0 else None,
                    "reconfigured_fraction": rmap.fraction,
                    "masked_fraction": mask.fraction,
                })
            except SubpufError as e:
                ctx.fail(chip.chip_id, e)
        ctx.table(f"stabilize_{method.value}", STABILIZE_COLUMNS, rows)

    _execute("stabilize", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def report(
    method: Annotated[
        Optional[Method], typer.Option("--method", help="Report stabilized outputs of this method")
    ] = None,
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Full metric bundle over all chips: reliability, uniqueness and randomness.

    With ``--method`` the stability classes of the enrollment are compared
    against the shares predicted from P_O and P_R.
    """

    def body(ctx: RunContext) -> None:
        s = ctx.settings
        n = s.run.n_evals
        keys, readouts, masks, chip_ids = [], [], [], []
        ledgers: List[StabilityLedger] = []
        for chip in ctx.chips():
            try:
                if method is None:
                    key, mask = ctx.workspace.golden_bits(chip), None
                    stack = np.stack([
                        r.bits for r in evaluate_array(
                            chip, ctx.env_nominal, None, ctx.noise, n, threads=ctx.threads
                        )
                    ])
                else:
                    rmap, mask_map, key = ctx.workspace.enrollment(chip, method.value)
                    stabilized = apply_stabilization(
                        chip, rmap, mask_map, ctx.env_nominal, ctx.noise, s.stabilize.tmv_k, n,
                        threads=ctx.threads,
                    )
                    stack, mask = stabilized.bits, stabilized.mask
                    ledgers.append(StabilityLedger.from_maps(
                        ctx.workspace.golden_bits(chip), rmap, key, mask_map
                    ))
            except SubpufError as e:
                ctx.fail(chip.chip_id, e)
                continue
            keys.append(key)
            readouts.append(list(stack))
            masks.append(mask)
            chip_ids.append(chip.chip_id)
        if not keys:
            return

        result = build_report(keys, readouts, masks, s.metrics, chip_ids, ledgers=ledgers)
        (ctx.out_dir / "report.json").parent.mkdir(parents=True, exist_ok=True)
        ctx.record(ctx.out_dir / "report.json").write_text(result.to_json() + "\n")
        ctx.record(ctx.out_dir / "report.txt").write_text(result.to_text())
        if result.autocorr is not None:
            ctx.table("autocorrelation", AUTOCORR_COLUMNS, [
                {"lag": lag, "autocorrelation": v, "bound": result.autocorr.bound}
                for lag, v in zip(result.autocorr.lags, result.autocorr.values)
            ])
        hist = hamming_distances(keys, readouts, masks).histogram()
        edges = hist["edges"]
        ctx.table("hd_histogram", HISTOGRAM_COLUMNS, [
            {"hd_low": edges[i], "hd_high": edges[i + 1], "intra": hist["intra"][i], "inter": hist["inter"][i]}
            for i in range(len(edges) - 1)
        ])
        ctx.table(
            "nist", list(TestSummary.model_fields), [row.model_dump() for row in result.test_summary]
        )
        if len(keys) >= 2:
            aliasing = bit_aliasing(keys, masks)
            ctx.table("bit_aliasing", ALIASING_COLUMNS, [
                {"row": int(r), "col": int(c), "ones_fraction": None if np.isnan(v) else float(v)}
                for (r, c), v in np.ndenumerate(aliasing)
            ])
        if result.stability:
            ctx.table(
                "stability_classes",
                list(ClassShare.model_fields),
                [share.model_dump() for share in result.stability],
            )
        typer.echo(result.to_text(), nl=False)

    _execute("report", config, _overrides(seed, out, threads, output_format, log_level), body)


@app.command()
def selftest(
    config: ConfigOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Check the models against closed-form and published reference values."""

    def body(ctx: RunContext) -> None:
        results = run_checks(ctx.settings)
        for r in results:
            typer.echo(f"{'PASS' if r.passed else 'FAIL':<6}{r.name:<44}{r.detail}")
        ctx.table("selftest", list(CheckResult.model_fields), [r.model_dump() for r in results])
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise SelfTestError(
                f"{len(failed)} self-test check(s) failed", details={"checks": failed}
            )

    _execute("selftest", config, _overrides(None, out, None, output_format, log_level), body)
