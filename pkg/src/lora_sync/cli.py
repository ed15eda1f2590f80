"""
Command Line Interface for the LoRa synchronization toolkit.

This module provides the main CLI entry point using Click framework.
It parses experiment options, runs Monte Carlo sweeps, synchronizes
recorded IQ files and prints the SFO drift budget.
"""

import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Set

import click
from click.core import ParameterSource
from dotenv import load_dotenv
from pydantic import ValidationError

from . import __version__
from .exceptions import InsufficientDataError, LoraSyncError, MalformedFileError
from .file_io import read_iq, write_iq, write_results
from .models import (
    CliArgs,
    ExperimentConfig,
    ModemParams,
    OutputFormat,
    PreambleSpec,
    ResultTable,
    SfoMode,
    SyncConfig,
)
from .simulator import MonteCarloSimulator, wilson_interval
from .synchronizer import demodulate_payload, max_budget_before_error, synchronize
from .utils.validation import load_config_file, validate_experiment, validate_output_path


# Load environment variables from .env file
load_dotenv()

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INSUFFICIENT_DATA = 4

BUDGET_PPM = (1.0, 2.0, 5.0, 10.0, 20.0, 32.0, 40.0, 50.0, 100.0)

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool) -> None:
    """Configure the root logger from --verbose or LOG_LEVEL."""
    level = logging.DEBUG if verbose else os.getenv("LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    logging.getLogger().setLevel(level)


def fail(message: str, code: int = EXIT_FAILURE) -> NoReturn:
    click.echo(click.style(f"Error: {message}", fg="red"), err=True)
    sys.exit(code)


def snr_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive SNR grid from start to stop."""
    if step == 0:
        raise click.BadParameter("SNR step must be non-zero", param_hint="--snr-step")
    count = int((stop - start) / step + 1e-9) + 1
    if count < 1:
        raise click.BadParameter(
            f"SNR grid from {start} to {stop} with step {step} is empty",
            param_hint="--snr-step",
        )
    return [round(start + i * step, 6) for i in range(count)]


def modem_options(func: Callable) -> Callable:
    """Options describing the modem and preamble."""
    options = [
        click.option(
            "--sf", type=click.IntRange(5, 12), default=12, help="Spreading factor"
        ),
        click.option("--bw", type=float, default=250e3, help="Bandwidth in Hz"),
        click.option("--fc", type=float, default=868e6, help="Carrier frequency in Hz"),
        click.option(
            "--osr", type=click.IntRange(1, 16), default=1, help="Oversampling ratio fs/B"
        ),
        click.option(
            "--n-up", type=click.IntRange(2, 64), default=8, help="Preamble up-chirps"
        ),
        click.option(
            "--passes", type=click.IntRange(1, 2), default=2, help="Maximum sync passes"
        ),
        click.option(
            "--theta",
            type=float,
            default=0.05,
            help="Second-pass threshold on |gamma|*N",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def experiment_options(default_ppm: float, default_snr: Sequence[float]) -> Callable:
    """Options shared by the Monte Carlo commands."""
    start, stop, step = default_snr

    def decorate(func: Callable) -> Callable:
        options = [
            click.option(
                "--ppm", type=float, default=default_ppm, help="Oscillator offset in ppm"
            ),
            click.option(
                "--snr-start", type=float, default=start, help="First SNR point in dB"
            ),
            click.option(
                "--snr-stop", type=float, default=stop, help="Last SNR point in dB"
            ),
            click.option("--snr-step", type=float, default=step, help="SNR step in dB"),
            click.option(
                "--frames",
                type=click.IntRange(1, None),
                default=200,
                envvar="LORA_SYNC_FRAMES",
                help="Frames per SNR point",
            ),
            click.option(
                "--payload",
                type=click.IntRange(0, 255),
                default=8,
                help="Payload symbols",
            ),
            click.option(
                "--sfo-comp",
                type=click.Choice([mode.value for mode in SfoMode], case_sensitive=False),
                default=SfoMode.FULL.value,
                help="SFO handling: none, payload, full or ideal",
            ),
            click.option(
                "--seed",
                type=click.IntRange(0, None),
                default=0,
                envvar="LORA_SYNC_SEED",
                help="Base seed",
            ),
            click.option(
                "--workers",
                type=click.IntRange(1, 8),
                default=1,
                envvar="LORA_SYNC_WORKERS",
                help="Number of parallel worker processes",
            ),
            click.option(
                "--out",
                "-o",
                type=click.Path(dir_okay=False, path_type=Path),
                default=None,
                help="Result file (CSV or JSON)",
            ),
            click.option(
                "--format",
                "fmt",
                type=click.Choice(
                    [fmt.value for fmt in OutputFormat], case_sensitive=False
                ),
                default=None,
                help="Result format; inferred from --out when omitted",
            ),
            click.option(
                "--iq-dump",
                type=click.Path(dir_okay=False, path_type=Path),
                default=None,
                help="Write the first impaired stream as cf32",
            ),
            click.option(
                "--config",
                type=click.Path(exists=True, dir_okay=False, path_type=Path),
                default=None,
                help="YAML or JSON experiment file",
            ),
            click.option("--experiment", default=None, help="Experiment name inside --config"),
        ]
        func = modem_options(func)
        for option in reversed(options):
            func = option(func)
        return func

    return decorate


def _explicit(ctx: click.Context) -> Set[str]:
    """Options given on the command line or through the environment."""
    sources = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)
    return {name for name in ctx.params if ctx.get_parameter_source(name) in sources}


def build_experiment_config(
    options: Dict[str, Any],
    explicit: Optional[Set[str]] = None,
    entry: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Turn parsed options into an ExperimentConfig.

    With an experiment file ``entry``, only options in ``explicit`` override
    the file's values.
    """
    data = dict(entry or {})
    params = dict(data.get("params") or {})
    preamble = dict(data.get("preamble") or {})
    explicit = explicit or set()

    def use(*names: str) -> bool:
        return entry is None or any(name in explicit for name in names)

    for key in ("sf", "bw", "fc"):
        if use(key):
            params[key] = options[key]
    if use("osr", "bw"):
        params["fs"] = params.get("bw", options["bw"]) * options["osr"]
    if use("n_up"):
        preamble["n_up"] = options["n_up"]
    if use("snr_start", "snr_stop", "snr_step"):
        data["snr_grid"] = snr_grid(
            options["snr_start"], options["snr_stop"], options["snr_step"]
        )

    renames = {
        "ppm": "gamma_ppm",
        "frames": "n_frames",
        "payload": "payload_len",
        "sfo_comp": "sfo_mode",
        "passes": "passes_max",
        "theta": "theta",
        "seed": "seed",
        "workers": "workers",
    }
    for option, field in renames.items():
        if use(option):
            data[field] = options[option]

    data["params"] = params
    data["preamble"] = preamble
    return ExperimentConfig(**data)


def _select_entry(config_path: Path, name: Optional[str]) -> Dict[str, Any]:
    entries = load_config_file(config_path)
    if name is None:
        if len(entries) > 1:
            names = ", ".join(str(entry.get("name")) for entry in entries)
            raise ValueError(
                f"{config_path} holds several experiments ({names}); "
                "pick one with --experiment"
            )
        return entries[0]
    for entry in entries:
        if entry.get("name") == name:
            return entry
    raise ValueError(f"No experiment named {name!r} in {config_path}")


def _echo_table(table: ResultTable, kind: str) -> None:
    if kind == "ser":
        click.echo(f"{'SNR (dB)':>9} {'SER':>10} {'95% interval':>22} {'symbols':>8}")
        for row in table.rows:
            errors = int(round(row.ser * row.symbols))
            low, high = wilson_interval(errors, row.symbols)
            click.echo(
                f"{row.snr_db:>9.1f} {row.ser:>10.4g} "
                f"{f'[{low:.3g}, {high:.3g}]':>22} {row.symbols:>8d}"
            )
    else:
        click.echo(
            f"{'SNR (dB)':>9} {'L_CFO':>8} {'lam_CFO':>8} {'L_STO':>8} {'lam_STO':>8}"
        )
        for row in table.rows:
            click.echo(
                f"{row.snr_db:>9.1f} {row.rmse_l_cfo:>8.4f} {row.rmse_lambda_cfo:>8.4f} "
                f"{row.rmse_l_sto:>8.4f} {row.rmse_lambda_sto:>8.4f}"
            )


def run_experiment(ctx: click.Context, kind: str, options: Dict[str, Any]) -> None:
    """Shared body of the rmse and ser commands."""
    try:
        entry = None
        if options["config"] is not None:
            entry = _select_entry(options["config"], options["experiment"])
        config = build_experiment_config(options, _explicit(ctx), entry)
    except (ValueError, ValidationError) as e:
        fail(str(e), EXIT_USAGE)

    report = validate_experiment(config)
    for warning in report.warnings:
        click.echo(click.style(f"Warning: {warning}", fg="yellow"), err=True)
    for suggestion in report.suggestions:
        click.echo(click.style(f"Suggestion: {suggestion}", fg="cyan"), err=True)
    if not report.is_valid:
        fail("; ".join(report.errors), EXIT_USAGE)

    out: Optional[Path] = options["out"]
    if out is not None:
        try:
            validate_output_path(out)
        except ValueError as e:
            fail(str(e), EXIT_IO)

    simulator = MonteCarloSimulator(config)
    try:
        if options["iq_dump"] is not None:
            stream, _, _ = simulator.impaired_stream(config.snr_grid[0], 0)
            write_iq(stream, options["iq_dump"])

        total = len(config.snr_grid) * config.n_frames
        with click.progressbar(length=total, label=f"Simulating {total} frames") as bar:
            table = simulator.run_sweep(progress=bar.update)

        click.echo()
        _echo_table(table, kind)
        if out is not None:
            fmt = OutputFormat(options["fmt"]) if options["fmt"] else None
            write_results(table, out, fmt)
            click.echo(click.style(f"✓ Wrote {len(table.rows)} rows to {out}", fg="green"))
    except OSError as e:
        fail(str(e), EXIT_IO)
    except InsufficientDataError as e:
        fail(str(e), EXIT_INSUFFICIENT_DATA)
    except LoraSyncError as e:
        fail(str(e))


@click.group()
@click.version_option(version=__version__, prog_name="lora-sync")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging")
def cli(verbose: bool) -> None:
    """
    LoRa CFO/STO/SFO synchronization toolkit.

    Simulate LoRa frames through an oscillator-offset channel, synchronize
    them with a two-pass receiver and measure estimator RMSE and SER.
    """
    setup_logging(verbose)


@cli.command()
@experiment_options(default_ppm=40.0, default_snr=(-20.0, 0.0, 2.0))
@click.pass_context
def rmse(ctx: click.Context, **options: Any) -> None:
    """
    RMSE of the integer and fractional CFO/STO estimates over SNR.

    Examples:
        lora-sync rmse --sf 10 --ppm 40 --sfo-comp full --out rmse.csv
        lora-sync rmse --config config/experiments.yaml --experiment rmse_sf10
    """
    run_experiment(ctx, "rmse", options)


@cli.command()
@experiment_options(default_ppm=32.0, default_snr=(-22.0, -12.0, 1.0))
@click.pass_context
def ser(ctx: click.Context, **options: Any) -> None:
    """
    Symbol error rate over SNR.

    Examples:
        lora-sync ser --sf 12 --ppm 32 --sfo-comp none --out ser_none.json
        lora-sync ser --workers 4 --frames 2000
    """
    run_experiment(ctx, "ser", options)


@cli.command("sync-file")
@click.option(
    "--iq-in",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="cf32 stream starting inside the first preamble up-chirp",
)
@modem_options
@click.option(
    "--sfo-comp",
    type=click.Choice(
        [SfoMode.NONE.value, SfoMode.PAYLOAD.value, SfoMode.FULL.value],
        case_sensitive=False,
    ),
    default=SfoMode.FULL.value,
    help="SFO handling",
)
@click.option(
    "--payload",
    type=click.IntRange(0, 255),
    default=0,
    help="Payload symbols to demodulate",
)
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the JSON report here as well",
)
def sync_file(
    iq_in: Path, sfo_comp: str, payload: int, out: Optional[Path], **options: Any
) -> None:
    """Synchronize a recorded cf32 stream and print a JSON report."""
    try:
        params = ModemParams(
            sf=options["sf"],
            bw=options["bw"],
            fc=options["fc"],
            fs=options["bw"] * options["osr"],
        )
        preamble_sfo = sfo_comp == SfoMode.FULL.value
        config = SyncConfig(
            passes_max=options["passes"] if preamble_sfo else 1,
            theta=options["theta"],
            preamble=PreambleSpec(n_up=options["n_up"]),
            compensate_preamble_sfo=preamble_sfo,
        )
    except ValidationError as e:
        fail(str(e), EXIT_USAGE)

    try:
        stream = read_iq(iq_in)
        result = synchronize(stream, config, params)
        decisions = demodulate_payload(
            result, payload, params, track=sfo_comp != SfoMode.NONE.value
        )
    except (OSError, MalformedFileError) as e:
        fail(str(e), EXIT_IO)
    except InsufficientDataError as e:
        fail(str(e), EXIT_INSUFFICIENT_DATA)

    report = {
        "passes_run": result.passes_run,
        "estimate": result.estimate.model_dump(),
        "first_pass": result.first_pass.model_dump(),
        "cfo_hz": result.estimate.cfo_hz(params),
        "gamma_ppm": result.estimate.gamma_hat * 1e6,
        "reference_sample": result.reference_sample,
        "payload_offset": result.aligned_stream_offset,
        "flags": result.flags,
        "payload": decisions,
    }
    text = json.dumps(report, indent=2)
    click.echo(text)
    if out is not None:
        try:
            out.write_text(text, encoding="utf-8")
        except OSError as e:
            fail(str(e), EXIT_IO)


@cli.command()
@click.option(
    "--ppm",
    type=float,
    multiple=True,
    default=BUDGET_PPM,
    help="Oscillator offsets in ppm (repeatable)",
)
@click.option(
    "--sf",
    "sfs",
    type=click.IntRange(5, 12),
    multiple=True,
    default=(7, 8, 9, 10, 11, 12),
    help="Spreading factors (repeatable)",
)
def budget(ppm: Sequence[float], sfs: Sequence[int]) -> None:
    """Payload symbols before SFO drift reaches half a chip."""
    click.echo("SF  " + "".join(f"{value:>8g}" for value in ppm) + "  (ppm)")
    for sf in sfs:
        cells = []
        for value in ppm:
            limit = max_budget_before_error(value * 1e-6, sf)
            cells.append(f"{'inf' if limit is None else limit:>8}")
        click.echo(f"{sf:<4}" + "".join(cells))


@cli.command()
def version() -> None:
    """Show version information."""
    click.echo(f"lora-sync version {__version__}")


@cli.command()
@click.option(
    "--output",
    "-o",
    type=click.Path(exists=False, file_okay=True, dir_okay=False, path_type=Path),
    default=Path(".env"),
    help="Output file for environment template",
)
def init_env(output: Path) -> None:
    """Initialize environment file with template."""
    template = """# LoRa sync environment configuration

# Monte Carlo defaults
LORA_SYNC_SEED=0
LORA_SYNC_WORKERS=1
LORA_SYNC_FRAMES=200

# Logging
LOG_LEVEL=WARNING
"""

    if output.exists():
        if not click.confirm(f"File {output} exists. Overwrite?"):
            return

    output.write_text(template)
    click.echo(f"Environment template written to {output}")


def parse_args(argv: Sequence[str]) -> CliArgs:
    """
    Parse a command line without running it.

    Raises:
        click.UsageError: For unknown commands or invalid option values
    """
    args = list(argv)
    if not args:
        raise click.UsageError("Missing command")
    command = cli.commands.get(args[0])
    if command is None:
        raise click.UsageError(f"Unknown command {args[0]!r}")
    ctx = command.make_context(args[0], args[1:])
    options = dict(ctx.params)
    experiment = None
    if args[0] in ("rmse", "ser"):
        try:
            entry = None
            if options["config"] is not None:
                entry = _select_entry(options["config"], options["experiment"])
            experiment = build_experiment_config(options, _explicit(ctx), entry)
        except (ValueError, ValidationError) as e:
            raise click.UsageError(str(e), ctx=ctx)
        report = validate_experiment(experiment)
        if not report.is_valid:
            raise click.UsageError("; ".join(report.errors), ctx=ctx)
    return CliArgs(mode=args[0], options=options, experiment=experiment)


def main() -> None:
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
