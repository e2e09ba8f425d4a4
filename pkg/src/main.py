import argparse
import asyncio
import logging
import pathlib
import sys
from collections.abc import Sequence
from functools import partial

from src.core.exceptions import ConfigError, FitRejected, ThinFilmError
from src.core.presets import PRESETS, ridge_presets
from src.core.run_config import RunConfig, parse_config
from src.core.runtime import get_runtime_settings
from src.diagnostics.convergence import (
    EocTable,
    appendix_a_oracle,
    eoc_space,
    eoc_time,
    feasibility_sweep,
    gather_limited,
)
from src.diagnostics.fitting import FitModel, fit_width_series
from src.output.writers import CsvSeriesSink, VtkSnapshotSink, write_csv, write_manifest
from src.stepping.simulation import simulate
from src.stepping.stepper import Trajectory, TrajectorySink

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_TERMINAL = 3

MU_KINDS = {"x2": "degenerate", "1+x2": "regular"}
RIDGE_FITS: dict[str, FitModel] = {"theta=0": "power", "theta=-1": "power", "theta=1": "exponential"}


def build_parser() -> argparse.ArgumentParser:
    """Command-line parser with one subcommand per workflow."""
    parser = argparse.ArgumentParser(prog="thinfilm", description="Thin-film free boundary simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one trajectory")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("config", nargs="?", help="JSON run configuration")
    source.add_argument("--preset", choices=sorted(PRESETS), help="benchmark configuration")
    run.add_argument("--out", help="output directory (overrides the configuration)")

    for name, help_text in (("eoc-space", "spatial self-convergence"), ("eoc-time", "temporal self-convergence")):
        eoc = sub.add_parser(name, help=help_text)
        eoc.add_argument("config", help="JSON run configuration")
        if name == "eoc-space":
            eoc.add_argument("--levels", type=int, nargs="+", required=True, help="refinement levels")
        else:
            eoc.add_argument("--taus", type=float, nargs="+", required=True, help="step sizes")
        eoc.add_argument("--csv", help="write the table to this file")

    appendix = sub.add_parser("appendix-a", help="one-dimensional degenerate elliptic oracle")
    appendix.add_argument("--mu", choices=sorted(MU_KINDS), required=True)
    appendix.add_argument("--degree", type=int, choices=(1, 2, 3), required=True)
    appendix.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4, 5, 6, 7])
    appendix.add_argument("--csv", help="write the table to this file")

    feasibility = sub.add_parser("feasibility-sweep", help="stationary shapes for increasing in-plane gravity")
    feasibility.add_argument("--refinement", type=int, default=3)
    feasibility.add_argument("--degree", type=int, choices=(1, 2, 3), default=2)

    ridge = sub.add_parser("ridge", help="ridge instability presets")
    ridge.add_argument("--model", choices=("strong", "transient"), default="strong")
    ridge.add_argument("--out", default="output/ridge")
    return parser


def read_config(path: str) -> RunConfig:
    """
    Read and validate a configuration file.

    Raises:
        ConfigError: If the file is unreadable or invalid.
    """
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    return parse_config(text)


def run_with_outputs(config: RunConfig, directory: str | pathlib.Path) -> Trajectory:
    """
    Run a configuration, streaming its series and snapshots into a directory.

    Args:
        config: Validated configuration.
        directory: Output directory.

    Returns:
        Trajectory summary.
    """
    out = pathlib.Path(directory)
    sinks: list[TrajectorySink] = []
    if config.output.vtk:
        sinks.append(VtkSnapshotSink(out))
    if config.output.csv:
        with CsvSeriesSink(out / "series.csv", ridge=config.geometry.ridge is not None) as csv_sink:
            trajectory = simulate(config, [csv_sink, *sinks])
    else:
        trajectory = simulate(config, sinks)
    write_manifest(
        out,
        config.to_json(),
        {
            "exit_reason": trajectory.exit_reason,
            "message": trajectory.message,
            "n_steps": trajectory.n_steps,
            "t_final": trajectory.final_state.t,
            "events": [{"kind": e.kind, "t": e.t, "message": e.message} for e in trajectory.events],
        },
    )
    return trajectory


async def command_run(args: argparse.Namespace) -> int:
    config = PRESETS[args.preset]() if args.preset else read_config(args.config)
    directory = args.out or config.output.dir
    trajectory = await asyncio.to_thread(run_with_outputs, config, directory)
    print(f"{trajectory.exit_reason}: t={trajectory.final_state.t:.6g}, {trajectory.n_steps} steps -> {directory}")
    return EXIT_OK if trajectory.completed else EXIT_TERMINAL


def _report(table: EocTable, csv_path: str | None) -> int:
    print(table.format())
    if csv_path:
        write_csv(table, csv_path)
    return EXIT_OK if all(r.valid for r in table.rows) else EXIT_TERMINAL


async def command_eoc(args: argparse.Namespace) -> int:
    config = read_config(args.config)
    if args.command == "eoc-space":
        table = await eoc_space(config, args.levels)
    else:
        table = await eoc_time(config, args.taus)
    return _report(table, args.csv)


async def command_appendix(args: argparse.Namespace) -> int:
    table = appendix_a_oracle(MU_KINDS[args.mu], args.degree, args.levels)  # type: ignore[arg-type]
    return _report(table, args.csv)


async def command_feasibility(args: argparse.Namespace) -> int:
    rows = await feasibility_sweep(refinement=args.refinement, degree=args.degree)
    print(f"{'g_x':>6} {'min h':>14}")
    for row in rows:
        print(f"{row.g_x:6g} {row.min_h:14.6e}{'' if row.positive else '  negative'}")
    return EXIT_OK


async def command_ridge(args: argparse.Namespace) -> int:
    presets = ridge_presets(args.model)
    out = pathlib.Path(args.out)
    jobs = [partial(run_with_outputs, config, out / label.replace("=", "_")) for label, config in presets.items()]
    results: list[Trajectory] = await gather_limited(jobs)
    for (label, config), trajectory in zip(presets.items(), results, strict=True):
        series = trajectory.series
        line = f"{label:>10}: {trajectory.exit_reason} at t={trajectory.final_state.t:.4g}"
        if args.model == "strong":
            try:
                fit = fit_width_series(series.column("t"), series.column("ridge_width"), RIDGE_FITS[label])
                line += f", {fit.model} exponent {fit.exponent:.3f} (R^2={fit.r_squared:.4f})"
            except FitRejected as e:
                line += f", fit rejected: {e}"
        else:
            pinch = series.column("pinch_y")[-1]
            height = config.geometry.ridge.H if config.geometry.ridge else 1.0
            line += f", pinch at y={pinch:.4g} (offset {abs(pinch - height / 2) / height:.3f} H)"
        print(line)
    return EXIT_OK


COMMANDS = {
    "run": command_run,
    "eoc-space": command_eoc,
    "eoc-time": command_eoc,
    "appendix-a": command_appendix,
    "feasibility-sweep": command_feasibility,
    "ridge": command_ridge,
}


async def main(argv: Sequence[str] | None = None) -> int:
    """
    Parse the command line and dispatch to a subcommand.

    Args:
        argv: Arguments without the program name (sys.argv[1:] when None).

    Returns:
        Process exit code: 0 on success, 2 on invalid configuration,
        3 when a run ended on a numerical terminal event, 1 on other failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG

    try:
        return await COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except ThinFilmError as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_FAILURE


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Console entry point."""
    runtime = get_runtime_settings()
    logging.basicConfig(level=runtime.log_level, format="%(asctime)s - %(levelname)s - %(message)s")
    return asyncio.run(main(argv))


if __name__ == "__main__":
    sys.exit(cli_main())
