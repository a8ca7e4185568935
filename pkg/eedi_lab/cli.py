"""Command-line entry point: ``eedi-lab <subcommand> --config FILE``.

Subcommands:
    shape            write one shaped symbol stream
    metrics          evaluate EEDI, EDI and kurtosis of a symbol CSV
    simulate         run one WDM transmission and report the effective SNR
    sweep            simulate every (blocklength, seed) pair per distance
    optimize-lambda  search the forgetting factor on stored sweep records
    figures          emit the blocklength, correlation and distance tables

Exit status is 0 on success, 1 on configuration or validation errors and 2
on runtime failures; failures print ``{"error": ..., "reason": ...}`` to
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections.abc import Callable
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, NoReturn

from dotenv import load_dotenv

from eedi_lab import __version__
from eedi_lab.config import default_workers, load_config
from eedi_lab.errors import (
    EXIT_RUNTIME,
    ConfigParseError,
    EediLabError,
)
from eedi_lab.io import (
    CURVE_FILE,
    EFFECTIVE_CONFIG_FILE,
    METADATA_FILE,
    SUMMARY_FILE,
    read_records,
    read_symbols,
    write_csv,
    write_json,
    write_records,
    write_symbols,
)
from eedi_lab.services.analysis import (
    edi_alignment_offset,
    figure2_rows,
    figure3_rows,
    figure4_rows,
    group_by_distance,
    lambda_vs_distance,
    mean_eedi_by_blocklength,
    metric_correlations,
    require_edi_windows,
    summarize_blocklengths,
    sweep_distances,
)
from eedi_lab.services.channel import simulate_transmission
from eedi_lab.services.metrics import (
    DEFAULT_EPSILON,
    edi_from_energies,
    eedi_from_energies,
    kurtosis_from_energies,
    symbol_energies,
)
from eedi_lab.services.shaping import generate_shaped_symbols

if TYPE_CHECKING:
    from collections.abc import Sequence

    from eedi_lab.config import ExperimentConfig
    from eedi_lab.models.experiment import ExperimentRecord
    from eedi_lab.models.metrics import MetricResult

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

Handler = Callable[[argparse.Namespace], int]


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as validation failures."""

    def error(self, message: str) -> NoReturn:
        raise ConfigParseError(message)


def _load(args: argparse.Namespace) -> ExperimentConfig:
    """Load the config named by --config with --set and --output applied."""
    overrides = list(args.overrides)
    if args.output is not None:
        overrides.append(f"output.directory={args.output}")
    return load_config(args.config, overrides)


def _output_dir(config: ExperimentConfig) -> Path:
    """Create and return the configured output directory."""
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_provenance(
    directory: Path, config: ExperimentConfig, args: argparse.Namespace
) -> None:
    """Write the effective config and run metadata next to the results."""
    (directory / EFFECTIVE_CONFIG_FILE).write_text(
        config.to_cfg_text(), encoding="utf-8"
    )
    write_json(
        directory / METADATA_FILE,
        {
            "subcommand": args.command,
            "version": __version__,
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "workers": args.workers,
        },
    )


def _finite_or_none(value: float | None) -> float | None:
    """Map NaN and infinities to None for JSON output."""
    return value if value is not None and math.isfinite(value) else None


def cmd_shape(args: argparse.Namespace) -> int:
    """Write ``symbols.csv`` for the first configured blocklength and seed."""
    config = _load(args)
    shaping = config.shaping
    n, seed = shaping.blocklengths[0], shaping.seeds[0]
    if shaping.blocks_per_run:
        sequence = generate_shaped_symbols(
            shaping.alphabet, n, shaping.blocks_per_run, seed
        )
    else:
        num_symbols = config.simulation.num_symbols
        sequence = generate_shaped_symbols(
            shaping.alphabet, n, math.ceil(num_symbols / n), seed
        ).head(num_symbols)
    directory = _output_dir(config)
    write_symbols(directory / "symbols.csv", sequence.symbols)
    _write_provenance(directory, config, args)
    logger.info("wrote %d symbols (n=%d, seed=%d)", len(sequence), n, seed)
    return 0


def _metric_results(
    args: argparse.Namespace, config: ExperimentConfig | None
) -> list[MetricResult]:
    """Evaluate the requested metrics on the --input symbols."""
    energies = symbol_energies(read_symbols(Path(args.input)))
    epsilon = config.metrics.epsilon if config else DEFAULT_EPSILON
    lambdas = args.lambdas or (list(config.metrics.lambdas) if config else [])
    windows = args.windows or (list(config.metrics.edi_windows) if config else [])
    results = [eedi_from_energies(energies, lam, epsilon) for lam in lambdas]
    results.extend(edi_from_energies(energies, w) for w in windows)
    results.append(kurtosis_from_energies(energies))
    return results


def cmd_metrics(args: argparse.Namespace) -> int:
    """Evaluate metrics of a symbol CSV and write ``metrics.json``."""
    config = _load(args) if args.config else None
    results = [r.to_json() for r in _metric_results(args, config)]
    if config is not None:
        directory = _output_dir(config)
    else:
        directory = Path(args.output or ".")
        directory.mkdir(parents=True, exist_ok=True)
    write_json(directory / "metrics.json", results)
    print(json.dumps(results, sort_keys=True))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run one transmission and write ``rx_result.json``."""
    config = _load(args)
    n, seed = config.shaping.blocklengths[0], config.shaping.seeds[0]
    transmission = simulate_transmission(
        config.shaping.alphabet,
        n,
        seed,
        config.link,
        config.wdm,
        config.simulation,
        config.shaping.blocks_per_run,
    )
    directory = _output_dir(config)
    payload = {
        **transmission.rx.to_json(),
        "blocklength": n,
        "seed": seed,
        "distance_km": config.link.distance_km,
        "launch_power_dbm": config.wdm.launch_power_per_channel,
    }
    write_json(directory / "rx_result.json", payload)
    if config.output.save_received_symbols:
        write_symbols(
            directory / "received_symbols.csv", transmission.rx.recovered_symbols
        )
    _write_provenance(directory, config, args)
    return 0


def _blocklength_summary_json(records: Sequence[ExperimentRecord]) -> list[object]:
    """Per-blocklength summaries as JSON objects."""
    return [s.to_json() for s in summarize_blocklengths(records)]


def cmd_sweep(args: argparse.Namespace) -> int:
    """Sweep blocklengths and seeds at every configured distance."""
    config = _load(args)
    plan = config.analysis.distance_plan(
        config.link, config.wdm.launch_power_per_channel
    )
    sweeps = sweep_distances(
        [spans for spans, _ in plan],
        config.link,
        config.wdm,
        config.shaping.blocklengths,
        config.metrics.lambdas,
        config.shaping.seeds,
        launch_powers=[power for _, power in plan],
        alphabet=config.shaping.alphabet,
        simulation=config.simulation,
        edi_windows=config.metrics.edi_windows,
        epsilon=config.metrics.epsilon,
        blocks_per_run=config.shaping.blocks_per_run,
        workers=args.workers,
        progress=not args.quiet,
    )
    records = [record for distance in sorted(sweeps) for record in sweeps[distance]]
    directory = _output_dir(config)
    write_records(directory, records, save_energies=config.output.save_energies)
    write_json(
        directory / SUMMARY_FILE,
        {
            "distances": [
                {
                    "distance_km": distance,
                    "launch_power_dbm": sweeps[distance][0].launch_power_dbm,
                    "blocklengths": _blocklength_summary_json(sweeps[distance]),
                }
                for distance in sorted(sweeps)
            ]
        },
    )
    _write_provenance(directory, config, args)
    return 0


def _records_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Directory holding records.csv: --records, else the output directory."""
    return Path(args.records) if args.records else Path(config.output.directory)


def cmd_optimize_lambda(args: argparse.Namespace) -> int:
    """Search lambda* per distance on stored records; write the curve and summary."""
    config = _load(args)
    records = read_records(_records_dir(args, config))
    require_edi_windows(records, config.metrics.edi_windows)
    sweeps = group_by_distance(records)
    analysis = config.analysis
    trend, curves = lambda_vs_distance(
        sweeps,
        grid_lo=analysis.grid_lo,
        grid_hi=analysis.grid_hi,
        step=analysis.grid_step,
        epsilon=config.metrics.epsilon,
        weight_threshold=config.metrics.weight_threshold,
        rp_threshold=analysis.rp_threshold,
    )
    windows = config.metrics.edi_windows
    entries = []
    for point in trend.points:
        group = sweeps[point.distance_km]
        summaries = summarize_blocklengths(group)
        eedi_means = mean_eedi_by_blocklength(
            group, point.lambda_star, config.metrics.epsilon
        )
        entries.append(
            {
                "distance_km": point.distance_km,
                "lambda_star": point.lambda_star,
                "rp_star": point.rp_star,
                "one_minus_lambda_star": point.one_minus_lambda_star,
                "window_count": point.window_count,
                "meets_threshold": point.meets_threshold,
                "correlations": metric_correlations(
                    group, point.lambda_star, windows, config.metrics.epsilon
                ),
                "edi_alignment_offset_db": {
                    str(w): _finite_or_none(
                        edi_alignment_offset(
                            eedi_means,
                            {s.blocklength: s.mean_edi[w] for s in summaries},
                        )
                    )
                    for w in windows
                },
                "blocklengths": [s.to_json() for s in summaries],
            }
        )
    summary: dict[str, object] = {"distances": entries, "monotone": trend.is_monotone}
    if len(entries) == 1:
        summary["lambda_star"] = entries[0]["lambda_star"]
        summary["rp_star"] = entries[0]["rp_star"]
    directory = _output_dir(config)
    write_csv(
        directory / CURVE_FILE,
        ("distance_km", "lambda", "abs_rp"),
        (
            (distance, lam, rp)
            for distance, curve in sorted(curves.items())
            for lam, rp in zip(curve.lambda_grid, curve.abs_rp, strict=True)
        ),
    )
    write_json(directory / SUMMARY_FILE, summary)
    _write_provenance(directory, config, args)
    return 0


def cmd_figures(args: argparse.Namespace) -> int:
    """Write ``fig2.csv``, ``fig3.csv`` and ``fig4.csv`` from stored records."""
    config = _load(args)
    records = read_records(_records_dir(args, config))
    require_edi_windows(records, config.metrics.edi_windows[:1])
    sweeps = group_by_distance(records)
    analysis = config.analysis
    trend, curves = lambda_vs_distance(
        sweeps,
        grid_lo=analysis.grid_lo,
        grid_hi=analysis.grid_hi,
        step=analysis.grid_step,
        epsilon=config.metrics.epsilon,
        weight_threshold=config.metrics.weight_threshold,
        rp_threshold=analysis.rp_threshold,
    )
    window = config.metrics.edi_windows[0] if config.metrics.edi_windows else None
    directory = _output_dir(config)
    write_csv(
        directory / "fig2.csv",
        ("distance_km", "n", "snr_db", "ci_halfwidth_db", "eedi_db", "edi_db_shifted"),
        (
            row
            for point in trend.points
            for row in figure2_rows(
                sweeps[point.distance_km],
                point.lambda_star,
                window,
                config.metrics.epsilon,
            )
        ),
    )
    write_csv(
        directory / "fig3.csv",
        ("distance_km", "one_minus_lambda", "abs_rp"),
        (
            row
            for distance, curve in sorted(curves.items())
            for row in figure3_rows(distance, curve)
        ),
    )
    write_csv(
        directory / "fig4.csv",
        ("distance_km", "one_minus_lambda_star"),
        figure4_rows(trend),
    )
    _write_provenance(directory, config, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subparser per subcommand."""
    common = _ArgumentParser(add_help=False)
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )
    common.add_argument("--output", help="output directory (overrides the config)")
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes for sweeps (default: $EEDI_LAB_WORKERS or 1)",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")

    parser = _ArgumentParser(
        prog="eedi-lab",
        description="EEDI and effective-SNR experiments on shaped WDM links",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    for name, handler, help_text in (
        ("shape", cmd_shape, "write one shaped symbol stream"),
        ("simulate", cmd_simulate, "simulate one WDM transmission"),
        ("sweep", cmd_sweep, "sweep blocklengths and seeds"),
    ):
        add(name, handler, help_text).add_argument("--config", required=True)

    metrics = add("metrics", cmd_metrics, "evaluate metrics of a symbol CSV")
    metrics.add_argument("--config")
    metrics.add_argument("--input", required=True, help="symbol CSV (index, re, im)")
    metrics.add_argument(
        "--lambda", dest="lambdas", type=float, action="append", default=[]
    )
    metrics.add_argument(
        "--window", dest="windows", type=int, action="append", default=[]
    )

    for name, handler, help_text in (
        ("optimize-lambda", cmd_optimize_lambda, "search the optimal lambda"),
        ("figures", cmd_figures, "emit figure data tables"),
    ):
        sub = add(name, handler, help_text)
        sub.add_argument("--config", required=True)
        sub.add_argument(
            "--records", help="directory holding records.csv (default: output)"
        )
    return parser


def _report(kind: str, reason: str) -> None:
    """Print an error report as one JSON line on stderr."""
    print(json.dumps({"error": kind, "reason": reason}), file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit status."""
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        level = logging.INFO
        if args.verbose:
            level = logging.DEBUG
        elif args.quiet:
            level = logging.WARNING
        logging.basicConfig(level=level, format=LOG_FORMAT)
        if args.workers is None:
            args.workers = default_workers()
        elif args.workers < 1:
            raise ConfigParseError("--workers must be >= 1")
        handler: Handler = args.handler
        return handler(args)
    except EediLabError as exc:
        logger.debug("failed with %s", exc.kind, exc_info=True)
        _report(exc.kind, exc.reason)
        return exc.exit_status
    except Exception as exc:
        logger.exception("unexpected failure")
        _report("RuntimeError", str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
