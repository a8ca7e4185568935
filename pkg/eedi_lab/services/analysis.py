"""Blocklength sweeps, metric/SNR correlation and forgetting-factor search.

Sweeps dispatch independent (blocklength, seed) runs to a process pool and
reduce the results in canonical order, so aggregates never depend on
completion order. The forgetting-factor search only re-evaluates EEDI on the
stored Tx-side energy series; it never simulates the channel.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Final

import numpy as np
from scipy import stats
from tqdm import tqdm

from eedi_lab.errors import (
    ConfigurationError,
    InsufficientDataError,
    InsufficientLengthError,
    UndefinedCorrelationError,
)
from eedi_lab.models.channel import SimulationConfig
from eedi_lab.models.experiment import (
    BlocklengthSummary,
    CorrelationCurve,
    DistancePoint,
    DistanceTrend,
    ExperimentRecord,
)
from eedi_lab.models.metrics import EnergySeries
from eedi_lab.services.channel import simulate_transmission
from eedi_lab.services.metrics import (
    DEFAULT_EPSILON,
    DEFAULT_WEIGHT_THRESHOLD,
    edi_from_energies,
    eedi_db,
    eedi_from_energies,
    effective_window_count,
    kurtosis_from_energies,
    symbol_energies,
)
from eedi_lab.services.shaping import reference_alphabet

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from eedi_lab.models.channel import LinkConfig, WdmConfig
    from eedi_lab.models.shaping import AmplitudeAlphabet

logger = logging.getLogger(__name__)

DEFAULT_GRID_LO: Final[float] = 0.6
DEFAULT_GRID_HI: Final[float] = 1.0
DEFAULT_GRID_STEP: Final[float] = 1e-4
DEFAULT_RP_THRESHOLD: Final[float] = 0.994
CONFIDENCE_LEVEL: Final[float] = 0.95
MIN_BLOCKLENGTHS: Final[int] = 3
_GRID_DECIMALS = 12


def pearson(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Sample Pearson correlation coefficient.

    Args:
        x: First series.
        y: Second series, same length, at least 3 values.

    Returns:
        r in [-1, 1].

    Raises:
        ConfigurationError: If the series differ in length.
        InsufficientDataError: If fewer than 3 pairs are given.
        UndefinedCorrelationError: If either series is constant.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ConfigurationError("pearson needs two 1-D series of equal length")
    if xs.size < MIN_BLOCKLENGTHS:
        msg = f"pearson needs at least {MIN_BLOCKLENGTHS} pairs, got {xs.size}"
        raise InsufficientDataError(msg)
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise UndefinedCorrelationError("correlation of a constant series")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    r = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return max(-1.0, min(1.0, r))


def confidence_halfwidth(
    values: Sequence[float], level: float = CONFIDENCE_LEVEL
) -> float:
    """Student-t half-width of the confidence interval of the mean."""
    count = len(values)
    if count < 2:
        return 0.0
    spread = float(np.std(values, ddof=1)) / math.sqrt(count)
    return float(stats.t.ppf((1 + level) / 2, count - 1)) * spread


@dataclass(frozen=True)
class SweepJob:
    """Inputs of one simulated run inside a sweep."""

    blocklength: int
    seed: int
    alphabet: AmplitudeAlphabet
    link: LinkConfig
    wdm: WdmConfig
    simulation: SimulationConfig
    lambdas: tuple[float, ...]
    edi_windows: tuple[int, ...]
    epsilon: float
    blocks_per_run: int


def run_job(job: SweepJob) -> ExperimentRecord:
    """Simulate one run and measure the central channel's Tx-side metrics."""
    transmission = simulate_transmission(
        job.alphabet,
        job.blocklength,
        job.seed,
        job.link,
        job.wdm,
        job.simulation,
        job.blocks_per_run,
    )
    energies = symbol_energies(transmission.central)
    return ExperimentRecord(
        blocklength=job.blocklength,
        distance_km=job.link.distance_km,
        launch_power_dbm=job.wdm.launch_power_per_channel,
        seed=job.seed,
        effective_snr_db=transmission.rx.effective_snr_db,
        eedi={
            lam: eedi_from_energies(energies, lam, job.epsilon).value
            for lam in job.lambdas
        },
        edi={w: edi_from_energies(energies, w).value for w in job.edi_windows},
        kurtosis=kurtosis_from_energies(energies).value,
        energies=np.array(energies.values),
    )


def _execute(
    jobs: Sequence[SweepJob], workers: int, progress: bool
) -> list[ExperimentRecord]:
    """Run the jobs serially or in a process pool; return sorted records."""
    bar = tqdm(total=len(jobs), disable=not progress, desc="runs", unit="run")
    records: list[ExperimentRecord] = []
    try:
        if workers <= 1:
            for job in jobs:
                records.append(run_job(job))
                bar.update()
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_job, job) for job in jobs]
                for future in as_completed(futures):
                    records.append(future.result())
                    bar.update()
    finally:
        bar.close()
    return sorted(records, key=lambda record: record.sort_key)


def sweep_blocklengths(
    blocklengths: Sequence[int],
    link: LinkConfig,
    wdm: WdmConfig,
    lambdas: Sequence[float],
    seeds: Sequence[int],
    *,
    alphabet: AmplitudeAlphabet | None = None,
    simulation: SimulationConfig | None = None,
    edi_windows: Sequence[int] = (),
    epsilon: float = DEFAULT_EPSILON,
    blocks_per_run: int = 0,
    workers: int = 1,
    progress: bool = False,
) -> list[ExperimentRecord]:
    """Run every (blocklength, seed) pair and return canonically ordered records.

    Args:
        blocklengths: CCDM blocklengths to sweep.
        link: Link parameters.
        wdm: Multiplex parameters.
        lambdas: Forgetting factors at which to record Tx-side EEDI.
        seeds: Master seeds; one run per blocklength and seed.
        alphabet: Amplitude alphabet; defaults to the reference distribution.
        simulation: Sequence sizing; defaults to :class:`SimulationConfig`.
        edi_windows: EDI windows to record.
        epsilon: EEDI truncation weight.
        blocks_per_run: CCDM blocks per quadrature (0 = automatic).
        workers: Worker processes; 1 runs in-process.
        progress: Show a progress bar.

    Returns:
        Records sorted by distance, blocklength and seed.

    Raises:
        ConfigurationError: If blocklengths or seeds is empty.
    """
    if not blocklengths or not seeds:
        raise ConfigurationError("blocklengths and seeds must be non-empty")
    jobs = [
        SweepJob(
            blocklength=n,
            seed=seed,
            alphabet=alphabet or reference_alphabet(),
            link=link,
            wdm=wdm,
            simulation=simulation or SimulationConfig(),
            lambdas=tuple(lambdas),
            edi_windows=tuple(edi_windows),
            epsilon=epsilon,
            blocks_per_run=blocks_per_run,
        )
        for n in blocklengths
        for seed in seeds
    ]
    logger.info(
        "sweeping %d runs over %.0f km with %d worker(s)",
        len(jobs),
        link.distance_km,
        workers,
    )
    return _execute(jobs, workers, progress)


def sweep_distances(
    span_counts: Sequence[int],
    link: LinkConfig,
    wdm: WdmConfig,
    blocklengths: Sequence[int],
    lambdas: Sequence[float],
    seeds: Sequence[int],
    *,
    launch_powers: Sequence[float] | None = None,
    alphabet: AmplitudeAlphabet | None = None,
    simulation: SimulationConfig | None = None,
    edi_windows: Sequence[int] = (),
    epsilon: float = DEFAULT_EPSILON,
    blocks_per_run: int = 0,
    workers: int = 1,
    progress: bool = False,
) -> dict[float, list[ExperimentRecord]]:
    """Repeat :func:`sweep_blocklengths` for each number of spans.

    Args:
        span_counts: Span counts to sweep.
        link: Link whose span count is replaced per distance.
        wdm: Multiplex parameters.
        blocklengths: CCDM blocklengths to sweep.
        lambdas: Forgetting factors at which to record Tx-side EEDI.
        seeds: Master seeds.
        launch_powers: Launch power per channel in dBm for each span count;
            None keeps ``wdm.launch_power_per_channel`` everywhere.
        alphabet: Amplitude alphabet.
        simulation: Sequence sizing.
        edi_windows: EDI windows to record.
        epsilon: EEDI truncation weight.
        blocks_per_run: CCDM blocks per quadrature (0 = automatic).
        workers: Worker processes.
        progress: Show a progress bar.

    Returns:
        Records keyed by distance in km.

    Raises:
        ConfigurationError: If ``launch_powers`` and ``span_counts`` differ
            in length.
    """
    if launch_powers is None:
        launch_powers = [wdm.launch_power_per_channel] * len(span_counts)
    if len(launch_powers) != len(span_counts):
        msg = f"{len(launch_powers)} launch powers for {len(span_counts)} distances"
        raise ConfigurationError(msg)
    sweeps: dict[float, list[ExperimentRecord]] = {}
    for spans, power in zip(span_counts, launch_powers, strict=True):
        span_link = replace(link, num_spans=spans)
        sweeps[span_link.distance_km] = sweep_blocklengths(
            blocklengths,
            span_link,
            replace(wdm, launch_power_per_channel=power),
            lambdas,
            seeds,
            alphabet=alphabet,
            simulation=simulation,
            edi_windows=edi_windows,
            epsilon=epsilon,
            blocks_per_run=blocks_per_run,
            workers=workers,
            progress=progress,
        )
    return sweeps


def group_by_blocklength(
    records: Iterable[ExperimentRecord],
) -> dict[int, list[ExperimentRecord]]:
    """Group records by blocklength, ascending, each group in seed order."""
    groups: dict[int, list[ExperimentRecord]] = defaultdict(list)
    for record in sorted(records, key=lambda r: r.sort_key):
        groups[record.blocklength].append(record)
    return dict(sorted(groups.items()))


def group_by_distance(
    records: Iterable[ExperimentRecord],
) -> dict[float, list[ExperimentRecord]]:
    """Group records by distance, ascending."""
    groups: dict[float, list[ExperimentRecord]] = defaultdict(list)
    for record in sorted(records, key=lambda r: r.sort_key):
        groups[record.distance_km].append(record)
    return dict(sorted(groups.items()))


def summarize_blocklengths(
    records: Sequence[ExperimentRecord],
) -> list[BlocklengthSummary]:
    """Aggregate SNR and metrics per blocklength across seeds."""
    summaries = []
    for n, group in group_by_blocklength(records).items():
        snrs = [r.effective_snr_db for r in group]
        lambdas = set.intersection(*(set(r.eedi) for r in group))
        windows = set.intersection(*(set(r.edi) for r in group))
        summaries.append(
            BlocklengthSummary(
                blocklength=n,
                num_runs=len(group),
                mean_snr_db=float(np.mean(snrs)),
                ci_halfwidth_db=confidence_halfwidth(snrs),
                mean_eedi={
                    lam: float(np.mean([r.eedi[lam] for r in group]))
                    for lam in sorted(lambdas)
                },
                mean_edi={
                    w: float(np.mean([r.edi[w] for r in group]))
                    for w in sorted(windows)
                },
                mean_kurtosis=float(np.mean([r.kurtosis for r in group])),
            )
        )
    return summaries


def lambda_grid(
    grid_lo: float = DEFAULT_GRID_LO,
    grid_hi: float = DEFAULT_GRID_HI,
    step: float = DEFAULT_GRID_STEP,
) -> np.ndarray:
    """Forgetting factors ``grid_lo + k * step`` strictly below ``grid_hi``.

    Raises:
        ConfigurationError: If the bounds or step are invalid.
    """
    if not 0 <= grid_lo < grid_hi <= 1 or not step > 0:
        msg = f"invalid grid [{grid_lo}, {grid_hi}) with step {step}"
        raise ConfigurationError(msg)
    count = math.ceil((grid_hi - grid_lo) / step - 1e-9)
    grid = np.round(grid_lo + step * np.arange(count), _GRID_DECIMALS)
    return grid[grid < grid_hi]


def _energy_groups(
    records: Sequence[ExperimentRecord],
) -> tuple[list[int], dict[int, list[EnergySeries]], np.ndarray]:
    """Blocklengths, energy series per blocklength and mean SNRs."""
    groups = group_by_blocklength(records)
    if len(groups) < MIN_BLOCKLENGTHS:
        msg = (
            f"need at least {MIN_BLOCKLENGTHS} distinct blocklengths, "
            f"got {len(groups)}"
        )
        raise InsufficientDataError(msg)
    series: dict[int, list[EnergySeries]] = {}
    for n, group in groups.items():
        if any(r.energies is None for r in group):
            msg = f"records for n={n} carry no energy series"
            raise InsufficientDataError(msg)
        series[n] = [EnergySeries(r.energies) for r in group]  # type: ignore[arg-type]
    snrs = np.array(
        [np.mean([r.effective_snr_db for r in group]) for group in groups.values()]
    )
    return list(groups), series, snrs


def _mean_eedi(
    series: Mapping[int, list[EnergySeries]], forgetting_factor: float, epsilon: float
) -> np.ndarray:
    """Mean EEDI of each blocklength group at one forgetting factor."""
    return np.array(
        [
            np.mean(
                [eedi_from_energies(e, forgetting_factor, epsilon).value for e in group]
            )
            for group in series.values()
        ]
    )


def optimize_lambda(
    records: Sequence[ExperimentRecord],
    grid_lo: float = DEFAULT_GRID_LO,
    grid_hi: float = DEFAULT_GRID_HI,
    step: float = DEFAULT_GRID_STEP,
    epsilon: float = DEFAULT_EPSILON,
) -> CorrelationCurve:
    """Exhaustively search the forgetting factor maximizing |r_p(EEDI, SNR)|.

    One (mean EEDI, mean SNR) pair per blocklength enters the correlation.
    EEDI is recomputed from the stored energy series at each grid point.
    Grid points whose truncation window exceeds the stored sequences are
    dropped from the curve.

    Args:
        records: Records of one distance, covering at least 3 blocklengths.
        grid_lo: Smallest forgetting factor.
        grid_hi: Exclusive upper bound of the grid.
        step: Grid step.
        epsilon: EEDI truncation weight.

    Returns:
        The |r_p| curve with its argmax (smallest lambda on ties).

    Raises:
        InsufficientDataError: If fewer than 3 blocklengths are present, the
            records lack energy series, or no grid point is evaluable.
        UndefinedCorrelationError: If the mean SNR is the same for every
            blocklength.
    """
    _, series, snrs = _energy_groups(records)
    if np.ptp(snrs) == 0:
        raise UndefinedCorrelationError("effective SNR is constant across blocklengths")
    grid = lambda_grid(grid_lo, grid_hi, step)
    kept: list[float] = []
    abs_rp: list[float] = []
    for lam in grid:
        try:
            metric = _mean_eedi(series, float(lam), epsilon)
        except InsufficientLengthError:
            # the window only grows with lambda, so the rest of the grid fails too
            logger.warning(
                "dropping %d grid points from lambda=%s: sequences too short",
                grid.size - len(kept),
                lam,
            )
            break
        try:
            abs_rp.append(abs(pearson(metric, snrs)))
        except UndefinedCorrelationError:
            abs_rp.append(0.0)
        kept.append(float(lam))
    if not kept:
        raise InsufficientDataError("no grid point could be evaluated")
    best = int(np.argmax(abs_rp))
    logger.info("lambda* = %s with |r_p| = %.6f", kept[best], abs_rp[best])
    return CorrelationCurve(tuple(kept), tuple(abs_rp), kept[best], abs_rp[best])


def mean_eedi_by_blocklength(
    records: Sequence[ExperimentRecord],
    forgetting_factor: float,
    epsilon: float = DEFAULT_EPSILON,
) -> dict[int, float]:
    """Mean EEDI per blocklength at an arbitrary forgetting factor."""
    ns, series, _ = _energy_groups(records)
    means = _mean_eedi(series, forgetting_factor, epsilon).tolist()
    return dict(zip(ns, means, strict=True))


def _abs_correlation(metric: Sequence[float], snrs: Sequence[float]) -> float | None:
    """|r_p| against SNR, or None when the correlation is undefined."""
    try:
        return abs(pearson(metric, snrs))
    except UndefinedCorrelationError:
        return None


def require_edi_windows(
    records: Sequence[ExperimentRecord], windows: Iterable[int]
) -> None:
    """Check every record carries EDI at each requested window.

    Raises:
        InsufficientDataError: Naming the windows missing from the records.
    """
    recorded = set.intersection(*(set(r.edi) for r in records)) if records else set()
    missing = sorted(set(windows) - recorded)
    if missing:
        names = ", ".join(str(w) for w in missing)
        msg = (
            f"records lack EDI for window(s) {names}; re-run sweep with these "
            "metrics.edi_windows or remove them"
        )
        raise InsufficientDataError(msg)


def metric_correlations(
    records: Sequence[ExperimentRecord],
    lambda_star: float,
    edi_windows: Sequence[int] = (),
    epsilon: float = DEFAULT_EPSILON,
) -> dict[str, float | None]:
    """|r_p| of EEDI at lambda*, EDI per window and kurtosis against SNR.

    Returns:
        Keys ``eedi``, ``edi_W<w>`` and ``kurtosis``; a value is None when
        the metric is constant across blocklengths.

    Raises:
        InsufficientDataError: If a window in ``edi_windows`` was not recorded.
    """
    require_edi_windows(records, edi_windows)
    summaries = summarize_blocklengths(records)
    snrs = [s.mean_snr_db for s in summaries]
    eedi_means = mean_eedi_by_blocklength(records, lambda_star, epsilon)
    result: dict[str, float | None] = {
        "eedi": _abs_correlation([eedi_means[s.blocklength] for s in summaries], snrs)
    }
    for window in edi_windows:
        result[f"edi_W{window}"] = _abs_correlation(
            [s.mean_edi[window] for s in summaries], snrs
        )
    result["kurtosis"] = _abs_correlation([s.mean_kurtosis for s in summaries], snrs)
    return result


def lambda_vs_distance(
    sweeps: Mapping[float, Sequence[ExperimentRecord]],
    *,
    grid_lo: float = DEFAULT_GRID_LO,
    grid_hi: float = DEFAULT_GRID_HI,
    step: float = DEFAULT_GRID_STEP,
    epsilon: float = DEFAULT_EPSILON,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    rp_threshold: float = DEFAULT_RP_THRESHOLD,
) -> tuple[DistanceTrend, dict[float, CorrelationCurve]]:
    """Optimal forgetting factor at every distance of completed sweeps.

    Args:
        sweeps: Records of a completed sweep per distance in km.
        grid_lo: Smallest forgetting factor.
        grid_hi: Exclusive upper bound of the grid.
        step: Grid step.
        epsilon: EEDI truncation weight.
        weight_threshold: Weight for the effective window count.
        rp_threshold: |r_p| a distance must reach to count as well predicted.

    Returns:
        The trend (ascending distance) and the correlation curve per
        distance. A trend in which 1 - lambda* grows with distance is
        reported with a warning.

    Raises:
        InsufficientDataError: If no sweep is given.
    """
    if not sweeps:
        raise InsufficientDataError("no completed sweeps")
    curves: dict[float, CorrelationCurve] = {}
    points = []
    for distance in sorted(sweeps):
        curve = optimize_lambda(sweeps[distance], grid_lo, grid_hi, step, epsilon)
        curves[distance] = curve
        points.append(
            DistancePoint(
                distance_km=distance,
                lambda_star=curve.lambda_star,
                rp_star=curve.rp_star,
                window_count=effective_window_count(
                    curve.lambda_star, weight_threshold
                ),
                meets_threshold=curve.rp_star >= rp_threshold,
            )
        )
    trend = DistanceTrend(tuple(points))
    if not trend.is_monotone:
        logger.warning("1 - lambda* is not non-increasing with distance")
    return trend, curves


def edi_alignment_offset(
    eedi_means: Mapping[int, float], edi_means: Mapping[int, float]
) -> float:
    """dB shift aligning EDI with EEDI at the largest common blocklength."""
    common = set(eedi_means) & set(edi_means)
    if not common:
        raise InsufficientDataError("no blocklength has both EEDI and EDI")
    n = max(common)
    return eedi_db(eedi_means[n]) - eedi_db(edi_means[n])


def figure2_rows(
    records: Sequence[ExperimentRecord],
    lambda_star: float,
    edi_window: int | None,
    epsilon: float = DEFAULT_EPSILON,
) -> list[tuple[float, ...]]:
    """Rows ``(distance_km, n, snr_db, ci_halfwidth_db, eedi_db, edi_db_shifted)``.

    The EDI column is shifted so it meets EEDI at the largest blocklength;
    it is NaN when no EDI window was recorded.
    """
    summaries = summarize_blocklengths(records)
    eedi_means = mean_eedi_by_blocklength(records, lambda_star, epsilon)
    offset = math.nan
    edi_means: dict[int, float] = {}
    if edi_window is not None:
        require_edi_windows(records, (edi_window,))
        edi_means = {s.blocklength: s.mean_edi[edi_window] for s in summaries}
        offset = edi_alignment_offset(eedi_means, edi_means)
    distance = records[0].distance_km
    return [
        (
            distance,
            s.blocklength,
            s.mean_snr_db,
            s.ci_halfwidth_db,
            eedi_db(eedi_means[s.blocklength]),
            eedi_db(edi_means[s.blocklength]) + offset if edi_means else math.nan,
        )
        for s in summaries
    ]


def figure3_rows(
    distance_km: float, curve: CorrelationCurve
) -> list[tuple[float, float, float]]:
    """Rows ``(distance_km, one_minus_lambda, abs_rp)``."""
    return [
        (distance_km, 1.0 - lam, rp)
        for lam, rp in zip(curve.lambda_grid, curve.abs_rp, strict=True)
    ]


def figure4_rows(trend: DistanceTrend) -> list[tuple[float, float]]:
    """Rows ``(distance_km, one_minus_lambda_star)``."""
    return [(p.distance_km, p.one_minus_lambda_star) for p in trend.points]
