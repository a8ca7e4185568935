"""Data models for sweeps and correlation analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Mapping


@dataclass(frozen=True, eq=False)
class ExperimentRecord:
    """Outcome of one simulated run.

    Attributes:
        blocklength: CCDM blocklength n.
        distance_km: Transmission distance.
        launch_power_dbm: Per-channel launch power.
        seed: Master seed of the run.
        effective_snr_db: Effective SNR of the central channel (finite or
            the capped sentinel).
        eedi: Tx-side EEDI of the central channel per forgetting factor.
        edi: Tx-side EDI of the central channel per window W.
        kurtosis: Tx-side kurtosis of the central channel.
        energies: Central-channel symbol energies, kept so EEDI can be
            re-evaluated at any forgetting factor without re-simulating.
    """

    blocklength: int
    distance_km: float
    launch_power_dbm: float
    seed: int
    effective_snr_db: float
    eedi: Mapping[float, float]
    edi: Mapping[int, float]
    kurtosis: float
    energies: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        """Validate the record.

        Raises:
            ValueError: If the blocklength is not positive or the SNR is NaN.
        """
        if self.blocklength < 1:
            raise ValueError("blocklength must be >= 1")
        if np.isnan(self.effective_snr_db):
            raise ValueError("effective SNR must not be NaN")
        object.__setattr__(self, "eedi", dict(self.eedi))
        object.__setattr__(self, "edi", dict(self.edi))

    @property
    def sort_key(self) -> tuple[float, int, int]:
        """Canonical ordering: distance, then blocklength, then seed."""
        return (self.distance_km, self.blocklength, self.seed)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExperimentRecord):
            return NotImplemented
        same_energies = (self.energies is None and other.energies is None) or (
            self.energies is not None
            and other.energies is not None
            and np.array_equal(self.energies, other.energies)
        )
        return (
            self.blocklength == other.blocklength
            and self.distance_km == other.distance_km
            and self.launch_power_dbm == other.launch_power_dbm
            and self.seed == other.seed
            and self.effective_snr_db == other.effective_snr_db
            and self.eedi == other.eedi
            and self.edi == other.edi
            and self.kurtosis == other.kurtosis
            and same_energies
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class BlocklengthSummary:
    """Per-blocklength aggregate across seeds.

    Attributes:
        blocklength: CCDM blocklength n.
        num_runs: Number of seeds aggregated.
        mean_snr_db: Mean effective SNR.
        ci_halfwidth_db: Half-width of the 95 % confidence interval of the
            mean SNR (0 for a single run).
        mean_eedi: Mean EEDI per forgetting factor.
        mean_edi: Mean EDI per window.
        mean_kurtosis: Mean kurtosis.
    """

    blocklength: int
    num_runs: int
    mean_snr_db: float
    ci_halfwidth_db: float
    mean_eedi: Mapping[float, float]
    mean_edi: Mapping[int, float]
    mean_kurtosis: float

    def to_json(self) -> dict[str, object]:
        """Serialize for ``summary.json``."""
        return {
            "blocklength": self.blocklength,
            "num_runs": self.num_runs,
            "mean_snr_db": self.mean_snr_db,
            "ci_halfwidth_db": self.ci_halfwidth_db,
            "mean_eedi": {repr(k): v for k, v in sorted(self.mean_eedi.items())},
            "mean_edi": {str(k): v for k, v in sorted(self.mean_edi.items())},
            "mean_kurtosis": self.mean_kurtosis,
        }


@dataclass(frozen=True)
class CorrelationCurve:
    """|r_p| between EEDI and effective SNR over a forgetting-factor grid.

    Attributes:
        lambda_grid: Forgetting factors evaluated, ascending.
        abs_rp: |r_p| at each grid point.
        lambda_star: Grid point with the largest |r_p| (smallest on ties).
        rp_star: |r_p| at lambda_star.
    """

    lambda_grid: tuple[float, ...]
    abs_rp: tuple[float, ...]
    lambda_star: float
    rp_star: float

    def __post_init__(self) -> None:
        """Validate the curve.

        Raises:
            ValueError: If the curve is empty, misaligned, or lambda_star is
                not its argmax.
        """
        if not self.lambda_grid or len(self.lambda_grid) != len(self.abs_rp):
            raise ValueError("grid and |r_p| must be non-empty and aligned")
        best = int(np.argmax(self.abs_rp))
        if self.lambda_grid[best] != self.lambda_star:
            raise ValueError("lambda_star must be the argmax of |r_p|")
        if self.abs_rp[best] != self.rp_star:
            raise ValueError("rp_star must equal the maximum |r_p|")


@dataclass(frozen=True)
class DistancePoint:
    """Optimal forgetting factor at one transmission distance.

    Attributes:
        distance_km: Transmission distance.
        lambda_star: Optimal forgetting factor.
        rp_star: |r_p| reached at lambda_star.
        window_count: Number of symbol energies weighted above the
            weight threshold at lambda_star.
        meets_threshold: Whether rp_star clears the quality threshold.
    """

    distance_km: float
    lambda_star: float
    rp_star: float
    window_count: int
    meets_threshold: bool

    @property
    def one_minus_lambda_star(self) -> float:
        """1 - lambda*, the quantity plotted against distance."""
        return 1.0 - self.lambda_star


@dataclass(frozen=True)
class DistanceTrend:
    """Optimal forgetting factors across distances, ascending in distance.

    Attributes:
        points: One entry per distance.
    """

    points: tuple[DistancePoint, ...]

    @property
    def is_monotone(self) -> bool:
        """True when 1 - lambda* never increases with distance."""
        values = [p.one_minus_lambda_star for p in self.points]
        return all(b <= a for a, b in zip(values, values[1:], strict=False))
