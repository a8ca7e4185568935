"""Data models for symbol-energy statistics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class MetricKind(str, Enum):
    """Statistic a :class:`MetricResult` holds."""

    EEDI = "eedi"
    EDI = "edi"
    KURTOSIS = "kurtosis"


def _frozen_array(values: np.ndarray) -> np.ndarray:
    """Read-only copy of an array."""
    array = np.array(values, dtype=np.float64).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class EnergySeries:
    """Per-symbol energies |X_i|^2.

    Attributes:
        values: Non-negative energies in symbol order.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        """Store the energies as a read-only float array.

        Raises:
            ValueError: If any energy is negative.
        """
        values = _frozen_array(self.values)
        if np.any(values < 0):
            raise ValueError("energies must be non-negative")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class WeightedEnergySeries:
    """Exponentially weighted energy sums G_i over a finite sequence.

    Attributes:
        values: G_i for every index; only the interior range has full
            two-sided weight support.
        forgetting_factor: Decay lambda in [0, 1).
        truncation_length: One-sided window L of the truncated sum.
        interior_start: First index with full support.
        interior_stop: One past the last index with full support.
    """

    values: np.ndarray
    forgetting_factor: float
    truncation_length: int
    interior_start: int
    interior_stop: int

    def __post_init__(self) -> None:
        """Store the weighted sums as a read-only float array."""
        object.__setattr__(self, "values", _frozen_array(self.values))

    @property
    def interior(self) -> np.ndarray:
        """G_i restricted to the full-support interior range."""
        return self.values[self.interior_start : self.interior_stop]


@dataclass(frozen=True)
class MetricResult:
    """One evaluated statistic.

    Attributes:
        kind: Which statistic this is.
        value: The statistic's value.
        parameter: Forgetting factor for EEDI, window W for EDI, None for
            kurtosis.
        num_samples: Number of samples the statistic was reduced over.
    """

    kind: MetricKind
    value: float
    parameter: float | None
    num_samples: int

    def to_json(self) -> dict[str, object]:
        """Serialize to the CLI's ``{metric, value, lambda/W, n_samples}`` form."""
        payload: dict[str, object] = {"metric": self.kind.value, "value": self.value}
        if self.kind is MetricKind.EEDI:
            payload["lambda"] = self.parameter
        elif self.kind is MetricKind.EDI:
            payload["W"] = None if self.parameter is None else int(self.parameter)
        payload["n_samples"] = self.num_samples
        return payload
