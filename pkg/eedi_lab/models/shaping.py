"""Data models for probabilistic amplitude shaping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from eedi_lab.errors import ConfigValidationError, InvalidBlockError

PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """Shaped amplitude levels and their target probabilities.

    Attributes:
        levels: Strictly increasing, strictly positive amplitude values.
        probabilities: Target probability of each level; sums to one.
    """

    levels: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate the alphabet.

        Raises:
            ConfigValidationError: If levels or probabilities are malformed.
        """
        if not self.levels:
            raise ConfigValidationError("alphabet.levels", "must not be empty")
        if len(self.levels) != len(self.probabilities):
            msg = (
                f"expected {len(self.levels)} probabilities, "
                f"got {len(self.probabilities)}"
            )
            raise ConfigValidationError("alphabet.probabilities", msg)
        if self.levels[0] <= 0:
            raise ConfigValidationError("alphabet.levels", "must be positive")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:], strict=False)):
            raise ConfigValidationError("alphabet.levels", "must be increasing")
        if any(p < 0 for p in self.probabilities):
            raise ConfigValidationError(
                "alphabet.probabilities", "must be non-negative"
            )
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            msg = f"must sum to 1, got {total!r}"
            raise ConfigValidationError("alphabet.probabilities", msg)

    @property
    def size(self) -> int:
        """Number of amplitude levels."""
        return len(self.levels)


@dataclass(frozen=True)
class Composition:
    """Exact per-level amplitude counts of one CCDM block.

    Attributes:
        levels: Amplitude values the counts refer to, in alphabet order.
        counts: Number of occurrences of each level.
        blocklength: Block length n; always ``sum(counts)``.
    """

    levels: tuple[float, ...]
    counts: tuple[int, ...]
    blocklength: int

    def __post_init__(self) -> None:
        """Validate that the counts form a block of length n.

        Raises:
            InvalidBlockError: If counts are negative, misaligned with the
                levels, or do not sum to the blocklength.
        """
        if len(self.counts) != len(self.levels):
            raise InvalidBlockError("one count per level required")
        if any(c < 0 for c in self.counts):
            raise InvalidBlockError("counts must be non-negative")
        if self.blocklength < 1 or sum(self.counts) != self.blocklength:
            msg = f"counts {self.counts} do not sum to n={self.blocklength}"
            raise InvalidBlockError(msg)


@dataclass(frozen=True)
class AmplitudeBlock:
    """One CCDM output block.

    Attributes:
        values: The n amplitudes, each a level of the alphabet.
    """

    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class SymbolSequence:
    """Complex baseband symbol stream on unnormalized constellation levels.

    Attributes:
        symbols: 1-D complex array of symbols.
        blocklength: CCDM blocklength n the stream was shaped with
            (0 for i.i.d. or externally loaded streams).
        seed: Seed of the generator that produced the stream.
    """

    symbols: np.ndarray
    blocklength: int = 0
    seed: int | None = None

    def __post_init__(self) -> None:
        """Coerce the symbols into a read-only 1-D complex array."""
        symbols = np.array(self.symbols, dtype=np.complex128).reshape(-1)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return (
            self.blocklength == other.blocklength
            and self.seed == other.seed
            and np.array_equal(self.symbols, other.symbols)
        )

    __hash__ = None  # type: ignore[assignment]

    def head(self, count: int) -> SymbolSequence:
        """Return the first ``count`` symbols with the same provenance."""
        return SymbolSequence(self.symbols[:count], self.blocklength, self.seed)
