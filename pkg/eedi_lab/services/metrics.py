"""Symbol-energy statistics: weighted energies, EEDI, EDI and kurtosis.

All statistics work on unnormalized constellation levels. Scaling every
symbol by c multiplies EEDI and EDI by c**2 and leaves kurtosis unchanged.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Final

import numpy as np
from scipy.signal import lfilter

from eedi_lab.errors import (
    ConfigurationError,
    DegenerateInputError,
    EmptyInputError,
    InsufficientLengthError,
)
from eedi_lab.models.metrics import (
    EnergySeries,
    MetricKind,
    MetricResult,
    WeightedEnergySeries,
)
from eedi_lab.models.shaping import SymbolSequence

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

DEFAULT_EPSILON: Final[float] = 1e-6
DEFAULT_WEIGHT_THRESHOLD: Final[float] = 0.2


def _as_symbols(seq: SymbolSequence | ArrayLike) -> np.ndarray:
    """Symbols of a sequence or array as a 1-D complex array."""
    if isinstance(seq, SymbolSequence):
        return seq.symbols
    return np.asarray(seq, dtype=np.complex128).reshape(-1)


def symbol_energies(seq: SymbolSequence | ArrayLike) -> EnergySeries:
    """Return |X_i|^2 for every symbol.

    Raises:
        EmptyInputError: If the sequence is empty.
    """
    symbols = _as_symbols(seq)
    if symbols.size == 0:
        raise EmptyInputError("symbol sequence is empty")
    return EnergySeries(symbols.real**2 + symbols.imag**2)


def truncation_length(forgetting_factor: float, epsilon: float) -> int:
    """One-sided window L = ceil(ln eps / ln lambda); 0 when lambda is 0."""
    if forgetting_factor == 0:
        return 0
    return math.ceil(math.log(epsilon) / math.log(forgetting_factor))


def _check_forgetting_factor(forgetting_factor: float, *, allow_one: bool) -> None:
    """Require lambda in [0, 1), or in [0, 1] when allow_one is set."""
    upper_ok = forgetting_factor <= 1 if allow_one else forgetting_factor < 1
    if not (forgetting_factor >= 0 and upper_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        msg = f"forgetting factor must lie in {bound}, got {forgetting_factor}"
        raise ConfigurationError(msg)


def weighted_energy(
    energies: EnergySeries,
    forgetting_factor: float,
    epsilon: float = DEFAULT_EPSILON,
) -> WeightedEnergySeries:
    """Compute G_i = sum_{|l|<=L} lambda^|l| e_{i+l} over the interior range.

    A forward recursion F_i = lambda F_{i-1} + e_i and a backward recursion
    B_i = lambda B_{i+1} + e_i are run with ``lfilter`` and then truncated to
    L terms by subtracting lambda^(L+1) times the value L+1 samples back, so
    G_i = F_i + B_i - e_i equals the direct truncated sum. The first and last
    L samples lack full support and are excluded from the interior range.

    Args:
        energies: Per-symbol energies.
        forgetting_factor: lambda in [0, 1).
        epsilon: Weight below which terms are dropped.

    Returns:
        The weighted energy series with its interior range.

    Raises:
        ConfigurationError: If lambda is outside [0, 1) or epsilon outside (0, 1).
        InsufficientLengthError: If the series is shorter than 2L + 1.
    """
    _check_forgetting_factor(forgetting_factor, allow_one=False)
    if not 0 < epsilon < 1:
        msg = f"epsilon must lie in (0, 1), got {epsilon}"
        raise ConfigurationError(msg)
    e = energies.values
    window = truncation_length(forgetting_factor, epsilon)
    if e.size < 2 * window + 1:
        msg = (
            f"lambda={forgetting_factor} needs at least {2 * window + 1} "
            f"symbols, got {e.size}"
        )
        raise InsufficientLengthError(msg)
    if window == 0:
        values = e.copy()
    else:
        feedback = [1.0, -forgetting_factor]
        forward = lfilter([1.0], feedback, e)
        backward = lfilter([1.0], feedback, e[::-1])[::-1]
        tail = forgetting_factor ** (window + 1)
        forward[window + 1 :] -= tail * forward[: -window - 1]
        backward[: -window - 1] -= tail * backward[window + 1 :]
        values = forward + backward - e
    return WeightedEnergySeries(
        values=values,
        forgetting_factor=forgetting_factor,
        truncation_length=window,
        interior_start=window,
        interior_stop=e.size - window,
    )


def _dispersion_index(samples: np.ndarray) -> float:
    """Unbiased sample variance over sample mean."""
    mean = float(np.mean(samples))
    if mean == 0:
        raise DegenerateInputError("mean energy is zero")
    return float(np.var(samples, ddof=1)) / mean


def eedi_from_energies(
    energies: EnergySeries,
    forgetting_factor: float,
    epsilon: float = DEFAULT_EPSILON,
) -> MetricResult:
    """EEDI of a precomputed energy series; see :func:`eedi`."""
    _check_forgetting_factor(forgetting_factor, allow_one=True)
    if not np.any(energies.values):
        raise DegenerateInputError("all symbol energies are zero")
    if forgetting_factor == 1:
        if len(energies) < 2:
            raise InsufficientLengthError("EEDI needs at least 2 symbols")
        # every G_i is the total energy of the sequence
        return MetricResult(MetricKind.EEDI, 0.0, 1.0, len(energies))
    weighted = weighted_energy(energies, forgetting_factor, epsilon)
    interior = weighted.interior
    if interior.size < 2:
        msg = f"lambda={forgetting_factor} leaves fewer than 2 interior samples"
        raise InsufficientLengthError(msg)
    return MetricResult(
        MetricKind.EEDI,
        _dispersion_index(interior),
        forgetting_factor,
        int(interior.size),
    )


def eedi(
    seq: SymbolSequence | ArrayLike,
    forgetting_factor: float,
    epsilon: float = DEFAULT_EPSILON,
) -> MetricResult:
    """Exponentially-weighted energy dispersion index Var(G_i) / Mean(G_i).

    Args:
        seq: Symbol stream.
        forgetting_factor: lambda in [0, 1]; lambda = 1 returns exactly 0.
        epsilon: Truncation weight for the infinite sum.

    Returns:
        The EEDI result.

    Raises:
        DegenerateInputError: If the stream has zero energy.
        InsufficientLengthError: If the interior range is too short.
    """
    return eedi_from_energies(symbol_energies(seq), forgetting_factor, epsilon)


def edi_from_energies(energies: EnergySeries, window: int) -> MetricResult:
    """EDI of a precomputed energy series; see :func:`edi`."""
    if window < 1 or window % 2 == 0:
        msg = f"EDI window must be an odd positive integer, got {window}"
        raise ConfigurationError(msg)
    if len(energies) < window + 1:
        msg = f"EDI window {window} needs at least {window + 1} symbols"
        raise InsufficientLengthError(msg)
    sums = np.convolve(energies.values, np.ones(window), mode="valid")
    return MetricResult(
        MetricKind.EDI, _dispersion_index(sums), float(window), int(sums.size)
    )


def edi(seq: SymbolSequence | ArrayLike, window: int) -> MetricResult:
    """Energy dispersion index over a sliding rectangular window of W symbols.

    Args:
        seq: Symbol stream.
        window: Odd window length W.

    Returns:
        Var(E_i) / Mean(E_i) of the full-support windowed energy sums.

    Raises:
        InsufficientLengthError: If the stream is shorter than W + 1.
        DegenerateInputError: If the stream has zero energy.
    """
    return edi_from_energies(symbol_energies(seq), window)


def kurtosis_from_energies(energies: EnergySeries) -> MetricResult:
    """Kurtosis of a precomputed energy series; see :func:`kurtosis`."""
    if len(energies) < 2:
        raise InsufficientLengthError("kurtosis needs at least 2 symbols")
    second = float(np.mean(energies.values))
    if second == 0:
        raise DegenerateInputError("mean energy is zero")
    fourth = float(np.mean(energies.values**2))
    return MetricResult(
        MetricKind.KURTOSIS, fourth / second**2, None, len(energies)
    )


def kurtosis(seq: SymbolSequence | ArrayLike) -> MetricResult:
    """Standardized fourth moment E|X|^4 / (E|X|^2)^2."""
    return kurtosis_from_energies(symbol_energies(seq))


def effective_window_count(
    forgetting_factor: float, threshold: float = DEFAULT_WEIGHT_THRESHOLD
) -> int:
    """Count the offsets l whose weight lambda^|l| is at least the threshold.

    Args:
        forgetting_factor: lambda in [0, 1).
        threshold: Weight threshold t in (0, 1].

    Returns:
        ``2 * floor(ln t / ln lambda) + 1``, or 1 when lambda is 0.

    Raises:
        ConfigurationError: If either argument is out of range.
    """
    _check_forgetting_factor(forgetting_factor, allow_one=False)
    if not 0 < threshold <= 1:
        msg = f"threshold must lie in (0, 1], got {threshold}"
        raise ConfigurationError(msg)
    if forgetting_factor == 0:
        return 1
    return 2 * math.floor(math.log(threshold) / math.log(forgetting_factor)) + 1


def eedi_db(value: float) -> float:
    """Express an EEDI (or EDI) value in dB for plotting."""
    if value <= 0:
        return -math.inf
    return 10 * math.log10(value)
