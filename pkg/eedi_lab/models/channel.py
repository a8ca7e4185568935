"""Data models for the fiber link, WDM transmitter and received results."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Final

import numpy as np

from eedi_lab.errors import ConfigValidationError

DEFAULT_SPAN_LENGTH_KM: Final[float] = 80.0
DEFAULT_LOSS_DB_PER_KM: Final[float] = 0.19
DEFAULT_DISPERSION_PS_NM_KM: Final[float] = 17.0
DEFAULT_GAMMA_PER_W_KM: Final[float] = 1.37
DEFAULT_NOISE_FIGURE_DB: Final[float] = 6.0
DEFAULT_CENTER_WAVELENGTH_NM: Final[float] = 1550.0
DEFAULT_STEP_SIZE_KM: Final[float] = 0.1

DEFAULT_NUM_CHANNELS: Final[int] = 5
DEFAULT_SYMBOL_RATE_GBD: Final[float] = 32.0
DEFAULT_CHANNEL_SPACING_GHZ: Final[float] = 50.0
DEFAULT_ROLLOFF: Final[float] = 0.1
DEFAULT_SAMPLES_PER_SYMBOL: Final[int] = 8

DEFAULT_NUM_SYMBOLS: Final[int] = 2**16
DEFAULT_GUARD_SYMBOLS: Final[int] = 512
DEFAULT_RRC_SPAN_SYMBOLS: Final[int] = 128

_STEP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LinkConfig:
    """Multi-span fiber link parameters.

    Attributes:
        num_spans: Number of fiber spans, each followed by an EDFA.
        span_length: Span length in km.
        loss_alpha: Fiber attenuation in dB/km.
        dispersion_D: Chromatic dispersion in ps/nm/km.
        gamma: Nonlinear coefficient in 1/W/km.
        noise_figure: EDFA noise figure in dB; ``-inf`` disables ASE.
        center_wavelength: Carrier wavelength in nm.
        step_size: Split-step length in km; must divide the span length.
        ase_noise: Whether amplifiers add ASE noise at all.
    """

    num_spans: int
    span_length: float = DEFAULT_SPAN_LENGTH_KM
    loss_alpha: float = DEFAULT_LOSS_DB_PER_KM
    dispersion_D: float = DEFAULT_DISPERSION_PS_NM_KM  # noqa: N815
    gamma: float = DEFAULT_GAMMA_PER_W_KM
    noise_figure: float = DEFAULT_NOISE_FIGURE_DB
    center_wavelength: float = DEFAULT_CENTER_WAVELENGTH_NM
    step_size: float = DEFAULT_STEP_SIZE_KM
    ase_noise: bool = True

    def __post_init__(self) -> None:
        """Validate the link.

        Raises:
            ConfigValidationError: Naming the first invalid ``link.*`` field.
        """
        if self.num_spans < 0:
            raise ConfigValidationError("link.num_spans", "must be >= 0")
        if not self.span_length > 0:
            raise ConfigValidationError("link.span_length", "must be positive")
        if self.loss_alpha < 0:
            raise ConfigValidationError("link.loss_alpha", "must be non-negative")
        if self.gamma < 0:
            raise ConfigValidationError("link.gamma", "must be non-negative")
        if not self.center_wavelength > 0:
            raise ConfigValidationError("link.center_wavelength", "must be positive")
        if not self.step_size > 0:
            raise ConfigValidationError("link.step_size", "must be positive")
        steps = round(self.span_length / self.step_size)
        if steps < 1 or abs(steps * self.step_size - self.span_length) > (
            _STEP_TOLERANCE * self.span_length
        ):
            msg = f"{self.step_size} km does not divide span {self.span_length} km"
            raise ConfigValidationError("link.step_size", msg)

    @property
    def steps_per_span(self) -> int:
        """Number of split steps in one span."""
        return round(self.span_length / self.step_size)

    @property
    def distance_km(self) -> float:
        """Total transmission distance."""
        return self.num_spans * self.span_length

    @property
    def span_loss_db(self) -> float:
        """Loss of one span, which each EDFA compensates."""
        return self.span_length * self.loss_alpha

    @property
    def noiseless(self) -> bool:
        """True when amplifiers add no ASE."""
        return not self.ase_noise or math.isinf(self.noise_figure)


@dataclass(frozen=True)
class WdmConfig:
    """WDM transmitter parameters.

    Attributes:
        launch_power_per_channel: Launch power of each channel in dBm.
        num_channels: Odd number of channels; the central one is analysed.
        symbol_rate: Per-channel symbol rate in GBd.
        channel_spacing: Channel spacing in GHz.
        rolloff: RRC roll-off factor in [0, 1].
        samples_per_symbol: Oversampling factor of the simulation.
    """

    launch_power_per_channel: float
    num_channels: int = DEFAULT_NUM_CHANNELS
    symbol_rate: float = DEFAULT_SYMBOL_RATE_GBD
    channel_spacing: float = DEFAULT_CHANNEL_SPACING_GHZ
    rolloff: float = DEFAULT_ROLLOFF
    samples_per_symbol: int = DEFAULT_SAMPLES_PER_SYMBOL

    def __post_init__(self) -> None:
        """Validate the multiplex.

        Raises:
            ConfigValidationError: Naming the first invalid ``wdm.*`` field.
        """
        if self.num_channels < 1 or self.num_channels % 2 == 0:
            raise ConfigValidationError("wdm.num_channels", "must be odd and >= 1")
        if not self.symbol_rate > 0:
            raise ConfigValidationError("wdm.symbol_rate", "must be positive")
        if not 0 <= self.rolloff <= 1:
            raise ConfigValidationError("wdm.rolloff", "must lie in [0, 1]")
        if self.samples_per_symbol < 2:
            raise ConfigValidationError("wdm.samples_per_symbol", "must be >= 2")
        if self.num_channels > 1 and (
            (1 + self.rolloff) * self.symbol_rate > self.channel_spacing
        ):
            raise ConfigValidationError(
                "wdm.channel_spacing", "adjacent channel spectra overlap"
            )
        if self.sample_rate <= self.num_channels * self.channel_spacing:
            raise ConfigValidationError(
                "wdm.samples_per_symbol",
                "simulation bandwidth does not cover the WDM spectrum",
            )

    @property
    def sample_rate(self) -> float:
        """Simulation sample rate in GHz."""
        return self.samples_per_symbol * self.symbol_rate

    @property
    def central_index(self) -> int:
        """Index of the channel of interest."""
        return (self.num_channels - 1) // 2

    @property
    def launch_power_w(self) -> float:
        """Per-channel launch power in W."""
        return 1e-3 * 10 ** (self.launch_power_per_channel / 10)


@dataclass(frozen=True)
class SimulationConfig:
    """Sequence and DSP parameters the research setup leaves open.

    Attributes:
        num_symbols: Symbols per channel per run.
        guard_symbols: Symbols discarded at each end before SNR estimation.
        rrc_span_symbols: Length of the RRC impulse response in symbols.
        fft_workers: Threads each FFT may use inside one run.
    """

    num_symbols: int = DEFAULT_NUM_SYMBOLS
    guard_symbols: int = DEFAULT_GUARD_SYMBOLS
    rrc_span_symbols: int = DEFAULT_RRC_SPAN_SYMBOLS
    fft_workers: int = 1

    def __post_init__(self) -> None:
        """Validate sequence sizing.

        Raises:
            ConfigValidationError: Naming the first invalid field.
        """
        if self.guard_symbols < 0:
            raise ConfigValidationError(
                "simulation.guard_symbols", "must be non-negative"
            )
        if self.num_symbols <= 2 * self.guard_symbols + 2:
            raise ConfigValidationError(
                "simulation.num_symbols", "must exceed twice the guard length"
            )
        if self.rrc_span_symbols < 2 or self.rrc_span_symbols >= self.num_symbols:
            raise ConfigValidationError(
                "simulation.rrc_span_symbols", "must lie in [2, num_symbols)"
            )
        if self.fft_workers < 1:
            raise ConfigValidationError("simulation.fft_workers", "must be >= 1")


@dataclass(frozen=True, eq=False)
class Waveform:
    """Sampled complex optical field.

    Attributes:
        samples: Field samples in sqrt(W).
        sample_rate: Sample rate in GHz.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        """Store the samples as a 1-D complex array."""
        samples = np.asarray(self.samples, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def power(self) -> float:
        """Mean power in W."""
        return float(np.mean(np.abs(self.samples) ** 2))

    @property
    def energy(self) -> float:
        """Sum of |sample|^2."""
        return float(np.sum(np.abs(self.samples) ** 2))

    def with_samples(self, samples: np.ndarray) -> Waveform:
        """Return a waveform with new samples at the same rate."""
        return Waveform(samples, self.sample_rate)


@dataclass(frozen=True, eq=False)
class RxResult:
    """Receiver output for the central channel.

    Attributes:
        recovered_symbols: Matched-filtered, sampled symbols after the
            guard discard.
        effective_snr_db: Effective SNR, capped for noiseless cases.
        scale: Complex least-squares scale a between Tx and Rx symbols.
        sampling_offset: Sample offset chosen within one symbol period.
    """

    recovered_symbols: np.ndarray
    effective_snr_db: float
    scale: complex
    sampling_offset: int = 0

    def to_json(self) -> dict[str, object]:
        """Serialize the scalar fields for ``rx_result.json``."""
        return {
            "effective_snr_db": self.effective_snr_db,
            "scale_re": self.scale.real,
            "scale_im": self.scale.imag,
            "sampling_offset": self.sampling_offset,
            "num_symbols": int(self.recovered_symbols.size),
        }
