"""Single-polarization WDM fiber link simulated with the split-step method.

Waveforms are periodic: pulse shaping and matched filtering are circular
convolutions, and the split-step operators act on the FFT grid, so no edge
transients appear inside a run. Units: sample rates in GHz, lengths in km,
power in W, fields in sqrt(W).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Final

import numpy as np
from scipy import constants
from scipy import fft as sfft

from eedi_lab.errors import (
    ConfigurationError,
    DegenerateInputError,
    NumericOverflowError,
)
from eedi_lab.models.channel import (
    DEFAULT_GUARD_SYMBOLS,
    DEFAULT_RRC_SPAN_SYMBOLS,
    DEFAULT_SYMBOL_RATE_GBD,
    RxResult,
    Waveform,
)
from eedi_lab.models.shaping import SymbolSequence
from eedi_lab.seeding import make_rng, spawn_seeds
from eedi_lab.services.shaping import generate_shaped_symbols

if TYPE_CHECKING:
    from collections.abc import Sequence

    from eedi_lab.models.channel import LinkConfig, SimulationConfig, WdmConfig
    from eedi_lab.models.shaping import AmplitudeAlphabet
    from eedi_lab.seeding import Seed

logger = logging.getLogger(__name__)

SNR_CAP_DB: Final[float] = 99.0
_GHZ: Final[float] = 1e9
_PS_PER_NM_TO_S_PER_M: Final[float] = 1e-3


def beta2(link: LinkConfig) -> float:
    """Group-velocity dispersion in s^2/km, -D * lambda^2 / (2 pi c)."""
    wavelength_m = link.center_wavelength * 1e-9
    dispersion = link.dispersion_D * _PS_PER_NM_TO_S_PER_M
    return -dispersion * wavelength_m**2 / (2 * math.pi * constants.c)


def attenuation_per_km(link: LinkConfig) -> float:
    """Field power attenuation coefficient in 1/km (natural units)."""
    return link.loss_alpha / (10 * math.log10(math.e))


def _angular_frequencies(num_samples: int, sample_rate_ghz: float) -> np.ndarray:
    """Angular frequency grid in rad/s of an FFT of this length."""
    return 2 * math.pi * sfft.fftfreq(num_samples, d=1 / (sample_rate_ghz * _GHZ))


def rrc_taps(sps: int, rolloff: float, span_symbols: int) -> np.ndarray:
    """Unit-energy root-raised-cosine impulse response.

    Args:
        sps: Samples per symbol.
        rolloff: Roll-off factor in [0, 1].
        span_symbols: Filter length in symbol periods.

    Returns:
        ``span_symbols * sps + 1`` real taps centred on the middle tap.
    """
    num_taps = span_symbols * sps + 1
    t = (np.arange(num_taps) - (num_taps - 1) / 2) / sps
    if rolloff == 0:
        taps = np.sinc(t)
    else:
        taps = np.empty(num_taps)
        center = np.isclose(t, 0.0)
        singular = np.isclose(np.abs(t), 1 / (4 * rolloff))
        regular = ~(center | singular)
        tr = t[regular]
        numerator = np.sin(math.pi * tr * (1 - rolloff)) + 4 * rolloff * tr * np.cos(
            math.pi * tr * (1 + rolloff)
        )
        denominator = math.pi * tr * (1 - (4 * rolloff * tr) ** 2)
        taps[regular] = numerator / denominator
        taps[center] = 1 - rolloff + 4 * rolloff / math.pi
        taps[singular] = (rolloff / math.sqrt(2)) * (
            (1 + 2 / math.pi) * math.sin(math.pi / (4 * rolloff))
            + (1 - 2 / math.pi) * math.cos(math.pi / (4 * rolloff))
        )
    return taps / np.sqrt(np.sum(taps**2))


def _circular_filter(
    samples: np.ndarray, taps: np.ndarray, workers: int = 1
) -> np.ndarray:
    """Circularly convolve with a centred FIR response via the FFT."""
    if taps.size > samples.size:
        msg = f"{taps.size} filter taps exceed {samples.size} samples"
        raise ConfigurationError(msg)
    kernel = np.zeros(samples.size, dtype=np.complex128)
    kernel[: taps.size] = taps
    kernel = np.roll(kernel, -((taps.size - 1) // 2))
    spectrum = sfft.fft(samples, workers=workers) * sfft.fft(kernel, workers=workers)
    return sfft.ifft(spectrum, workers=workers)


def rrc_shape(
    symbols: SymbolSequence | np.ndarray,
    sps: int,
    rolloff: float,
    span_symbols: int,
    *,
    symbol_rate: float = DEFAULT_SYMBOL_RATE_GBD,
    workers: int = 1,
) -> Waveform:
    """Upsample symbols and filter them with a unit-energy RRC pulse.

    Args:
        symbols: Symbols to transmit.
        sps: Samples per symbol, at least 2.
        rolloff: Roll-off factor in [0, 1].
        span_symbols: RRC length in symbol periods.
        symbol_rate: Symbol rate in GBd; sets the waveform sample rate.
        workers: FFT threads.

    Returns:
        The shaped waveform with ``len(symbols) * sps`` samples.

    Raises:
        ConfigurationError: If sps or rolloff is out of range.
    """
    if sps < 2:
        msg = f"samples per symbol must be >= 2, got {sps}"
        raise ConfigurationError(msg)
    if not 0 <= rolloff <= 1:
        msg = f"rolloff must lie in [0, 1], got {rolloff}"
        raise ConfigurationError(msg)
    values = symbols.symbols if isinstance(symbols, SymbolSequence) else symbols
    upsampled = np.zeros(len(values) * sps, dtype=np.complex128)
    upsampled[::sps] = values
    shaped = _circular_filter(upsampled, rrc_taps(sps, rolloff, span_symbols), workers)
    return Waveform(shaped, symbol_rate * sps)


def matched_filter(
    field: Waveform, sps: int, rolloff: float, span_symbols: int, workers: int = 1
) -> Waveform:
    """Filter with the (real, symmetric) RRC response matched to the Tx pulse."""
    taps = rrc_taps(sps, rolloff, span_symbols)
    return field.with_samples(_circular_filter(field.samples, taps, workers))


def set_launch_power(field: Waveform, power_dbm: float) -> Waveform:
    """Scale a waveform so its mean power equals ``power_dbm``.

    Raises:
        DegenerateInputError: If the waveform carries no power.
    """
    current = field.power
    if current == 0:
        raise DegenerateInputError("cannot scale a zero-power waveform")
    target = 1e-3 * 10 ** (power_dbm / 10)
    return field.with_samples(field.samples * math.sqrt(target / current))


def build_wdm(channel_waveforms: Sequence[Waveform], spacing: float) -> Waveform:
    """Frequency-shift channels onto the WDM grid and sum them.

    Channel k is shifted by ``(k - (K - 1) / 2) * spacing`` GHz, so the
    central channel stays at baseband.

    Args:
        channel_waveforms: One waveform per channel, odd count.
        spacing: Channel spacing in GHz.

    Returns:
        The composite field.

    Raises:
        ConfigurationError: If the channel count is even or the waveforms
            differ in length or sample rate.
    """
    count = len(channel_waveforms)
    if count == 0 or count % 2 == 0:
        msg = f"an odd number of channels is required, got {count}"
        raise ConfigurationError(msg)
    first = channel_waveforms[0]
    for waveform in channel_waveforms[1:]:
        if len(waveform) != len(first) or not math.isclose(
            waveform.sample_rate, first.sample_rate
        ):
            raise ConfigurationError("channel waveforms differ in length or rate")
    time_ns = np.arange(len(first)) / first.sample_rate
    composite = np.zeros(len(first), dtype=np.complex128)
    for k, waveform in enumerate(channel_waveforms):
        offset_ghz = (k - (count - 1) / 2) * spacing
        if offset_ghz == 0:
            composite += waveform.samples
        else:
            composite += waveform.samples * np.exp(2j * math.pi * offset_ghz * time_ns)
    return Waveform(composite, first.sample_rate)


def _check_finite(samples: np.ndarray, where: str) -> None:
    """Raise NumericOverflowError if the field holds NaN or Inf."""
    if not np.all(np.isfinite(samples)):
        msg = f"non-finite field after {where}; reduce launch power or step size"
        raise NumericOverflowError(msg)


def ssfm_span(field: Waveform, link: LinkConfig, workers: int = 1) -> Waveform:
    """Propagate one fiber span with the symmetric split-step Fourier method.

    Each step applies half of the linear operator (dispersion and loss) in
    the frequency domain, the Kerr phase rotation exp(j gamma |A|^2 h_eff) in
    time, and the second linear half. Adjacent half steps are merged.

    Args:
        field: Input field.
        link: Fiber parameters; ``step_size`` sets the step length.
        workers: FFT threads.

    Returns:
        The field at the span output, before amplification.

    Raises:
        NumericOverflowError: If the field becomes NaN or Inf.
    """
    steps = link.steps_per_span
    step = link.span_length / steps
    alpha = attenuation_per_km(link)
    effective_step = -math.expm1(-alpha * step) / alpha if alpha > 0 else step
    omega = _angular_frequencies(len(field), field.sample_rate)
    linear = (-alpha / 2) + 0.5j * beta2(link) * omega**2
    half_step = np.exp(linear * step / 2)
    full_step = half_step * half_step
    kerr = 1j * link.gamma * effective_step

    spectrum = sfft.fft(field.samples, workers=workers) * half_step
    for k in range(steps):
        samples = sfft.ifft(spectrum, workers=workers)
        if link.gamma:
            samples *= np.exp(kerr * (samples.real**2 + samples.imag**2))
        spectrum = sfft.fft(samples, workers=workers)
        spectrum *= full_step if k < steps - 1 else half_step
    out = sfft.ifft(spectrum, workers=workers)
    _check_finite(out, "split-step span")
    return field.with_samples(out)


def dispersion_compensate(
    field: Waveform, link: LinkConfig, distance_km: float | None = None
) -> Waveform:
    """Apply the exact frequency-domain inverse of the accumulated dispersion.

    Args:
        field: Received field.
        link: Link whose dispersion is undone.
        distance_km: Distance to compensate; defaults to the whole link.

    Returns:
        The compensated field.
    """
    distance = link.distance_km if distance_km is None else distance_km
    omega = _angular_frequencies(len(field), field.sample_rate)
    inverse = np.exp(-0.5j * beta2(link) * omega**2 * distance)
    return field.with_samples(sfft.ifft(sfft.fft(field.samples) * inverse))


def ase_power(
    gain_db: float,
    noise_figure_db: float,
    sample_rate_ghz: float,
    center_wavelength_nm: float,
) -> float:
    """ASE power over the simulation bandwidth, (G-1) h nu n_sp B.

    ``n_sp = NF / 2`` in linear units; a noise figure of ``-inf`` dB gives
    zero noise.
    """
    gain = 10 ** (gain_db / 10)
    n_sp = 10 ** (noise_figure_db / 10) / 2
    frequency = constants.c / (center_wavelength_nm * 1e-9)
    return (gain - 1) * constants.h * frequency * n_sp * sample_rate_ghz * _GHZ


def edfa(
    field: Waveform,
    gain_db: float,
    noise_figure_db: float,
    seed: Seed,
    *,
    center_wavelength_nm: float = 1550.0,
) -> Waveform:
    """Amplify the field and add circular white Gaussian ASE noise.

    Args:
        field: Field at the amplifier input.
        gain_db: Power gain in dB.
        noise_figure_db: Noise figure in dB; ``-inf`` disables noise.
        seed: Seed of the noise generator.
        center_wavelength_nm: Carrier wavelength for the photon energy.

    Returns:
        The amplified field; deterministic given the seed.
    """
    amplified = field.samples * math.sqrt(10 ** (gain_db / 10))
    noise_power = ase_power(
        gain_db, noise_figure_db, field.sample_rate, center_wavelength_nm
    )
    if noise_power > 0:
        rng = make_rng(seed)
        sigma = math.sqrt(noise_power / 2)
        amplified = amplified + sigma * (
            rng.standard_normal(len(field)) + 1j * rng.standard_normal(len(field))
        )
    return field.with_samples(amplified)


def propagate_link(
    field: Waveform,
    link: LinkConfig,
    wdm: WdmConfig,
    seed: int,
    workers: int = 1,
) -> Waveform:
    """Propagate through every span, each followed by a loss-matched EDFA.

    Args:
        field: Launched WDM field.
        link: Link parameters.
        wdm: Multiplex the field was built for.
        seed: Master ASE seed; each span gets an independent child seed.
        workers: FFT threads.

    Returns:
        The field after the last amplifier.

    Raises:
        ConfigurationError: If the field's sample rate does not match the
            WDM configuration.
        NumericOverflowError: If propagation diverges.
    """
    if not math.isclose(field.sample_rate, wdm.sample_rate):
        msg = f"field sampled at {field.sample_rate} GHz, expected {wdm.sample_rate}"
        raise ConfigurationError(msg)
    noise_figure = -math.inf if link.noiseless else link.noise_figure
    span_seeds = spawn_seeds(seed, link.num_spans)
    for index, span_seed in enumerate(span_seeds):
        field = ssfm_span(field, link, workers)
        field = edfa(
            field,
            link.span_loss_db,
            noise_figure,
            span_seed,
            center_wavelength_nm=link.center_wavelength,
        )
        logger.debug("span %d/%d done", index + 1, link.num_spans)
    return field


def effective_snr_db(
    received: np.ndarray, transmitted: np.ndarray
) -> tuple[float, complex]:
    """Effective SNR after a single complex least-squares scale.

    ``a = sum(Y X*) / sum(|X|^2)``, SNR = sum|aX|^2 / sum|Y - aX|^2. The scale
    absorbs gain and mean nonlinear phase rotation. Results above
    :data:`SNR_CAP_DB` (including the noiseless case) are capped.

    Returns:
        The SNR in dB and the fitted scale a.

    Raises:
        ConfigurationError: If the sequences differ in length.
        DegenerateInputError: If the transmitted sequence has no energy.
    """
    if received.shape != transmitted.shape:
        raise ConfigurationError("received and transmitted lengths differ")
    reference = float(np.vdot(transmitted, transmitted).real)
    if reference == 0:
        raise DegenerateInputError("transmitted symbols carry no energy")
    scale = complex(np.vdot(transmitted, received) / reference)
    error = float(np.sum(np.abs(received - scale * transmitted) ** 2))
    signal = abs(scale) ** 2 * reference
    if error == 0 or signal >= error * 10 ** (SNR_CAP_DB / 10):
        return SNR_CAP_DB, scale
    return 10 * math.log10(signal / error), scale


def rx_central_channel(
    field: Waveform,
    wdm: WdmConfig,
    link: LinkConfig,
    tx_central: SymbolSequence,
    *,
    guard_symbols: int = DEFAULT_GUARD_SYMBOLS,
    rrc_span_symbols: int = DEFAULT_RRC_SPAN_SYMBOLS,
    workers: int = 1,
) -> RxResult:
    """Recover the central channel and estimate its effective SNR.

    Ideal dispersion compensation, matched RRC filtering and downsampling at
    the integer sample offset with the largest correlation to the
    transmitted symbols, then the least-squares SNR estimate over the
    symbols left after discarding the guards at both ends.

    Raises:
        ConfigurationError: If the field length does not match the
            transmitted symbol count or the guards consume every symbol.
    """
    sps = wdm.samples_per_symbol
    transmitted = tx_central.symbols
    if len(field) != transmitted.size * sps:
        msg = f"field has {len(field)} samples, expected {transmitted.size * sps}"
        raise ConfigurationError(msg)
    if transmitted.size <= 2 * guard_symbols:
        raise ConfigurationError("guard symbols consume the whole sequence")
    compensated = dispersion_compensate(field, link)
    filtered = matched_filter(
        compensated, sps, wdm.rolloff, rrc_span_symbols, workers
    ).samples
    correlations = [
        abs(np.vdot(transmitted, filtered[offset::sps])) for offset in range(sps)
    ]
    offset = int(np.argmax(correlations))
    kept = slice(guard_symbols, transmitted.size - guard_symbols)
    recovered = filtered[offset::sps][kept]
    snr, scale = effective_snr_db(recovered, transmitted[kept])
    return RxResult(recovered, snr, scale, offset)


@dataclass(frozen=True, eq=False)
class Transmission:
    """One simulated run: the central channel's Tx symbols and Rx result."""

    central: SymbolSequence
    rx: RxResult


def simulate_transmission(
    alphabet: AmplitudeAlphabet,
    blocklength: int,
    seed: int,
    link: LinkConfig,
    wdm: WdmConfig,
    simulation: SimulationConfig,
    blocks_per_run: int = 0,
    *,
    ase_seed: int | None = None,
) -> Transmission:
    """Shape, multiplex, propagate and receive one WDM transmission.

    Every channel carries independent CCDM data with the same blocklength;
    channel and amplifier seeds are spawned from ``seed``.

    Args:
        alphabet: Amplitude alphabet.
        blocklength: CCDM blocklength n of every channel.
        seed: Master seed of the run.
        link: Link parameters.
        wdm: Multiplex parameters.
        simulation: Sequence length, guards and filter span.
        blocks_per_run: CCDM blocks per quadrature; 0 picks just enough
            blocks to cover ``simulation.num_symbols``.
        ase_seed: Amplifier noise seed; defaults to one spawned from
            ``seed``. Setting it leaves the transmitted data unchanged.

    Returns:
        The central channel's transmitted symbols and receiver result.

    Raises:
        ConfigurationError: If the blocks do not cover the symbol count.
    """
    num_symbols = simulation.num_symbols
    num_blocks = blocks_per_run or math.ceil(num_symbols / blocklength)
    if num_blocks * blocklength < num_symbols:
        msg = f"{num_blocks} blocks of n={blocklength} cover < {num_symbols} symbols"
        raise ConfigurationError(msg)
    workers = simulation.fft_workers
    *channel_seeds, spawned_ase_seed = spawn_seeds(seed, wdm.num_channels + 1)
    if ase_seed is None:
        ase_seed = spawned_ase_seed
    sequences = [
        generate_shaped_symbols(alphabet, blocklength, num_blocks, s).head(num_symbols)
        for s in channel_seeds
    ]
    waveforms = [
        set_launch_power(
            rrc_shape(
                sequence,
                wdm.samples_per_symbol,
                wdm.rolloff,
                simulation.rrc_span_symbols,
                symbol_rate=wdm.symbol_rate,
                workers=workers,
            ),
            wdm.launch_power_per_channel,
        )
        for sequence in sequences
    ]
    launched = build_wdm(waveforms, wdm.channel_spacing)
    received = propagate_link(launched, link, wdm, ase_seed, workers)
    central = sequences[wdm.central_index]
    rx = rx_central_channel(
        received,
        wdm,
        link,
        central,
        guard_symbols=simulation.guard_symbols,
        rrc_span_symbols=simulation.rrc_span_symbols,
        workers=workers,
    )
    logger.info(
        "n=%d seed=%d distance=%.0f km: effective SNR %.3f dB",
        blocklength,
        seed,
        link.distance_km,
        rx.effective_snr_db,
    )
    return Transmission(central, rx)
