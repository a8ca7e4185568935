"""Shared test fixtures for eedi-lab."""

from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING

import numpy as np
import pytest

from eedi_lab.models.channel import LinkConfig, SimulationConfig, WdmConfig
from eedi_lab.models.experiment import ExperimentRecord
from eedi_lab.services.metrics import eedi_from_energies, symbol_energies
from eedi_lab.services.shaping import generate_shaped_symbols, reference_alphabet

if TYPE_CHECKING:
    from collections.abc import Sequence

    from eedi_lab.models.shaping import AmplitudeAlphabet

RecordFactory = Callable[..., list[ExperimentRecord]]


@pytest.fixture()
def alphabet() -> AmplitudeAlphabet:
    """The [0.4, 0.3, 0.2, 0.1] distribution over amplitudes {1, 3, 5, 7}."""
    return reference_alphabet()


@pytest.fixture()
def noiseless_link() -> LinkConfig:
    """One 80 km span with ideal, noise-free amplification."""
    return LinkConfig(num_spans=1, ase_noise=False, step_size=1.0)


@pytest.fixture()
def single_channel() -> WdmConfig:
    """One 32 GBd channel at 0 dBm, 4 samples per symbol."""
    return WdmConfig(
        launch_power_per_channel=0.0, num_channels=1, samples_per_symbol=4
    )


@pytest.fixture()
def short_simulation() -> SimulationConfig:
    """Short runs with a long RRC so truncation ISI stays below -60 dB."""
    return SimulationConfig(num_symbols=2048, guard_symbols=64, rrc_span_symbols=256)


@pytest.fixture()
def make_planted_records() -> RecordFactory:
    """Build records whose SNR is an exact affine function of EEDI at ``lambda0``.

    Energies come from real CCDM sequences; each record's SNR is
    ``20 - 0.5 * EEDI(lambda0)``, so the per-blocklength means are perfectly
    correlated at ``lambda0`` and only there.
    """

    def factory(
        lambda0: float = 0.9,
        blocklengths: Sequence[int] = (10, 50, 200, 1000),
        seeds: Sequence[int] = (1, 2),
        num_symbols: int = 4000,
        distance_km: float = 320.0,
        with_energies: bool = True,
    ) -> list[ExperimentRecord]:
        records = []
        for n in blocklengths:
            for seed in seeds:
                sequence = generate_shaped_symbols(
                    reference_alphabet(), n, -(-num_symbols // n), seed
                ).head(num_symbols)
                energies = symbol_energies(sequence)
                planted = eedi_from_energies(energies, lambda0).value
                records.append(
                    ExperimentRecord(
                        blocklength=n,
                        distance_km=distance_km,
                        launch_power_dbm=-2.0,
                        seed=seed,
                        effective_snr_db=20.0 - 0.5 * planted,
                        eedi={lambda0: planted},
                        edi={},
                        kurtosis=1.5 + 1e-3 * n,
                        energies=np.array(energies.values) if with_energies else None,
                    )
                )
        return records

    return factory
