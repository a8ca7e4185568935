"""Experiment configuration loaded from INI-style files.

Each section of a config file maps onto a frozen dataclass; link, WDM and
simulation sections reuse the channel models directly. Values are coerced
from text by the dataclass field types and validated on construction, so
every failure names the dotted path of the offending field.
"""

from __future__ import annotations

import configparser
import dataclasses
import logging
import math
import os
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

from eedi_lab.errors import ConfigParseError, ConfigValidationError, UnknownKeyError
from eedi_lab.models.channel import LinkConfig, SimulationConfig, WdmConfig
from eedi_lab.models.shaping import AmplitudeAlphabet
from eedi_lab.services.analysis import (
    DEFAULT_GRID_HI,
    DEFAULT_GRID_LO,
    DEFAULT_GRID_STEP,
    DEFAULT_RP_THRESHOLD,
)
from eedi_lab.services.metrics import DEFAULT_EPSILON, DEFAULT_WEIGHT_THRESHOLD
from eedi_lab.services.shaping import REFERENCE_LEVELS, REFERENCE_PROBABILITIES

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV_VAR: Final[str] = "EEDI_LAB_OUTPUT_DIR"
WORKERS_ENV_VAR: Final[str] = "EEDI_LAB_WORKERS"
DEFAULT_OUTPUT_DIR: Final[str] = "results"
DEFAULT_LAMBDAS: Final[tuple[float, ...]] = (0.9014, 0.9921)
DEFAULT_EDI_WINDOWS: Final[tuple[int, ...]] = (31,)
_MAX_SEED: Final[int] = 2**64


@dataclass(frozen=True)
class ShapingConfig:
    """Shaped source parameters.

    Attributes:
        blocklengths: CCDM blocklengths to run.
        seeds: Master seeds; one run per blocklength and seed.
        levels: Amplitude levels of the alphabet.
        probabilities: Target probability of each level.
        blocks_per_run: CCDM blocks per quadrature; 0 derives it from
            ``simulation.num_symbols``.
    """

    blocklengths: tuple[int, ...]
    seeds: tuple[int, ...]
    levels: tuple[float, ...] = REFERENCE_LEVELS
    probabilities: tuple[float, ...] = REFERENCE_PROBABILITIES
    blocks_per_run: int = 0

    def __post_init__(self) -> None:
        """Validate the section.

        Raises:
            ConfigValidationError: Naming the first invalid ``shaping.*`` field.
        """
        if not self.blocklengths or min(self.blocklengths) < 1:
            raise ConfigValidationError(
                "shaping.blocklengths", "must be a non-empty list of positive integers"
            )
        if not self.seeds or not all(0 <= s < _MAX_SEED for s in self.seeds):
            raise ConfigValidationError(
                "shaping.seeds", "must be a non-empty list of 64-bit unsigned integers"
            )
        if self.blocks_per_run < 0:
            raise ConfigValidationError("shaping.blocks_per_run", "must be >= 0")
        try:
            self.alphabet  # noqa: B018
        except ConfigValidationError as exc:
            path = exc.field_path.replace("alphabet.", "shaping.")
            raise ConfigValidationError(path, exc.detail) from exc

    @property
    def alphabet(self) -> AmplitudeAlphabet:
        """The amplitude alphabet these levels and probabilities describe."""
        return AmplitudeAlphabet(self.levels, self.probabilities)


@dataclass(frozen=True)
class MetricsConfig:
    """Metric parameters recorded for every run.

    Attributes:
        lambdas: Forgetting factors at which EEDI is recorded.
        epsilon: Truncation weight of the EEDI recursion.
        edi_windows: Odd EDI window lengths to record.
        weight_threshold: Weight defining the effective window count.
    """

    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    epsilon: float = DEFAULT_EPSILON
    edi_windows: tuple[int, ...] = DEFAULT_EDI_WINDOWS
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD

    def __post_init__(self) -> None:
        """Validate the section.

        Raises:
            ConfigValidationError: Naming the first invalid ``metrics.*`` field.
        """
        if not all(0 <= lam <= 1 for lam in self.lambdas):
            raise ConfigValidationError("metrics.lambdas", "must lie in [0, 1]")
        if not 0 < self.epsilon < 1:
            raise ConfigValidationError("metrics.epsilon", "must lie in (0, 1)")
        if not all(w >= 1 and w % 2 == 1 for w in self.edi_windows):
            raise ConfigValidationError(
                "metrics.edi_windows", "must be odd positive integers"
            )
        if not 0 < self.weight_threshold < 1:
            raise ConfigValidationError(
                "metrics.weight_threshold", "must lie in (0, 1)"
            )


@dataclass(frozen=True)
class AnalysisConfig:
    """Forgetting-factor search parameters.

    Attributes:
        grid_lo: Smallest forgetting factor searched.
        grid_hi: Exclusive upper bound of the search grid.
        grid_step: Grid step.
        rp_threshold: |r_p| a distance must reach to count as well predicted.
        distance_spans: Span counts for the distance study; empty means only
            ``link.num_spans``.
        distance_launch_powers: Launch power per channel in dBm for each entry
            of ``distance_spans``, in the same order; empty means
            ``wdm.launch_power_per_channel`` at every distance.
    """

    grid_lo: float = DEFAULT_GRID_LO
    grid_hi: float = DEFAULT_GRID_HI
    grid_step: float = DEFAULT_GRID_STEP
    rp_threshold: float = DEFAULT_RP_THRESHOLD
    distance_spans: tuple[int, ...] = ()
    distance_launch_powers: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        """Validate the section.

        Raises:
            ConfigValidationError: Naming the first invalid ``analysis.*`` field.
        """
        if not 0 <= self.grid_lo < 1:
            raise ConfigValidationError("analysis.grid_lo", "must lie in [0, 1)")
        if not self.grid_lo < self.grid_hi <= 1:
            raise ConfigValidationError(
                "analysis.grid_hi", "must lie in (grid_lo, 1]"
            )
        if not 0 < self.grid_step < self.grid_hi - self.grid_lo:
            raise ConfigValidationError(
                "analysis.grid_step", "must be positive and smaller than the grid"
            )
        if not 0 <= self.rp_threshold <= 1:
            raise ConfigValidationError("analysis.rp_threshold", "must lie in [0, 1]")
        if any(spans < 1 for spans in self.distance_spans):
            raise ConfigValidationError(
                "analysis.distance_spans", "span counts must be >= 1"
            )
        if len(set(self.distance_spans)) != len(self.distance_spans):
            raise ConfigValidationError(
                "analysis.distance_spans", "span counts must be distinct"
            )
        powers = self.distance_launch_powers
        if powers and len(powers) != len(self.distance_spans):
            raise ConfigValidationError(
                "analysis.distance_launch_powers",
                "needs one power per entry of analysis.distance_spans",
            )
        if not all(math.isfinite(p) for p in powers):
            raise ConfigValidationError(
                "analysis.distance_launch_powers", "powers must be finite"
            )

    def span_counts(self, link: LinkConfig) -> tuple[int, ...]:
        """Span counts to sweep, ascending."""
        return tuple(spans for spans, _ in self.distance_plan(link, 0.0))

    def distance_plan(
        self, link: LinkConfig, launch_power_dbm: float
    ) -> tuple[tuple[int, float], ...]:
        """(span count, launch power in dBm) pairs to sweep, ascending by spans.

        Args:
            link: Link whose span count is used when no distances are set.
            launch_power_dbm: Power used where no per-distance power is set.
        """
        if not self.distance_spans:
            return ((link.num_spans, launch_power_dbm),)
        powers = self.distance_launch_powers or (launch_power_dbm,) * len(
            self.distance_spans
        )
        return tuple(sorted(zip(self.distance_spans, powers, strict=True)))


@dataclass(frozen=True)
class OutputConfig:
    """Where and what results are written.

    Attributes:
        directory: Output directory.
        save_energies: Write the Tx-side energy series (``energies.npz``),
            which ``optimize-lambda`` and ``figures`` need.
        save_received_symbols: Write received symbols from ``simulate``.
    """

    directory: str = DEFAULT_OUTPUT_DIR
    save_energies: bool = True
    save_received_symbols: bool = False

    def __post_init__(self) -> None:
        """Validate the section.

        Raises:
            ConfigValidationError: If the directory is empty.
        """
        if not self.directory.strip():
            raise ConfigValidationError("output.directory", "must not be empty")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, validated experiment configuration."""

    shaping: ShapingConfig
    link: LinkConfig
    wdm: WdmConfig
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_cfg_text(self) -> str:
        """Render the effective configuration; :func:`parse_config` reads it back."""
        parser = _new_parser()
        for name, section_cls in SECTIONS.items():
            section = getattr(self, name)
            parser[name] = {
                f.name: _format_value(getattr(section, f.name))
                for f in dataclasses.fields(section_cls)
            }
        lines: list[str] = []
        for name in parser.sections():
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {value}" for key, value in parser[name].items())
            lines.append("")
        return "\n".join(lines)


SECTIONS: Final[dict[str, type[Any]]] = {
    "shaping": ShapingConfig,
    "link": LinkConfig,
    "wdm": WdmConfig,
    "simulation": SimulationConfig,
    "metrics": MetricsConfig,
    "analysis": AnalysisConfig,
    "output": OutputConfig,
}


def _new_parser() -> configparser.ConfigParser:
    """Config parser without interpolation that keeps key case."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    return parser


def _format_value(value: object) -> str:
    """Render a field value as config text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_scalar(raw: str, kind: type, path: str) -> object:
    """Coerce one config value to ``kind``, naming ``path`` on failure."""
    text = raw.strip()
    try:
        if kind is bool:
            states = configparser.ConfigParser.BOOLEAN_STATES
            if text.lower() not in states:
                raise ValueError(text)
            return states[text.lower()]
        if kind is int:
            return int(text)
        if kind is float:
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
            return value
    except ValueError as exc:
        msg = f"cannot read {text!r} as {kind.__name__}"
        raise ConfigValidationError(path, msg) from exc
    return text


def _parse_value(raw: str, annotation: object, path: str) -> object:
    """Coerce a config value by its field annotation; tuples are comma lists."""
    if typing.get_origin(annotation) is tuple:
        item_type = typing.get_args(annotation)[0]
        items = [item for item in raw.replace("\n", ",").split(",") if item.strip()]
        return tuple(_parse_scalar(item, item_type, path) for item in items)
    return _parse_scalar(raw, annotation, path)  # type: ignore[arg-type]


def _build_section(name: str, values: Mapping[str, str]) -> Any:
    """Build the dataclass of section ``name`` from its raw values."""
    section_cls = SECTIONS[name]
    hints = typing.get_type_hints(section_cls)
    known = {f.name: f for f in dataclasses.fields(section_cls)}
    kwargs: dict[str, object] = {}
    for key, raw in values.items():
        if key not in known:
            msg = f"unknown key {name}.{key}"
            raise UnknownKeyError(msg)
        kwargs[key] = _parse_value(raw, hints[key], f"{name}.{key}")
    for key, spec in known.items():
        required = (
            spec.default is dataclasses.MISSING
            and spec.default_factory is dataclasses.MISSING
        )
        if required and key not in kwargs:
            raise ConfigValidationError(f"{name}.{key}", "required field is missing")
    return section_cls(**kwargs)


def parse_overrides(overrides: Iterable[str]) -> list[tuple[str, str, str]]:
    """Split ``section.key=value`` overrides into (section, key, value).

    Raises:
        ConfigParseError: If an override is not of that form.
    """
    parsed = []
    for override in overrides:
        path, sep, value = override.partition("=")
        section, dot, key = path.strip().partition(".")
        if not sep or not dot or not section or not key:
            msg = f"override {override!r} is not of the form section.key=value"
            raise ConfigParseError(msg)
        parsed.append((section, key, value.strip()))
    return parsed


def parse_config(
    text: str,
    overrides: Iterable[str] = (),
    *,
    source: str = "<string>",
    env: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Parse and validate configuration text.

    Args:
        text: INI-style configuration.
        overrides: ``section.key=value`` strings applied before validation.
        source: Name used in parse error messages.
        env: Environment providing defaults; ``os.environ`` when omitted.

    Returns:
        The validated configuration with defaults filled in.

    Raises:
        ConfigParseError: If the text or an override is malformed.
        UnknownKeyError: If a section or key does not exist.
        ConfigValidationError: If a value is missing or invalid.
    """
    parser = _new_parser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        msg = f"cannot parse {source}: {exc.message}"
        raise ConfigParseError(msg) from exc
    for section, key, value in parse_overrides(overrides):
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    for section in parser.sections():
        if section not in SECTIONS:
            msg = f"unknown section [{section}]"
            raise UnknownKeyError(msg)
    environment = os.environ if env is None else env
    if not parser.has_option("output", "directory") and environment.get(
        OUTPUT_DIR_ENV_VAR
    ):
        if not parser.has_section("output"):
            parser.add_section("output")
        parser.set("output", "directory", environment[OUTPUT_DIR_ENV_VAR])
    sections = {
        name: _build_section(name, parser[name] if parser.has_section(name) else {})
        for name in SECTIONS
    }
    config = ExperimentConfig(**sections)
    logger.debug("loaded configuration from %s", source)
    return config


def load_config(
    path: str | Path,
    overrides: Iterable[str] = (),
    *,
    env: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Load a configuration file, or a bundled one by name.

    Args:
        path: File path, or the stem of a bundled config such as
            ``desk_scale``.
        overrides: ``section.key=value`` strings applied before validation.
        env: Environment providing defaults; ``os.environ`` when omitted.

    Returns:
        The validated configuration.

    Raises:
        ConfigParseError: If the file cannot be read or parsed.
        UnknownKeyError: If a section or key does not exist.
        ConfigValidationError: If a value is missing or invalid.
    """
    resolved = resolve_config_path(path)
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as exc:
        msg = f"cannot read config {resolved}: {exc.strerror}"
        raise ConfigParseError(msg) from exc
    return parse_config(text, overrides, source=str(resolved), env=env)


def resolve_config_path(path: str | Path) -> Path:
    """Map a bundled config name to its file; other paths pass through."""
    candidate = Path(path)
    if candidate.exists() or candidate.suffix:
        return candidate
    bundled = resources.files("eedi_lab.configs").joinpath(f"{candidate.name}.cfg")
    return Path(str(bundled))


def default_workers(env: Mapping[str, str] | None = None) -> int:
    """Worker count from ``EEDI_LAB_WORKERS``, 1 when unset.

    Raises:
        ConfigValidationError: If the variable is not a positive integer.
    """
    environment = os.environ if env is None else env
    raw = environment.get(WORKERS_ENV_VAR, "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        msg = f"must be an integer, got {raw!r}"
        raise ConfigValidationError(WORKERS_ENV_VAR, msg) from exc
    if workers < 1:
        raise ConfigValidationError(WORKERS_ENV_VAR, "must be >= 1")
    return workers
