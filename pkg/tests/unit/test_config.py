"""Tests for eedi_lab.config module."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from eedi_lab.config import (
    DEFAULT_LAMBDAS,
    OUTPUT_DIR_ENV_VAR,
    WORKERS_ENV_VAR,
    AnalysisConfig,
    MetricsConfig,
    ShapingConfig,
    default_workers,
    load_config,
    parse_config,
    parse_overrides,
)
from eedi_lab.errors import (
    EXIT_VALIDATION,
    ConfigParseError,
    ConfigValidationError,
    UnknownKeyError,
)
from eedi_lab.models.channel import LinkConfig

if TYPE_CHECKING:
    from pathlib import Path

MINIMAL = """
[shaping]
blocklengths = 10, 100, 1000
seeds = 1, 2

[link]
num_spans = 2

[wdm]
launch_power_per_channel = -2.0
"""


class TestBundledConfigs:
    """Tests for the configuration files shipped with the package."""

    def test_paper_full_scale(self) -> None:
        """Test the full-scale setup: 5 channels over 4 x 80 km."""
        config = load_config("paper_full_scale", env={})
        assert config.link.distance_km == 320.0
        assert config.wdm.num_channels == 5
        assert config.wdm.launch_power_per_channel == -2.0
        assert config.simulation.num_symbols == 2**16
        assert len(config.shaping.blocklengths) == 10
        assert len(config.shaping.seeds) == 10
        assert config.metrics.lambdas == DEFAULT_LAMBDAS
        assert config.analysis.distance_plan(config.link, -2.0) == (
            (1, -1.5),
            (4, -2.0),
            (20, -3.0),
        )

    def test_desk_scale(self) -> None:
        """Test the reduced setup loads and keeps the metric defaults."""
        config = load_config("desk_scale", env={})
        assert config.wdm.num_channels == 3
        assert config.shaping.blocklengths == (10, 50, 100, 500, 1000, 5000)
        assert config.metrics.edi_windows == (31,)
        assert config.analysis.grid_step == 0.0001

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test an unreadable path raises a parse error."""
        with pytest.raises(ConfigParseError, match="cannot read"):
            load_config(tmp_path / "absent.cfg", env={})


class TestParseConfig:
    """Tests for parsing, defaults and validation."""

    def test_defaults_filled_in(self) -> None:
        """Test omitted sections and keys take their defaults."""
        config = parse_config(MINIMAL, env={})
        assert config.shaping.blocklengths == (10, 100, 1000)
        assert config.link.span_length == 80.0
        assert config.link.step_size == 0.1
        assert config.wdm.rolloff == 0.1
        assert config.metrics == MetricsConfig()
        assert config.analysis == AnalysisConfig()
        assert config.output.directory == "results"

    def test_round_trip(self) -> None:
        """Test the rendered effective config parses back to the same values."""
        config = parse_config(
            MINIMAL, ["link.noise_figure=-inf", "metrics.lambdas=0.9, 0.95"], env={}
        )
        assert parse_config(config.to_cfg_text(), env={}) == config

    def test_overrides_win(self) -> None:
        """Test section.key=value overrides replace file values."""
        config = parse_config(
            MINIMAL,
            ["link.num_spans=8", "wdm.num_channels=1", "output.save_energies=no"],
            env={},
        )
        assert config.link.distance_km == 640.0
        assert config.wdm.num_channels == 1
        assert config.output.save_energies is False

    def test_env_sets_output_directory(self) -> None:
        """Test the environment supplies the output directory."""
        config = parse_config(MINIMAL, env={OUTPUT_DIR_ENV_VAR: "/tmp/runs"})
        assert config.output.directory == "/tmp/runs"

    def test_file_beats_env(self) -> None:
        """Test an explicit directory is not replaced by the environment."""
        text = MINIMAL + "\n[output]\ndirectory = mine\n"
        config = parse_config(text, env={OUTPUT_DIR_ENV_VAR: "/tmp/runs"})
        assert config.output.directory == "mine"

    def test_missing_required_field(self) -> None:
        """Test a missing required key names its dotted path."""
        with pytest.raises(ConfigValidationError) as excinfo:
            parse_config(MINIMAL.replace("num_spans = 2", ""), env={})
        assert excinfo.value.field_path == "link.num_spans"
        assert excinfo.value.exit_status == EXIT_VALIDATION

    def test_unknown_key(self) -> None:
        """Test misspelled keys are rejected."""
        with pytest.raises(UnknownKeyError, match="link.num_span"):
            parse_config(MINIMAL, ["link.num_span=3"], env={})

    def test_unknown_section(self) -> None:
        """Test unknown sections are rejected."""
        with pytest.raises(UnknownKeyError, match="receiver"):
            parse_config(MINIMAL + "\n[receiver]\nx = 1\n", env={})

    def test_bad_value(self) -> None:
        """Test a value of the wrong type names its field."""
        with pytest.raises(ConfigValidationError, match="wdm.num_channels"):
            parse_config(MINIMAL, ["wdm.num_channels=three"], env={})

    def test_invalid_value(self) -> None:
        """Test model validation failures surface with the field path."""
        with pytest.raises(ConfigValidationError) as excinfo:
            parse_config(MINIMAL, ["wdm.rolloff=1.5"], env={})
        assert excinfo.value.field_path == "wdm.rolloff"

    def test_malformed_text(self) -> None:
        """Test text without a section header is a parse error."""
        with pytest.raises(ConfigParseError):
            parse_config("num_spans = 2\n", env={})


class TestParseOverrides:
    """Tests for override strings."""

    def test_split(self) -> None:
        """Test section, key and value are separated and stripped."""
        assert parse_overrides(["link.num_spans = 4"]) == [("link", "num_spans", "4")]

    @pytest.mark.parametrize("override", ["num_spans=4", "link.num_spans", "=4"])
    def test_malformed(self, override: str) -> None:
        """Test overrides without a dotted key or value separator are rejected."""
        with pytest.raises(ConfigParseError):
            parse_overrides([override])


class TestSections:
    """Tests for section validation."""

    def test_alphabet_errors_name_shaping_fields(self) -> None:
        """Test probabilities that do not sum to one point at shaping.*."""
        with pytest.raises(ConfigValidationError) as excinfo:
            ShapingConfig((10,), (1,), probabilities=(0.5, 0.5, 0.5, 0.5))
        assert excinfo.value.field_path == "shaping.probabilities"

    def test_even_window_rejected(self) -> None:
        """Test EDI windows must be odd."""
        with pytest.raises(ConfigValidationError, match="metrics.edi_windows"):
            MetricsConfig(edi_windows=(30,))

    def test_span_counts(self) -> None:
        """Test the distance study falls back to the link's span count."""
        link = LinkConfig(num_spans=4)
        assert AnalysisConfig().span_counts(link) == (4,)
        assert AnalysisConfig(distance_spans=(8, 1)).span_counts(link) == (1, 8)

    def test_distance_plan_pairs_powers(self) -> None:
        """Test each span count keeps its own launch power after sorting."""
        link = LinkConfig(num_spans=4)
        config = AnalysisConfig(
            distance_spans=(20, 1), distance_launch_powers=(-3.0, -1.5)
        )
        assert config.distance_plan(link, -2.0) == ((1, -1.5), (20, -3.0))
        assert config.span_counts(link) == (1, 20)

    def test_distance_plan_defaults_to_wdm_power(self) -> None:
        """Test a study without its own powers reuses the multiplex power."""
        link = LinkConfig(num_spans=4)
        assert AnalysisConfig().distance_plan(link, -2.0) == ((4, -2.0),)
        plan = AnalysisConfig(distance_spans=(6, 2)).distance_plan(link, 1.0)
        assert plan == ((2, 1.0), (6, 1.0))

    def test_launch_power_count_mismatch(self) -> None:
        """Test one launch power is required per span count."""
        with pytest.raises(ConfigValidationError) as excinfo:
            AnalysisConfig(distance_spans=(1, 4), distance_launch_powers=(-2.0,))
        assert excinfo.value.field_path == "analysis.distance_launch_powers"

    def test_non_finite_launch_power(self) -> None:
        """Test NaN launch powers are rejected."""
        with pytest.raises(ConfigValidationError, match="finite"):
            AnalysisConfig(
                distance_spans=(1, 4), distance_launch_powers=(-2.0, float("nan"))
            )

    def test_launch_powers_without_spans(self) -> None:
        """Test powers given without span counts are rejected."""
        with pytest.raises(ConfigValidationError):
            AnalysisConfig(distance_launch_powers=(-2.0,))

    def test_duplicate_spans_rejected(self) -> None:
        """Test repeated span counts are rejected."""
        with pytest.raises(ConfigValidationError, match="distinct"):
            AnalysisConfig(distance_spans=(2, 2))

    def test_frozen(self) -> None:
        """Test sections are immutable."""
        config = MetricsConfig()
        with pytest.raises(AttributeError, match="cannot assign"):
            config.epsilon = 0.1  # type: ignore[misc]


class TestDefaultWorkers:
    """Tests for the worker count from the environment."""

    def test_unset(self) -> None:
        """Test one worker when the variable is unset."""
        assert default_workers({}) == 1

    def test_set(self) -> None:
        """Test the variable is read as an integer."""
        assert default_workers({WORKERS_ENV_VAR: "6"}) == 6

    @pytest.mark.parametrize("raw", ["zero", "0"])
    def test_invalid(self, raw: str) -> None:
        """Test non-integers and values below one are rejected."""
        with pytest.raises(ConfigValidationError):
            default_workers({WORKERS_ENV_VAR: raw})
