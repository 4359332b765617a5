#!/usr/bin/env python3
"""
tests/unit/test_config_parser.py

Unit tests for ConfigParser and the resolved ExperimentConfig
"""

import math

import pytest

from eswap_sim.core import ConfigParser, ExperimentConfig, load_config
from eswap_sim.core.config_parser import (
    BudgetSpec,
    GridSpec,
    SpectroscopySpec,
    parse_angle,
    parse_angle_list,
    parse_bool,
    parse_name_list,
)
from eswap_sim.dynamics import SpamModel
from eswap_sim.exceptions import ConfigError


def _write(temp_dir, content, name="test.def"):
    def_file = temp_dir / name
    with open(def_file, "w") as f:
        f.write(content)
    return def_file


class TestValueParsing:
    """Test angle, list and boolean converters"""

    @pytest.mark.parametrize("text,expected", [
        ("0.785", 0.785),
        ("pi/4", math.pi / 4),
        ("3pi/8", 3 * math.pi / 8),
        ("3*pi/8", 3 * math.pi / 8),
        ("-pi", -math.pi),
        ("pi", math.pi),
        (" pi / 2 ", math.pi / 2),
    ])
    def test_parse_angle(self, text, expected):
        """Test numeric and pi-fraction angles"""
        assert parse_angle(text) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["", "tau", "pi/", "1/pi", "--1"])
    def test_parse_invalid_angle(self, text):
        """Test malformed angle expressions"""
        with pytest.raises(ValueError):
            parse_angle(text)

    def test_parse_angle_list(self):
        """Test comma separated angles"""
        assert parse_angle_list("0, pi/4, pi/2") == pytest.approx(
            (0.0, math.pi / 4, math.pi / 2)
        )
        with pytest.raises(ValueError, match="Empty"):
            parse_angle_list(" , ")

    def test_parse_name_list(self):
        """Test comma separated names with blanks removed"""
        assert parse_name_list("photon_loss, self_kerr,") == ("photon_loss", "self_kerr")

    def test_parse_bool(self):
        """Test configparser boolean words"""
        assert parse_bool("yes") is True
        assert parse_bool("Off") is False
        with pytest.raises(ValueError):
            parse_bool("maybe")


class TestConfigParser:
    """Test ConfigParser functionality"""

    def test_initialization_success(self, sample_def_file):
        """Test successful ConfigParser initialization"""
        parser = ConfigParser(str(sample_def_file))

        assert parser.def_file_path == sample_def_file.resolve()
        assert parser.config is not None
        assert parser.get_all_sections() == ["experiment", "noise", "spam", "grid", "budget"]

    def test_initialization_file_not_found(self):
        """Test ConfigParser initialization with non-existent file"""
        with pytest.raises(FileNotFoundError, match="Definition file not found"):
            ConfigParser("/nonexistent/path/test.def")

    def test_missing_required_sections(self, temp_dir):
        """Test a file without an [experiment] section"""
        def_file = _write(temp_dir, "[noise]\npreset = best\n")
        with pytest.raises(ConfigError, match="Missing required sections"):
            ConfigParser(str(def_file))

    def test_missing_name(self, temp_dir):
        """Test an [experiment] section without a name"""
        def_file = _write(temp_dir, "[experiment]\nencoding = fock\n")
        with pytest.raises(ConfigError, match="name"):
            ConfigParser(str(def_file))

    def test_unknown_section(self, temp_dir):
        """Test sections outside the schema"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\n\n[cluster]\nnodes = 2\n")
        with pytest.raises(ConfigError, match="Unknown section"):
            ConfigParser(str(def_file))

    def test_unknown_key(self, temp_dir):
        """Test keys outside the schema"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\ncolour = blue\n")
        with pytest.raises(ConfigError, match="Unknown keys"):
            ConfigParser(str(def_file))

    def test_invalid_value(self, temp_dir):
        """Test values that fail conversion"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\nshots_per_point = -3\n")
        parser = ConfigParser(str(def_file))
        with pytest.raises(ConfigError, match="Invalid value for \\[experiment\\]"):
            parser.get_experiment_params()

    def test_unknown_experiment_name(self, temp_dir):
        """Test experiment names outside the command set"""
        def_file = _write(temp_dir, "[experiment]\nname = teleport\n")
        with pytest.raises(ConfigError):
            load_config(str(def_file))

    def test_experiment_params(self, sample_def_file):
        """Test converted [experiment] values"""
        params = ConfigParser(str(sample_def_file)).get_experiment_params()

        assert params["name"] == "qpt"
        assert params["encoding"] == "fock"
        assert params["theta_list"] == pytest.approx((0.0, math.pi / 4, math.pi / 2))
        assert params["shots_per_point"] == 200
        assert params["seed"] == 7
        assert params["cutoff"] == 3

    def test_noise_units(self, sample_def_file):
        """Test microsecond and Hz keys become seconds and rad/s"""
        noise = ConfigParser(str(sample_def_file)).get_noise_model()

        assert noise.t1_alice == pytest.approx(250e-6)
        assert noise.kerr_bob == pytest.approx(2 * math.pi * 4000)
        assert noise.t1_bob == pytest.approx(325e-6)

    def test_noise_disabled(self, temp_dir):
        """Test [noise] enabled = false gives the noiseless model"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\n\n[noise]\nenabled = false\n")
        noise = ConfigParser(str(def_file)).get_noise_model()
        assert not noise.is_dissipative
        assert noise.kerr_alice == 0.0

    def test_noise_invalid_combination(self, temp_dir):
        """Test T2 above 2 T1 is reported as a config error"""
        content = "[experiment]\nname = qpt\n\n[noise]\nt1_alice_us = 100\nt2_alice_us = 300\n"
        parser = ConfigParser(str(_write(temp_dir, content)))
        with pytest.raises(ConfigError, match="noise"):
            parser.get_noise_model()

    def test_spam_disabled(self, temp_dir):
        """Test [spam] enabled = false"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\n\n[spam]\nenabled = no\n")
        assert ConfigParser(str(def_file)).get_spam_model() == SpamModel.none()

    def test_spam_out_of_range(self, temp_dir):
        """Test SPAM probabilities above 0.5"""
        def_file = _write(temp_dir, "[experiment]\nname = qpt\n\n[spam]\nprep_loss = 0.9\n")
        with pytest.raises(ConfigError, match="spam"):
            ConfigParser(str(def_file)).get_spam_model()

    def test_budget_spec(self, sample_def_file):
        """Test [budget] times and mechanisms"""
        budget = ConfigParser(str(sample_def_file)).get_budget_spec()

        assert budget.exposure_time == pytest.approx(3.9e-6)
        assert budget.mechanisms == ("photon_loss", "self_kerr", "all")
        assert budget.theta_c == pytest.approx(math.pi / 4)

    def test_spectroscopy_units(self, temp_dir):
        """Test MHz, microsecond and kHz scaling in [spectroscopy]"""
        content = (
            "[experiment]\nname = fredkin\n\n[spectroscopy]\n"
            "detuning_min_mhz = -1\ndetuning_max_mhz = 2\ndetuning_points = 31\n"
            "duration_max_us = 8\ncoupling_khz = 40\n"
        )
        spec = ConfigParser(str(_write(temp_dir, content))).get_spectroscopy_spec()

        assert spec.detuning_min == pytest.approx(-1e6)
        assert spec.detuning_max == pytest.approx(2e6)
        assert spec.duration_max == pytest.approx(8e-6)
        assert spec.coupling == pytest.approx(2 * math.pi * 40e3)
        assert len(spec.detunings()) == 31

    def test_convention_key(self, temp_dir):
        """Test [experiment] convention selects the conditional projection"""
        content = "[experiment]\nname = fredkin\nconvention = x\n"
        assert load_config(str(_write(temp_dir, content))).convention == "x"
        default = "[experiment]\nname = fredkin\n"
        assert load_config(str(_write(temp_dir, default, "d.def"))).convention == "y"

    def test_convention_invalid(self, temp_dir):
        """Test conventions other than y and x"""
        content = "[experiment]\nname = fredkin\nconvention = z\n"
        with pytest.raises(ConfigError, match="convention"):
            ConfigParser(str(_write(temp_dir, content))).get_experiment_params()

    def test_preset_reaches_config(self, temp_dir):
        """Test the [noise] preset is kept for the preparation ancillas"""
        content = "[experiment]\nname = error_budget\n\n[noise]\npreset = worst\n"
        config = load_config(str(_write(temp_dir, content)))
        assert config.preset == "worst"
        assert config.to_dict()["preset"] == "worst"

    def test_to_experiment_config(self, sample_def_file):
        """Test every section resolves into one ExperimentConfig"""
        config = load_config(str(sample_def_file))

        assert isinstance(config, ExperimentConfig)
        assert config.grid.points == 11
        assert config.spam.readout_error_a == pytest.approx(0.01)
        assert config.spectroscopy == SpectroscopySpec()


class TestExperimentConfig:
    """Test ExperimentConfig validation, overrides and hashing"""

    def test_unknown_mode(self):
        """Test modes other than exact and sampled"""
        with pytest.raises(ConfigError, match="mode"):
            ExperimentConfig("qpt", mode="fast")

    def test_unknown_convention_and_preset(self):
        """Test direct construction with unknown convention or preset"""
        with pytest.raises(ConfigError, match="convention"):
            ExperimentConfig("fredkin", convention="z")
        with pytest.raises(ConfigError, match="preset"):
            ExperimentConfig("error_budget", preset="typical")

    def test_workers(self):
        """Test worker counts below one"""
        with pytest.raises(ConfigError, match="workers"):
            ExperimentConfig("qpt", workers=0)

    def test_grid_validation(self):
        """Test grid radius and point counts"""
        with pytest.raises(ConfigError, match="radius"):
            GridSpec(radius=0.0)
        with pytest.raises(ConfigError, match="2 points"):
            GridSpec(points=1)

    def test_budget_mechanisms(self):
        """Test unknown budget mechanisms"""
        with pytest.raises(ConfigError, match="Unknown budget mechanisms"):
            BudgetSpec(mechanisms=("photon_loss", "gremlins"))

    def test_overrides_ignore_none(self):
        """Test command-line overrides skip unset values"""
        config = ExperimentConfig("qpt", seed=1)
        updated = config.with_overrides(seed=None, mode="sampled")
        assert updated.seed == 1
        assert updated.mode == "sampled"
        assert config.with_overrides(seed=None) is config

    def test_hash_ignores_output_location(self):
        """Test the hash covers results-affecting values only"""
        base = ExperimentConfig("qpt", seed=1)
        moved = base.with_overrides(output_dir="/tmp/elsewhere", workers=4)
        reseeded = base.with_overrides(seed=2)
        assert base.config_hash() == moved.config_hash()
        assert base.config_hash() != reseeded.config_hash()
        assert len(base.config_hash()) == 64

    def test_encoding_params(self):
        """Test alpha is passed to the encoding only when set"""
        assert ExperimentConfig("coherent_sweep").encoding_params() == {}
        assert ExperimentConfig("coherent_sweep", alpha=1.2).encoding_params() == {
            "alpha": 1.2
        }
