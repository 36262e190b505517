"""Tests for run configuration loading."""

from pathlib import Path

import pytest

from vnn.activation import ActivationMode
from vnn.basis import BasisKind
from vnn.config import RunConfig, config_from_mapping, load_config, parse_key_values
from vnn.errors import ConfigError
from vnn.loss import LossKind
from vnn.network import OutputScaling

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"


class TestParseKeyValues:
    """Tests for the key = value format."""

    def test_comments_and_blanks(self):
        """Test comments and blank lines are skipped."""
        text = "# header\n\nlayers = 2,4,1  # widths\nbasis=polynomial\n"
        assert parse_key_values(text) == {"layers": "2,4,1", "basis": "polynomial"}

    def test_missing_equals(self):
        """Test lines without '=' name their line."""
        with pytest.raises(ConfigError, match="line 2"):
            parse_key_values("M = 4\nlayers 2,4,1\n")

    def test_duplicate_key(self):
        """Test repeated keys are rejected."""
        with pytest.raises(ConfigError, match="duplicate key 'M'"):
            parse_key_values("M = 4\nM = 5\n")


class TestRunConfig:
    """Tests for validation and derived settings."""

    def test_defaults(self):
        """Test an empty mapping gives the defaults."""
        config = config_from_mapping({})
        assert config.layers == [2, 4, 1]
        assert config.basis is BasisKind.FOURIER and config.m == 4
        assert config.mode is ActivationMode.LAYER
        assert config.output is OutputScaling.IDENTITY and config.loss is LossKind.MSE
        assert config.epochs == 5000 and config.seed == 42

    def test_string_values_coerced(self):
        """Test the text format's strings become typed values."""
        config = config_from_mapping(
            {"layers": "3,5,2", "M": "6", "omega": "0.5", "shuffle": "false", "mode": "neuron"}
        )
        assert config.layers == [3, 5, 2]
        assert config.m == 6 and config.omega == 0.5
        assert config.shuffle is False
        assert config.mode is ActivationMode.NEURON

    @pytest.mark.parametrize(
        "values",
        [
            {"layers": "2,1"},
            {"layers": "2,0,1"},
            {"layers": "2,x,1"},
            {"loss": "cross_entropy"},
            {"basis": "classic", "M": 5},
            {"freeze_alpha": "2"},
            {"omega": 0},
            {"lr_weights": 0},
            {"basis": "chebyshev"},
            {"learning_rate": 0.1},
        ],
    )
    def test_invalid(self, values):
        """Test invalid settings raise ConfigError."""
        with pytest.raises(ConfigError, match="invalid config"):
            config_from_mapping(values)

    def test_freeze_alpha(self):
        """Test 1-based freeze indices map to 0-based layers."""
        config = RunConfig(layers=[2, 3, 3, 3, 1], freeze_alpha="3,1")
        assert config.frozen_layers == [0, 2]
        assert RunConfig(layers=[2, 3, 3, 1], freeze_alpha="all").frozen_layers == [0, 1]

    def test_build_network(self):
        """Test the built network follows the configuration."""
        config = RunConfig(
            layers=[3, 5, 2],
            basis="classic",
            M=4,
            mode="neuron",
            output="softmax",
            loss="cross_entropy",
            freeze_alpha="all",
            variational_output=True,
            seed=3,
        )
        net = config.build_network()
        assert net.widths == [3, 5, 2]
        assert net.hidden_layers[0].activation.mode is ActivationMode.NEURON
        assert not net.hidden_layers[0].trainable_alpha
        assert not net.output_layer.trainable_alpha
        assert net.output_layer.activation is not None
        assert net.seed == 3

    def test_train_config(self):
        """Test the training subset is carried over."""
        cfg = RunConfig(lr_weights=0.1, lr_alpha=0.0, epochs=7, batch_size=2).train_config()
        assert (cfg.lr_weights, cfg.lr_alpha, cfg.epochs, cfg.batch_size) == (0.1, 0.0, 7, 2)


class TestLoadConfig:
    """Tests for reading config files."""

    def test_fixture(self):
        """Test the XOR fixture."""
        config = load_config(FIXTURES / "xor.cfg")
        assert config.layers == [2, 4, 1]
        assert config.epochs == 200 and config.log_every == 50

    def test_yaml(self, tmp_path):
        """Test YAML files use the same keys."""
        path = tmp_path / "run.yaml"
        path.write_text("layers: [4, 8, 3]\nM: 6\noutput: softmax\nloss: cross_entropy\n")
        config = load_config(path)
        assert config.layers == [4, 8, 3] and config.m == 6

    def test_empty_file(self, tmp_path):
        """Test an empty file yields the defaults."""
        path = tmp_path / "empty.cfg"
        path.write_text("")
        assert load_config(path) == RunConfig()

    def test_yaml_must_be_mapping(self, tmp_path):
        """Test a YAML list at top level is rejected."""
        path = tmp_path / "run.yml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """Test a missing file is a ConfigError."""
        with pytest.raises(ConfigError, match="no such config file"):
            load_config(tmp_path / "absent.cfg")

    @pytest.mark.parametrize(
        "name,body",
        [
            ("bad.cfg", b"# run\nbasis = fourier\nseed = 4\xe92\n"),
            ("bad.yaml", b"a: 1\nb: 2\n\xff\n"),
        ],
    )
    def test_undecodable_file(self, tmp_path, name, body):
        """Test bytes that are not UTF-8 are a ConfigError naming the line."""
        path = tmp_path / name
        path.write_bytes(body)
        with pytest.raises(ConfigError, match="line 3: not valid UTF-8"):
            load_config(path)

    @pytest.mark.parametrize(
        "name", ["default.cfg", "xor.cfg", "baseline.cfg", "iris_softmax.yaml"]
    )
    def test_shipped_configs(self, name):
        """Test every shipped config validates."""
        config = load_config(CONFIGS / name)
        assert config.build_network().widths == config.layers
