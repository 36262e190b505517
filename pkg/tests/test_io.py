"""Tests for datasets, checkpoints and activation export."""

from pathlib import Path

import numpy as np
import pytest

from vnn.activation import VariationalActivation
from vnn.basis import BasisFamily, BasisKind
from vnn.errors import CheckpointError, CheckpointVersionError, DataError, ShapeError
from vnn.io import Dataset, load_csv, save_csv
from vnn.io.checkpoint import (
    format_checkpoint,
    load_checkpoint,
    parse_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from vnn.io.export import export_activation, write_table
from vnn.loss import LossKind
from vnn.network import LayerSpec, Network, OutputLayer
from vnn.optim import TrainConfig, train

FIXTURES = Path(__file__).parent / "fixtures"
POLY2 = BasisFamily(BasisKind.POLYNOMIAL, 2)


def identity_chain():
    act = VariationalActivation(POLY2, "layer", np.array([0.0, 1.0]), 1)
    hidden = LayerSpec(weights=[[1.0]], biases=[0.0], activation=act)
    return Network([hidden], OutputLayer(weights=[[1.0]], biases=[0.0]))


class TestLoadCsv:
    """Tests for dataset loading."""

    def test_xor_fixture(self):
        """Test the XOR table splits into features and targets."""
        data = load_csv(FIXTURES / "xor.csv", n_targets=1)
        assert len(data) == 4
        np.testing.assert_array_equal(data.features[1], [0.0, 1.0])
        np.testing.assert_array_equal(data.targets[:, 0], [0.0, 1.0, 1.0, 0.0])

    def test_header(self, tmp_path):
        """Test an optional header row becomes the column names."""
        path = tmp_path / "data.csv"
        path.write_text("a,b,t\n1,2,3\n")
        data = load_csv(path, n_targets=1, has_header=True)
        assert data.columns == ["a", "b", "t"]
        np.testing.assert_array_equal(data.features, [[1.0, 2.0]])

    def test_blank_lines_skipped(self, tmp_path):
        """Test blank lines are ignored."""
        path = tmp_path / "data.csv"
        path.write_text("1,2\n\n3,4\n")
        assert len(load_csv(path, n_targets=1)) == 2

    def test_ragged_row(self, tmp_path):
        """Test ragged rows name their line."""
        path = tmp_path / "data.csv"
        path.write_text("1,2,3\n4,5\n")
        with pytest.raises(DataError) as exc_info:
            load_csv(path, n_targets=1)
        assert exc_info.value.line == 2

    def test_non_numeric_field(self, tmp_path):
        """Test bad fields name their line and column."""
        path = tmp_path / "data.csv"
        path.write_text("1,2,3\n4,x,6\n")
        with pytest.raises(DataError) as exc_info:
            load_csv(path, n_targets=1)
        assert (exc_info.value.line, exc_info.value.column) == (2, 2)
        assert "line 2, column 2" in str(exc_info.value)

    def test_non_finite_field(self, tmp_path):
        """Test NaN fields are rejected."""
        path = tmp_path / "data.csv"
        path.write_text("1,nan,3\n")
        with pytest.raises(DataError):
            load_csv(path, n_targets=1)

    def test_undecodable_file(self, tmp_path):
        """Test bytes that are not UTF-8 name their line."""
        path = tmp_path / "data.csv"
        path.write_bytes(b"0,0,0\n0,\xff,1\n")
        with pytest.raises(DataError) as exc_info:
            load_csv(path, n_targets=1)
        assert exc_info.value.line == 2

    @pytest.mark.parametrize("field", ["1_000", "١", "1,5", "0x10", "1e"])
    def test_only_plain_decimals(self, tmp_path, field):
        """Test underscores, non-ASCII digits and other float spellings are rejected."""
        path = tmp_path / "data.csv"
        path.write_text(f'0,"{field}",1\n', encoding="utf-8")
        with pytest.raises(DataError) as exc_info:
            load_csv(path, n_targets=1)
        assert (exc_info.value.line, exc_info.value.column) == (1, 2)

    def test_exponents_and_signs(self, tmp_path):
        """Test signed and exponent forms still parse."""
        path = tmp_path / "data.csv"
        path.write_text("-1.5,+.25,3e-2,2.\n")
        data = load_csv(path, n_targets=1)
        np.testing.assert_array_equal(data.features, [[-1.5, 0.25, 0.03]])
        np.testing.assert_array_equal(data.targets, [[2.0]])

    def test_too_few_columns(self, tmp_path):
        """Test rows need at least one feature besides the targets."""
        path = tmp_path / "data.csv"
        path.write_text("1,2\n")
        with pytest.raises(DataError):
            load_csv(path, n_targets=2)

    def test_missing_and_empty(self, tmp_path):
        """Test missing and empty files are errors."""
        with pytest.raises(DataError):
            load_csv(tmp_path / "absent.csv", n_targets=1)
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(DataError):
            load_csv(empty, n_targets=1)

    def test_save_and_reload(self, tmp_path):
        """Test saved datasets load back exactly."""
        features = np.array([[0.1, 1.0 / 3.0], [-2.5, 1e-20]])
        data = Dataset(features=features, targets=np.array([[1.0], [0.0]]))
        path = tmp_path / "out.csv"
        save_csv(data, path)
        back = load_csv(path, n_targets=1)
        np.testing.assert_array_equal(back.features, features)

    def test_dataset_row_mismatch(self):
        """Test features and targets need equal row counts."""
        with pytest.raises(DataError):
            Dataset(features=np.zeros((2, 1)), targets=np.zeros((3, 1)))


class TestCheckpoint:
    """Tests for checkpoint save and load."""

    def test_predictions_survive_round_trip(self, tmp_path):
        """Test a reloaded network predicts bitwise identically on 100 inputs."""
        net = Network.build(
            [3, 5, 4, 2],
            BasisFamily(BasisKind.FOURIER, 6, omega=0.7),
            mode="neuron",
            variational_output=True,
            frozen=[1],
            seed=13,
        )
        path = tmp_path / "model.vnn"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        inputs = np.random.default_rng(0).uniform(-2, 2, size=(100, 3))
        np.testing.assert_array_equal(net.predict_batch(inputs), loaded.predict_batch(inputs))
        assert [layer.trainable_alpha for layer in loaded.hidden_layers] == [True, False]
        assert loaded.family == net.family

    def test_metadata(self, tmp_path):
        """Test loss and seed are kept in the header."""
        net = Network.build([4, 3, 3], POLY2, scaling="softmax", seed=9)
        path = tmp_path / "model.vnn"
        save_checkpoint(net, path)
        checkpoint = read_checkpoint(path)
        assert checkpoint.loss is LossKind.CROSS_ENTROPY
        assert checkpoint.seed == 9
        assert checkpoint.version == 1

    def test_no_temp_file_left(self, tmp_path):
        """Test the atomic write cleans up after itself."""
        path = tmp_path / "model.vnn"
        save_checkpoint(identity_chain(), path)
        assert path.exists()
        assert not (tmp_path / "model.vnn.tmp").exists()

    def test_layout(self):
        """Test the magic line, header order and first tensor header."""
        net = Network.build([2, 4, 1], BasisFamily(BasisKind.FOURIER, 4), seed=42)
        lines = format_checkpoint(net, "mse").splitlines()
        assert lines[0] == "VNN 1"
        assert lines[1:4] == ["basis = fourier", "M = 4", "omega = 1"]
        assert lines[4] == "widths = 2,4,1"
        assert lines[11] == "seed = 42"
        assert lines[12] == "tensor weights 1 2 4"
        assert lines[-1] == "end"

    def test_bad_magic(self):
        """Test a foreign first line is a version error on line 1."""
        with pytest.raises(CheckpointVersionError) as exc_info:
            parse_checkpoint("NOPE 1\n")
        assert exc_info.value.line == 1

    def test_unsupported_version(self):
        """Test future versions are refused."""
        text = format_checkpoint(identity_chain()).replace("VNN 1", "VNN 2", 1)
        with pytest.raises(CheckpointVersionError):
            parse_checkpoint(text)

    def test_shape_error_names_tensor_line(self):
        """Test a header that disagrees with the tensors fails at the first tensor."""
        net = Network.build([2, 4, 1], BasisFamily(BasisKind.FOURIER, 4), seed=42)
        text = format_checkpoint(net).replace("widths = 2,4,1", "widths = 2,3,1")
        with pytest.raises(CheckpointError) as exc_info:
            parse_checkpoint(text)
        assert exc_info.value.line == 13
        assert "shape error" in str(exc_info.value)

    def test_truncated(self):
        """Test a cut-off file is reported as truncated."""
        net = Network.build([2, 4, 1], BasisFamily(BasisKind.FOURIER, 4), seed=42)
        text = "\n".join(format_checkpoint(net).splitlines()[:15]) + "\n"
        with pytest.raises(CheckpointError, match="truncated"):
            parse_checkpoint(text)

    def test_missing_end_marker(self):
        """Test the end marker is required."""
        text = format_checkpoint(identity_chain()).replace("end\n", "more\n")
        with pytest.raises(CheckpointError):
            parse_checkpoint(text)

    def test_non_numeric_value(self):
        """Test garbage values are rejected with their line."""
        lines = format_checkpoint(identity_chain()).splitlines()
        lines[13] = "abc"
        with pytest.raises(CheckpointError) as exc_info:
            parse_checkpoint("\n".join(lines))
        assert exc_info.value.line == 14

    @pytest.mark.parametrize(
        "original,corrupt,line",
        [
            ("M = 4", "M = four", 3),
            ("basis = fourier", "basis = chebyshev", 2),
            ("omega = 1", "omega = -2", 4),
            ("scaling = identity", "scaling = tanh", 8),
            ("seed = 42", "seed = x", 12),
        ],
    )
    def test_header_error_names_its_line(self, original, corrupt, line):
        """Test a bad header value is reported on the line that holds it."""
        net = Network.build([2, 4, 1], BasisFamily(BasisKind.FOURIER, 4), seed=42)
        text = format_checkpoint(net).replace(original, corrupt, 1)
        with pytest.raises(CheckpointError) as exc_info:
            parse_checkpoint(text)
        assert exc_info.value.line == line

    def test_undecodable_file(self, tmp_path):
        """Test bytes that are not UTF-8 are a checkpoint error with their line."""
        path = tmp_path / "model.vnn"
        lines = format_checkpoint(identity_chain()).encode("utf-8").split(b"\n")
        lines[4] = b"widths = 1,\xff1,1"
        path.write_bytes(b"\n".join(lines))
        with pytest.raises(CheckpointError) as exc_info:
            read_checkpoint(path)
        assert exc_info.value.line == 5

    def test_missing_header_key(self):
        """Test every header key is required."""
        text = format_checkpoint(identity_chain()).replace("loss = mse\n", "")
        with pytest.raises(CheckpointError, match="missing header keys: loss"):
            parse_checkpoint(text)

    def test_missing_file(self, tmp_path):
        """Test absent checkpoints raise CheckpointError."""
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.vnn")


class TestExportActivation:
    """Tests for activation curve export."""

    def test_identity_rows(self):
        """Test an identity activation samples x, x, 1."""
        table = export_activation(identity_chain(), 0, None, -1.0, 1.0, 3)
        assert table.rows() == [(-1.0, -1.0, 1.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]

    def test_neuron_mode_selects_column(self):
        """Test neuron mode exports the chosen neuron's curve."""
        family = BasisFamily(BasisKind.POLYNOMIAL, 3)
        coeffs = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
        act = VariationalActivation(family, "neuron", coeffs, 2)
        hidden = LayerSpec(weights=np.eye(2), biases=np.zeros(2), activation=act)
        net = Network([hidden], OutputLayer(weights=np.ones((2, 1)), biases=np.zeros(1)))
        second = export_activation(net, 0, 1, -1.0, 1.0, 5)
        np.testing.assert_array_equal(second.value, np.ones(5))
        np.testing.assert_array_equal(second.slope, np.zeros(5))
        with pytest.raises(ShapeError):
            export_activation(net, 0, None, -1.0, 1.0, 5)
        with pytest.raises(ShapeError):
            export_activation(net, 0, 2, -1.0, 1.0, 5)

    def test_output_activation(self):
        """Test the output layer index reaches F^(O) when enabled."""
        net = Network.build([2, 3, 1], POLY2, variational_output=True, seed=0)
        table = export_activation(net, 1, None, -1.0, 1.0, 4)
        out_act = net.output_layer.activation
        expected = [out_act.activate(np.array([x]))[0] for x in table.x]
        np.testing.assert_allclose(table.value, expected, rtol=0, atol=1e-15)

    def test_invalid_requests(self):
        """Test bad layers, ranges and step counts."""
        net = identity_chain()
        with pytest.raises(ShapeError):
            export_activation(net, 1, None, -1.0, 1.0, 3)
        with pytest.raises(ShapeError):
            export_activation(net, 0, 0, -1.0, 1.0, 3)
        with pytest.raises(ShapeError):
            export_activation(net, 0, None, 1.0, 1.0, 3)
        with pytest.raises(ShapeError):
            export_activation(net, 0, None, -1.0, 1.0, 1)

    def test_write_table(self, tmp_path):
        """Test the CSV header and values."""
        path = tmp_path / "act.csv"
        write_table(export_activation(identity_chain(), 0, None, -1.0, 1.0, 3), path)
        assert path.read_text().splitlines() == ["x,F,dF", "-1,-1,1", "0,0,1", "1,1,1"]

    def test_tanh_at_zero(self):
        """Test one-hot tanh exports F(0) = 0 and F'(0) = 1."""
        classic = BasisFamily(BasisKind.CLASSIC, 4)
        act = VariationalActivation.one_hot(classic, "layer", 1, 2)
        hidden = LayerSpec(weights=[[1.0]], biases=[0.0], activation=act)
        net = Network([hidden], OutputLayer(weights=[[1.0]], biases=[0.0]))
        table = export_activation(net, 0, None, -1.0, 1.0, 3)
        assert table.rows()[1] == (0.0, 0.0, 1.0)

    def test_trained_curve_matches_activate(self):
        """Test a trained layer's curve is the activation evaluated on the grid."""
        net = Network.build([2, 4, 1], BasisFamily(BasisKind.FOURIER, 4), seed=42)
        features = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        targets = np.array([[0.0], [1.0], [1.0], [0.0]])
        train(net, (features, targets), None, "mse", TrainConfig(epochs=50))
        table = export_activation(net, 0, None, -2.0, 2.0, 41)
        act = net.hidden_layers[0].activation
        assert np.all(np.isfinite(table.value))
        for x, value, slope in table.rows():
            nets = np.full(act.width, x)
            assert abs(value - act.activate(nets)[0]) <= 1e-15
            assert abs(slope - act.activate_deriv(nets)[0]) <= 1e-15
