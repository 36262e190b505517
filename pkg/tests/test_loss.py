"""Tests for losses and the output gradient."""

import math

import numpy as np
import pytest

from vnn.activation import VariationalActivation
from vnn.basis import BasisFamily, BasisKind
from vnn.errors import LossError
from vnn.grad_check import ParamCoordinate, ParamSite, numeric_partial
from vnn.loss import (
    LossKind,
    check_pairing,
    default_loss_for,
    loss_output_grad,
    loss_value,
    mean_loss,
)
from vnn.network import LayerSpec, Network, OutputLayer, OutputScaling

POLY2 = BasisFamily(BasisKind.POLYNOMIAL, 2)


def linear_net(out_weights, scaling=OutputScaling.IDENTITY):
    """1-wide identity hidden layer feeding the given output row."""
    act = VariationalActivation(POLY2, "layer", np.array([0.0, 1.0]), 1)
    hidden = LayerSpec(weights=[[1.0]], biases=[0.0], activation=act)
    out_weights = np.atleast_2d(np.array(out_weights, dtype=float))
    return Network(
        [hidden],
        OutputLayer(weights=out_weights, biases=np.zeros(out_weights.shape[1]), scaling=scaling),
    )


class TestLossValue:
    """Tests for per-sample losses."""

    def test_mse_perfect_fit(self):
        """Test zero loss at the target."""
        assert loss_value("mse", np.array([0.3, -1.0]), np.array([0.3, -1.0])) == 0.0

    def test_mse_half_square(self):
        """Test one unit of error costs 0.5."""
        assert loss_value(LossKind.MSE, np.array([1.0, 0.0]), np.zeros(2)) == 0.5

    def test_cross_entropy(self):
        """Test -ln 0.75."""
        value = loss_value("cross_entropy", np.array([0.25, 0.75]), np.array([0.0, 1.0]))
        assert value == pytest.approx(0.2876820724517809, abs=1e-15)

    def test_cross_entropy_clamps_zero(self):
        """Test a zero probability is clamped before the log."""
        value = loss_value("cross_entropy", np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert value == pytest.approx(-math.log(1e-12))

    def test_cross_entropy_zero_at_one_hot(self):
        """Test cross-entropy vanishes when output equals a one-hot target."""
        assert loss_value("cross_entropy", np.array([0.0, 1.0]), np.array([0.0, 1.0])) == 0.0

    def test_length_mismatch(self):
        """Test output and target must have equal length."""
        with pytest.raises(LossError):
            loss_value("mse", np.zeros(2), np.zeros(3))

    def test_cross_entropy_target_must_be_distribution(self):
        """Test targets that do not sum to 1 are rejected."""
        with pytest.raises(LossError):
            loss_value("cross_entropy", np.array([0.5, 0.5]), np.array([1.0, 1.0]))
        with pytest.raises(LossError):
            loss_value("cross_entropy", np.array([0.5, 0.5]), np.array([1.5, -0.5]))


class TestPairing:
    """Tests for loss/scaling pairing."""

    def test_default_loss(self):
        """Test softmax defaults to cross-entropy."""
        assert default_loss_for(OutputScaling.SOFTMAX) is LossKind.CROSS_ENTROPY
        assert default_loss_for(OutputScaling.SIGMOID) is LossKind.MSE

    def test_cross_entropy_needs_softmax(self):
        """Test cross-entropy on an identity output is refused."""
        with pytest.raises(LossError):
            check_pairing(LossKind.CROSS_ENTROPY, OutputScaling.IDENTITY)


class TestLossOutputGrad:
    """Tests for g = dE/dnet^(O)."""

    def test_identity_mse_at_target(self):
        """Test zero gradient at a perfect fit."""
        net = linear_net([[1.0]])
        trace = net.forward(np.array([0.4]))
        np.testing.assert_array_equal(loss_output_grad("mse", trace, np.array([0.4])), [0.0])

    def test_identity_mse(self):
        """Test g = output - target."""
        trace = linear_net([[1.0]]).forward(np.array([2.0]))
        np.testing.assert_array_equal(loss_output_grad("mse", trace, np.array([0.0])), [2.0])

    def test_softmax_cross_entropy(self):
        """Test g = output - target for softmax with cross-entropy."""
        net = linear_net([[0.0, math.log(3.0)]], scaling="softmax")
        trace = net.forward(np.array([1.0]))
        np.testing.assert_allclose(trace.output, [0.25, 0.75], rtol=0, atol=1e-15)
        grad = loss_output_grad("cross_entropy", trace, np.array([0.0, 1.0]))
        np.testing.assert_allclose(grad, [0.25, -0.25], rtol=0, atol=1e-15)

    @pytest.mark.parametrize(
        "scaling,kind,target",
        [
            ("identity", "mse", [0.3, -0.6, 1.0]),
            ("sigmoid", "mse", [0.2, 0.9, 0.5]),
            ("softmax", "mse", [0.1, 0.7, 0.2]),
            ("softmax", "cross_entropy", [0.0, 0.0, 1.0]),
        ],
    )
    def test_matches_finite_differences(self, scaling, kind, target):
        """Test g against central differences in net^(O) via the output biases."""
        net = linear_net([[0.4, -1.1, 0.7]], scaling=scaling)
        x, t = np.array([0.8]), np.array(target)
        grad = loss_output_grad(kind, net.forward(x), t)
        for row in range(3):
            coord = ParamCoordinate(ParamSite.BIAS, 1, row)
            numeric = numeric_partial(net, x, t, kind, coord, 1e-5)
            assert grad[row] == pytest.approx(numeric, rel=1e-6, abs=1e-8)

    def test_through_output_activation(self):
        """Test g includes F^(O)' when the output activation is on."""
        net = linear_net([[1.0]])
        net.output_layer.activation = VariationalActivation(
            BasisFamily(BasisKind.POLYNOMIAL, 3), "layer", np.array([0.0, 0.0, 1.0]), 1
        )
        trace = net.forward(np.array([3.0]))
        # E = (x^2 - t)^2 / 2 so dE/dnet = (9 - 1) * 2 * 3
        np.testing.assert_array_equal(loss_output_grad("mse", trace, np.array([1.0])), [48.0])


class TestMeanLoss:
    """Tests for the dataset-level loss."""

    def test_mean_over_samples(self):
        """Test the mean of per-sample losses."""
        net = linear_net([[1.0]])
        samples = [(np.array([1.0]), np.array([0.0])), (np.array([3.0]), np.array([0.0]))]
        assert mean_loss(net, samples, "mse") == pytest.approx((0.5 + 4.5) / 2)

    def test_empty(self):
        """Test an empty set has no mean loss."""
        with pytest.raises(LossError):
            mean_loss(linear_net([[1.0]]), [], "mse")
