"""Random ReLU layers: sampling, determinism, evaluation, serialization."""

import math

import numpy as np
import pytest

from sepcap.errors import DimensionMismatchError
from sepcap.geometry import PointSet
from sepcap.layers import (
    RandomReluLayer,
    TwoLayerNetwork,
    apply,
    apply_set,
    forward,
    layer_from_json,
    layer_to_json,
    load_layer_csv,
    sample_layer,
    sample_network,
    save_layer_csv,
)


class TestSampling:
    def test_zero_lambda_means_zero_bias(self):
        layer = sample_layer(3, 16, 0.0, 4)
        assert np.all(layer.bias == 0.0)

    def test_bias_range(self):
        layer = sample_layer(2, 500, 0.7, 5)
        assert np.all(np.abs(layer.bias) <= 0.7)

    def test_weight_mean_clt_bound(self):
        # 256x256 i.i.d. N(0,1): |mean| <= 4 / sqrt(256*256) with overwhelming odds
        layer = sample_layer(256, 256, 1.0, 123)
        assert abs(layer.weights.mean()) <= 4.0 / 256.0

    def test_seed_determinism(self):
        a = sample_layer(5, 7, 1.5, 99)
        b = sample_layer(5, 7, 1.5, 99)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)

    def test_scale_is_sqrt_2_over_n_out(self):
        layer = sample_layer(4, 50, 1.0, 0)
        assert layer.scale == math.sqrt(2.0 / 50.0)

    def test_layer_immutable(self):
        layer = sample_layer(2, 3, 1.0, 1)
        with pytest.raises(ValueError):
            layer.weights[0, 0] = 0.0


class TestApply:
    def test_zero_input_zero_bias(self):
        layer = sample_layer(4, 8, 0.0, 2)
        out = apply(layer, np.zeros(4))
        assert np.all(out == 0.0)

    def test_injected_layer_hand_evaluation(self):
        layer = RandomReluLayer([[1.0, 0.0], [0.0, 1.0]], [-0.5, 0.0], lam=0.5)
        out = apply(layer, np.array([1.0, 0.0]))
        # scale = sqrt(2/2) = 1; ReLU(1 - 0.5) = 0.5, ReLU(0) = 0
        np.testing.assert_allclose(out, [0.5, 0.0], atol=0)

    def test_nonnegativity(self):
        rng = np.random.default_rng(3)
        layer = sample_layer(6, 40, 2.0, 10)
        for _ in range(20):
            out = apply(layer, rng.standard_normal(6))
            assert np.all(out >= 0.0)

    def test_dimension_mismatch(self):
        layer = sample_layer(3, 4, 1.0, 0)
        with pytest.raises(DimensionMismatchError):
            apply(layer, np.zeros(5))

    def test_lipschitz_after_scaling(self):
        # |ReLU(a) - ReLU(b)| <= |a - b| row-wise
        rng = np.random.default_rng(9)
        layer = sample_layer(5, 30, 1.0, 8)
        for _ in range(25):
            x, y = rng.standard_normal(5), rng.standard_normal(5)
            lhs = np.linalg.norm(apply(layer, x) - apply(layer, y))
            rhs = layer.scale * np.linalg.norm(layer.weights @ (x - y))
            assert lhs <= rhs + 1e-12

    def test_expected_squared_norm_at_origin(self):
        # E||Phi(0)||^2 = lam^2 / 3: mean over 200 fresh layers, n_out = 1000
        total = 0.0
        for k in range(200):
            layer = sample_layer(3, 1000, 1.0, 10_000 + k)
            out = apply(layer, np.zeros(3))
            total += float(out @ out)
        mean = total / 200.0
        assert abs(mean - 1.0 / 3.0) <= 0.01


class TestApplySet:
    def test_singleton_maps_to_singleton(self):
        layer = sample_layer(2, 5, 1.0, 6)
        s = apply_set(layer, PointSet([[0.3, -0.2]]))
        assert len(s) == 1 and s.dim == 5

    def test_order_preserved_and_matches_apply(self):
        rng = np.random.default_rng(5)
        layer = sample_layer(4, 9, 1.0, 7)
        pts = rng.standard_normal((6, 4))
        imgs = apply_set(layer, PointSet(pts))
        for k in range(6):
            np.testing.assert_allclose(imgs.points[k], apply(layer, pts[k]), atol=1e-12)


class TestTwoLayerNetwork:
    def test_dims_must_chain(self):
        with pytest.raises(DimensionMismatchError):
            TwoLayerNetwork(sample_layer(2, 5, 1.0, 0), sample_layer(6, 3, 1.0, 1))

    def test_zero_biases_zero_input(self):
        net = sample_network(3, 8, 4, 0.0, 0.0, 11)
        out = forward(net, PointSet([[0.0, 0.0, 0.0]]))
        assert np.all(out.points == 0.0)

    def test_forward_equals_composition(self):
        rng = np.random.default_rng(13)
        net = sample_network(4, 10, 6, 1.0, 2.0, 21)
        s = PointSet(rng.standard_normal((5, 4)))
        via_forward = forward(net, s)
        via_steps = apply_set(net.second, apply_set(net.first, s))
        np.testing.assert_array_equal(via_forward.points, via_steps.points)

    def test_second_seed_derived_from_first(self):
        net = sample_network(3, 6, 4, 1.0, 1.0, 40)
        again = sample_layer(6, 4, 1.0, 41)
        np.testing.assert_array_equal(net.second.weights, again.weights)


class TestSerialization:
    def test_json_round_trip_resamples_identically(self):
        layer = sample_layer(4, 12, 1.3, 77)
        back = layer_from_json(layer_to_json(layer))
        np.testing.assert_array_equal(back.weights, layer.weights)
        np.testing.assert_array_equal(back.bias, layer.bias)

    def test_injected_layer_has_no_json_form(self):
        layer = RandomReluLayer([[1.0]], [0.0], lam=0.0)
        with pytest.raises(ValueError):
            layer_to_json(layer)

    def test_csv_round_trip_exact(self, tmp_path):
        layer = sample_layer(3, 5, 0.9, 31)
        path = tmp_path / "layer.csv"
        save_layer_csv(layer, path)
        back = load_layer_csv(path)
        np.testing.assert_array_equal(back.weights, layer.weights)
        np.testing.assert_array_equal(back.bias, layer.bias)
        assert back.lam == layer.lam
