"""Explicit indicator separators built from the layer's zero pattern."""

import math

import numpy as np
import pytest

from sepcap.complexity import build_mutual_covering
from sepcap.errors import EmptyIndicatorError, NoSeparatingNeuronError
from sepcap.geometry import PointSet
from sepcap.layers import RandomReluLayer, apply_set, sample_layer
from sepcap.separability import check_t_separation, max_margin_separator
from sepcap.separators import (
    build_indicator_separator,
    first_layer_geometry_check,
    negative_index_set,
    per_point_separator,
    t_separating_counts,
    write_component_report_csv,
)


def injected_two_neuron_layer():
    return RandomReluLayer([[1.0, 0.0], [0.0, 1.0]], [-0.5, 0.0], lam=0.5)


class TestNegativeIndexSet:
    def test_injected_layer_origin(self):
        idx = negative_index_set(injected_two_neuron_layer(), PointSet([[0.0, 0.0]]))
        assert idx.indices == (0, 1)

    def test_injected_layer_positive_point(self):
        idx = negative_index_set(injected_two_neuron_layer(), PointSet([[1.0, 1.0]]))
        assert idx.indices == ()

    def test_zero_bias_zero_point_gives_all(self):
        layer = sample_layer(3, 12, 0.0, 5)
        idx = negative_index_set(layer, PointSet([[0.0, 0.0, 0.0]]))
        assert idx.indices == tuple(range(12))

    def test_matches_zero_coordinates_of_image(self):
        rng = np.random.default_rng(9)
        layer = sample_layer(4, 30, 1.0, 11)
        s = PointSet(rng.standard_normal((6, 4)))
        idx = negative_index_set(layer, s)
        images = apply_set(layer, s).points
        zero_everywhere = tuple(int(i) for i in np.flatnonzero(np.all(images == 0.0, axis=0)))
        assert idx.indices == zero_everywhere

    def test_monotone_under_enlarging_context(self):
        rng = np.random.default_rng(13)
        layer = sample_layer(3, 40, 1.0, 17)
        pts = rng.standard_normal((8, 3))
        small = negative_index_set(layer, PointSet(pts[:4]))
        large = negative_index_set(layer, PointSet(pts))
        assert set(large.indices) <= set(small.indices)


class TestBuildIndicatorSeparator:
    def test_injected_layer_hand_evaluation(self):
        layer = injected_two_neuron_layer()
        x_minus = PointSet([[0.0, 0.0]])
        x_plus = PointSet([[1.0, 0.0]])
        sep, counts = build_indicator_separator(layer, x_minus, x_plus, t=0.0)
        np.testing.assert_allclose(sep.direction, [1 / math.sqrt(2)] * 2, atol=1e-15)
        img_plus = apply_set(layer, x_plus).points[0]
        # <u, Phi(x+)> = 0.5 / sqrt(2); Lemma bound: (1/n) * |<w1,x+> + b1| = 0.25
        got = float(sep.direction @ img_plus)
        assert got == pytest.approx(0.5 / math.sqrt(2), abs=1e-15)
        assert got >= 0.25

    def test_gate_raises_with_point_named(self):
        layer = injected_two_neuron_layer()
        # second plus point has both pre-activations negative: never separated
        x_minus = PointSet([[0.0, 0.0]])
        x_plus = PointSet([[1.0, 0.0], [-2.0, -2.0]])
        with pytest.raises(NoSeparatingNeuronError, match="point 1"):
            build_indicator_separator(layer, x_minus, x_plus, t=0.0)

    def test_minus_side_exactly_nonpositive(self):
        rng = np.random.default_rng(19)
        hits = 0
        for k in range(50):
            layer = sample_layer(6, 150, 3.0, 500 + k)
            x_minus = PointSet(rng.standard_normal((3, 6)) * 0.2 - 0.5)
            x_plus = PointSet(rng.standard_normal((3, 6)) * 0.2 + 0.5)
            try:
                sep, _ = build_indicator_separator(layer, x_minus, x_plus, t=0.05)
            except NoSeparatingNeuronError:
                continue
            hits += 1
            side = apply_set(layer, x_minus).points @ sep.direction
            assert np.all(side <= 0.0)
        assert hits > 10

    def test_margin_certified_and_below_optimum(self):
        rng = np.random.default_rng(23)
        checked = 0
        for k in range(200):
            layer = sample_layer(10, 200, 4.0, 900 + k)
            x_minus = PointSet(rng.standard_normal((4, 10)) * 0.15 - 0.4)
            x_plus = PointSet(rng.standard_normal((4, 10)) * 0.15 + 0.4)
            t = 0.1
            try:
                sep, counts = build_indicator_separator(layer, x_minus, x_plus, t)
            except NoSeparatingNeuronError:
                continue
            checked += 1
            n_prime = int(counts.min())
            level = t * n_prime / (2.0 * layer.n_out)
            img_minus = apply_set(layer, x_minus)
            img_plus = apply_set(layer, x_plus)
            assert check_t_separation(sep.hyperplane(), img_minus, img_plus, level)
            rep = max_margin_separator(img_minus, img_plus)
            assert rep.margin >= level - 1e-9
        assert checked >= 50


class TestPerPointSeparator:
    def test_zero_bias_origin_gives_uniform(self):
        layer = sample_layer(2, 9, 0.0, 3)
        sep = per_point_separator(layer, np.zeros(2))
        np.testing.assert_allclose(sep.direction, np.full(9, 1.0 / 3.0), atol=1e-15)

    def test_injected_layer(self):
        sep = per_point_separator(injected_two_neuron_layer(), np.zeros(2))
        np.testing.assert_allclose(sep.direction, [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_no_zero_coordinate_raises(self):
        layer = RandomReluLayer([[1.0], [2.0]], [0.5, 0.5], lam=0.5)
        with pytest.raises(EmptyIndicatorError):
            per_point_separator(layer, np.array([1.0]))

    def test_statistical_quality_at_calibrated_constant(self):
        # Empirically <u_{x-}, Phi(x+)> clusters well above c ||x+ - x-||^2 / lam
        # at c = 0.15 for this probe family (calibration seed range 1300..1499).
        rng = np.random.default_rng(29)
        wins = 0
        trials = 200
        c = 0.15
        for k in range(trials):
            layer = sample_layer(8, 300, 3.0, 1300 + k)
            x_minus = rng.standard_normal(8) * 0.3
            x_plus = rng.standard_normal(8) * 0.3 + 0.6
            try:
                sep = per_point_separator(layer, x_minus)
            except EmptyIndicatorError:
                continue
            img_plus = apply_set(layer, PointSet(x_plus[None, :])).points[0]
            target = c * float(np.sum((x_plus - x_minus) ** 2)) / 3.0
            if float(sep.direction @ img_plus) >= target:
                wins += 1
        assert wins >= 0.9 * trials


class TestFirstLayerGeometry:
    def _instance(self, seed):
        rng = np.random.default_rng(seed)
        minus = PointSet(rng.standard_normal((12, 6)) * 0.1 - 0.5)
        plus = PointSet(rng.standard_normal((12, 6)) * 0.1 + 0.5)
        return minus, plus

    def test_singleton_classes_reduce_to_two_point_case(self):
        wins = 0
        trials = 100
        for k in range(trials):
            minus = PointSet([[-0.6, 0.0, 0.0]])
            plus = PointSet([[0.6, 0.0, 0.0]])
            mc = build_mutual_covering(plus, minus, 3.0)
            layer = sample_layer(3, 400, 3.0, 3000 + k)
            rep = first_layer_geometry_check(layer, mc, plus, minus, c=0.15, c_prime=0.02)
            wins += rep.pass_fraction == 1.0
        assert wins >= 0.9 * trials

    def test_satellites_outside_plus_hull(self):
        # the transformed minus centers must sit off the hull of Phi(plus centers)
        wins = 0
        trials = 50
        for k in range(trials):
            minus, plus = self._instance(4000 + k)
            mc = build_mutual_covering(plus, minus, 3.0)
            layer = sample_layer(6, 500, 3.0, 5000 + k)
            img_centers_minus = apply_set(layer, mc.centers_minus)
            img_centers_plus = apply_set(layer, mc.centers_plus)
            ok = True
            for i in range(len(img_centers_minus)):
                sat = PointSet(img_centers_minus.points[i][None, :])
                rep = max_margin_separator(img_centers_plus, sat)
                ok = ok and rep.separable
            wins += ok
        assert wins >= 0.9 * trials

    def test_report_csv(self, tmp_path):
        minus, plus = self._instance(77)
        mc = build_mutual_covering(plus, minus, 3.0)
        layer = sample_layer(6, 300, 3.0, 88)
        rep = first_layer_geometry_check(layer, mc, plus, minus, c=0.15, c_prime=0.02)
        path = tmp_path / "components.csv"
        write_component_report_csv(rep, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "component,dist_sq,margin_required,margin_observed,pass"
        assert len(lines) == 1 + len(rep.components)

    def test_degenerate_lambda_still_reports(self, caplog):
        minus, plus = self._instance(99)
        mc = build_mutual_covering(plus, minus, 0.5)
        layer = sample_layer(6, 200, 0.5, 111)  # lam = 0.5 misses the bias floor
        import logging

        with caplog.at_level(logging.WARNING, logger="sepcap.separators"):
            rep = first_layer_geometry_check(layer, mc, plus, minus, c=0.15, c_prime=0.02)
        assert not rep.bias_condition_ok
        assert len(rep.components) == mc.n_minus()


class TestSeparatingCounts:
    def test_counts_match_brute_force(self):
        rng = np.random.default_rng(31)
        layer = sample_layer(3, 25, 2.0, 41)
        x_minus = PointSet(rng.standard_normal((3, 3)) - 1.0)
        x_plus = PointSet(rng.standard_normal((2, 3)) + 1.0)
        t = 0.2
        counts = t_separating_counts(layer, x_minus, x_plus, t)
        for j, xp in enumerate(x_plus.points):
            brute = 0
            for i in range(layer.n_out):
                w, b = layer.weights[i], layer.bias[i]
                if all(w @ xm + b <= -t for xm in x_minus.points) and w @ xp + b > t:
                    brute += 1
            assert counts[j] == brute
