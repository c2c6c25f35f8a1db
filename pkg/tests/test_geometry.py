"""Point-set primitives: metric quantities, invariances, serialization."""

import math

import numpy as np
import pytest

from sepcap.errors import DimensionMismatchError, EmptySetError
from sepcap.geometry import (
    PointSet,
    load_points_csv,
    min_cross_distance,
    points_from_json,
    points_to_json,
    radius_bound,
    save_points_csv,
    set_stats,
)


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))[None, :]


class TestMinCrossDistance:
    def test_single_pair_pythagoras(self):
        assert min_cross_distance(PointSet([[0, 0]]), PointSet([[3, 4]])) == 5.0

    def test_identical_points_give_zero(self):
        assert min_cross_distance(PointSet([[1, 0]]), PointSet([[1, 0]])) == 0.0

    def test_brute_force_over_pairs(self):
        # oracle: min over the 4 explicit pairs
        a = PointSet([[0, 0], [0, 1]])
        b = PointSet([[2, 0], [5, 5]])
        pairs = [
            np.linalg.norm(np.array(x) - np.array(y))
            for x in [[0, 0], [0, 1]]
            for y in [[2, 0], [5, 5]]
        ]
        assert min_cross_distance(a, b) == min(pairs) == 2.0

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = PointSet(rng.standard_normal((4, 3)))
            b = PointSet(rng.standard_normal((5, 3)))
            assert min_cross_distance(a, b) == min_cross_distance(b, a)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.standard_normal((6, 4))
            b = rng.standard_normal((3, 4))
            Q = random_rotation(rng, 4)
            shift = rng.standard_normal(4)
            before = min_cross_distance(PointSet(a), PointSet(b))
            after = min_cross_distance(PointSet(a @ Q.T + shift), PointSet(b @ Q.T + shift))
            assert abs(before - after) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            min_cross_distance(PointSet([[0, 0]]), PointSet([[1, 2, 3]]))

    def test_empty_rejected_at_construction(self):
        with pytest.raises(EmptySetError):
            PointSet(np.zeros((0, 2)))


class TestSetStats:
    def test_two_singletons(self):
        st = set_stats(PointSet([[0, 0]]), PointSet([[1, 0]]))
        assert st.delta == 1.0
        assert st.diameter_minus == 0.0
        assert st.diameter_plus == 0.0
        assert st.radius_bound == 1.0

    def test_brute_force_pairs(self):
        st = set_stats(PointSet([[-1, 0], [1, 0]]), PointSet([[0, 3]]))
        assert st.diameter_minus == 2.0
        assert st.delta == pytest.approx(math.sqrt(10), abs=1e-15)

    def test_coincident_singletons_at_origin(self):
        st = set_stats(PointSet([[0.0]]), PointSet([[0.0]]))
        assert st.delta == 0.0
        assert st.radius_bound == 0.0

    def test_radius_bound_dominates_every_norm(self):
        rng = np.random.default_rng(3)
        a = PointSet(rng.standard_normal((8, 5)))
        b = PointSet(rng.standard_normal((9, 5)))
        R = radius_bound(a, b)
        for s in (a, b):
            assert np.all(np.linalg.norm(s.points, axis=1) <= R)


class TestValidation:
    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            PointSet([[0.0, float("nan")]])

    def test_inf_rejected(self):
        with pytest.raises(ValueError):
            PointSet([[float("inf"), 0.0]])

    def test_points_are_read_only(self):
        s = PointSet([[1.0, 2.0]])
        with pytest.raises(ValueError):
            s.points[0, 0] = 3.0


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        s = PointSet(rng.standard_normal((7, 3)))
        path = tmp_path / "pts.csv"
        save_points_csv(s, path)
        header = path.read_text().splitlines()[0]
        assert header == "x0,x1,x2"
        loaded = load_points_csv(path)
        np.testing.assert_array_equal(loaded.points, s.points)

    def test_csv_rejects_ragged(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,x1\n1.0,2.0\n3.0\n")
        with pytest.raises(ValueError, match="ragged"):
            load_points_csv(path)

    def test_json_round_trip(self):
        s = PointSet([[1.5, -2.0], [0.0, 3.25]])
        loaded = points_from_json(points_to_json(s))
        np.testing.assert_array_equal(loaded.points, s.points)

    def test_json_rejects_ragged(self):
        with pytest.raises(ValueError, match="ragged"):
            points_from_json("[[1.0, 2.0], [3.0]]")
