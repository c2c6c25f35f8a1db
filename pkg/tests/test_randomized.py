"""Random-hyperplane separation probabilities, cap measures, and lower bounds."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from sepcap.errors import DegenerateNarrownessError
from sepcap.geometry import PointSet
from sepcap.randomized import (
    BoundComparison,
    SeparationProbe,
    estimate_separation_probability,
    expected_separating_neurons,
    general_lower_bound,
    sample_cap_probability,
    separation_probability_curve,
    spherical_cap_probability,
    two_point_lower_bound,
)


def two_point_quadrature(delta: float, lam: float, t: float) -> float:
    """Exact 1-d oracle: P(tau <= -t and g*delta + tau > t) for the pair {0},{delta}."""
    if t > lam:
        return 0.0
    val, _ = quad(lambda tau: norm.sf((t - tau) / delta), -lam, -t, limit=200)
    return val / (2.0 * lam)


class TestSeparationProbability:
    def test_infeasible_bias_range_exactly_zero(self):
        # separation needs tau <= -t < -lam: impossible
        probe = SeparationProbe(
            x_minus=PointSet([[0.0, 0.0]]), x_plus=PointSet([[0.5, 0.0]]),
            lam=1.0, t=2.0, trials=5000, seed=3,
        )
        res = estimate_separation_probability(probe)
        assert res.estimate == 0.0

    def test_matches_quadrature_oracle(self):
        delta, lam, t = 1.0, 10.0, 1.0
        p_star = two_point_quadrature(delta, lam, t)
        probe = SeparationProbe(
            x_minus=PointSet([[0.0]]), x_plus=PointSet([[delta]]),
            lam=lam, t=t, trials=200_000, seed=11,
        )
        res = estimate_separation_probability(probe)
        assert abs(res.estimate - p_star) <= 3.0 * max(res.std_error, 1e-12)

    def test_inverse_lambda_scaling(self):
        delta, t = 1.0, 1.0
        estimates = {}
        for lam, seed in ((10.0, 21), (20.0, 22)):
            probe = SeparationProbe(
                x_minus=PointSet([[0.0]]), x_plus=PointSet([[delta]]),
                lam=lam, t=t, trials=400_000, seed=seed,
            )
            estimates[lam] = estimate_separation_probability(probe)
        p10, p20 = estimates[10.0], estimates[20.0]
        joint = math.hypot(p10.std_error / 2.0, p20.std_error)
        assert abs(p10.estimate / 2.0 - p20.estimate) <= 4.0 * joint

    def test_curve_monotone_in_t_exactly(self):
        rng = np.random.default_rng(5)
        probe = SeparationProbe(
            x_minus=PointSet(rng.standard_normal((4, 3)) - 2.0),
            x_plus=PointSet(rng.standard_normal((4, 3)) + 2.0),
            lam=8.0, t=0.0, trials=20_000, seed=17,
        )
        grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
        curve = separation_probability_curve(probe, grid)
        probs = [r.estimate for r in curve]
        assert all(x >= y for x, y in zip(probs, probs[1:]))

    def test_curve_agrees_with_single_estimates(self):
        probe = SeparationProbe(
            x_minus=PointSet([[0.0]]), x_plus=PointSet([[1.0]]),
            lam=5.0, t=0.5, trials=30_000, seed=29,
        )
        single = estimate_separation_probability(probe)
        curve = separation_probability_curve(probe, [0.5])
        assert curve[0].estimate == single.estimate

    def test_role_swap_symmetry(self):
        rng = np.random.default_rng(31)
        a = PointSet(rng.standard_normal((5, 2)) - 1.5)
        b = PointSet(rng.standard_normal((5, 2)) + 1.5)
        p_fwd = estimate_separation_probability(
            SeparationProbe(x_minus=a, x_plus=b, lam=6.0, t=0.1, trials=150_000, seed=41)
        )
        p_bwd = estimate_separation_probability(
            SeparationProbe(x_minus=b, x_plus=a, lam=6.0, t=0.1, trials=150_000, seed=42)
        )
        joint = math.hypot(p_fwd.std_error, p_bwd.std_error)
        assert abs(p_fwd.estimate - p_bwd.estimate) <= 4.0 * joint


class TestLowerBounds:
    def test_two_point_arithmetic(self):
        assert two_point_lower_bound(1.0, 10.0, 0.1) == pytest.approx(0.01)

    def test_two_point_clamped(self):
        assert two_point_lower_bound(5.0, 1.0, 1.0) == 1.0

    def test_two_point_consistency_with_calibrated_c(self):
        # quadrature p* at (delta=1, lam=10, t=delta) is about 4.3e-4, so the
        # admissible constant is c = p* lam / delta, frozen here at 0.003
        delta, lam = 1.0, 10.0
        p_star = two_point_quadrature(delta, lam, delta)
        c_calibrated = 0.003
        assert p_star >= two_point_lower_bound(delta, lam, c_calibrated)
        # ... while the pre-calibration guess c = 0.1 is NOT admissible
        assert p_star < two_point_lower_bound(delta, lam, 0.1)

    def test_general_bound_clamps_to_one(self):
        assert general_lower_bound(t=1.0, gamma_m=1.0, epsilon=0.0, lam=1.0, C=0.0) == 1.0

    def test_general_bound_arithmetic(self):
        got = general_lower_bound(t=1.0, gamma_m=1.0, epsilon=0.5, lam=10.0, C=1.0)
        assert got == pytest.approx(0.1 * math.exp(-math.log(8.0)), rel=1e-12)
        assert got == pytest.approx(0.0125, rel=1e-12)

    def test_general_bound_monotone_in_C(self):
        vals = [general_lower_bound(1.0, 1.0, 0.25, 5.0, C) for C in (0.0, 0.5, 1.0, 2.0)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))

    def test_degenerate_epsilon(self):
        with pytest.raises(DegenerateNarrownessError):
            general_lower_bound(1.0, 1.0, 1.0, 5.0, 1.0)

    def test_bound_comparison_verdict(self):
        from sepcap.complexity import EstimatorResult

        emp = EstimatorResult(estimate=0.05, std_error=0.001, n_samples=1000, seed=0)
        assert BoundComparison(emp, 0.04).verdict == "consistent"
        assert BoundComparison(emp, 0.06).verdict == "inconsistent"


class TestSphericalCap:
    def test_hemisphere_limit(self):
        cap = spherical_cap_probability(1e-9, 4)
        assert cap.exact == pytest.approx(0.5, abs=1e-6)

    def test_d3_closed_form(self):
        # on S^2 the cap height law is linear: P = (1 - m) / 2
        for m in (0.1, 0.5, 0.9):
            cap = spherical_cap_probability(m, 3)
            assert cap.exact == pytest.approx((1.0 - m) / 2.0, abs=1e-12)

    def test_sandwich_at_m03_d25(self):
        cap = spherical_cap_probability(0.3, 25)
        assert cap.lower is not None and cap.upper is not None
        assert cap.lower <= cap.exact <= cap.upper

    def test_bounds_absent_below_regime(self):
        cap = spherical_cap_probability(0.2, 10)  # needs d >= 50
        assert cap.lower is None and cap.upper is None

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            spherical_cap_probability(0.0, 10)
        with pytest.raises(ValueError):
            spherical_cap_probability(1.5, 10)

    def test_matches_mc_oracle_on_grid(self):
        for m, d, seed in ((0.2, 8, 1), (0.4, 5, 2), (0.6, 3, 3)):
            cap = spherical_cap_probability(m, d)
            mc = sample_cap_probability(m, d, 200_000, seed)
            assert abs(mc.estimate - cap.exact) <= 3.0 * max(mc.std_error, 1e-12)


class TestExpectedSeparatingNeurons:
    def test_arithmetic(self):
        assert expected_separating_neurons(100, 1.0, 10.0, 0.2) == 1

    def test_doubling_n(self):
        base = expected_separating_neurons(500, 0.5, 5.0, 0.2)
        doubled = expected_separating_neurons(1000, 0.5, 5.0, 0.2)
        assert base * 2 - 1 <= doubled <= base * 2 + 1

    def test_observed_counts_exceed_prediction(self):
        # calibration experiment: the per-neuron probability of delta-separating
        # the pair is ~4.2e-4 at (delta=1, lam=10), matching the quadrature
        # oracle; c1 = 0.004 puts the prediction at roughly half the observed
        # mean count, so at least 90% of layers clear it
        from sepcap.layers import sample_layer
        from sepcap.separators import t_separating_counts

        delta, lam, n, c1 = 1.0, 10.0, 40_000, 0.004
        x_minus = PointSet([[0.0, 0.0, 0.0]])
        x_plus = PointSet([[delta, 0.0, 0.0]])
        predicted = expected_separating_neurons(n, delta, lam, c1)
        assert predicted >= 1
        wins = 0
        trials = 200
        for k in range(trials):
            layer = sample_layer(3, n, lam, 7000 + k)
            counts = t_separating_counts(layer, x_minus, x_plus, delta)
            if counts[0] >= predicted:
                wins += 1
        assert wins >= 0.9 * trials
