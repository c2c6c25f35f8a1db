"""Random-hyperplane separation probabilities and their theoretical lower bounds.

A probe draws hyperplanes H_tau[g] with g standard Gaussian and tau uniform on
[-lam, lam], and estimates the probability that the hyperplane t-separates the
negative class from the positive one.  Curve evaluation reuses one hyperplane
sample across an entire t grid, so estimated curves are exactly monotone in t
(the separation events are nested).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .complexity import EstimatorResult, run_chunked_estimator
from .errors import DegenerateNarrownessError, EmptySetError
from .geometry import PointSet, check_same_dim
from .seeding import MASK64, make_rng

#: Samples per chunk when sweeping a t grid with shared hyperplane draws.
_CURVE_CHUNK = 8192


@dataclass(frozen=True)
class SeparationProbe:
    """One Monte Carlo experiment: sets, bias range, required level, budget."""

    x_minus: PointSet
    x_plus: PointSet
    lam: float
    t: float
    trials: int
    seed: int

    def __post_init__(self):
        check_same_dim(self.x_minus, self.x_plus)
        if len(self.x_minus) == 0 or len(self.x_plus) == 0:
            raise EmptySetError("probe needs two nonempty sets")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def _separation_margins(probe: SeparationProbe, rng, count: int):
    """Per-draw slack on each side of the hyperplane.

    Draw g then tau (fixed fill order).  H_tau[g] t-separates iff
    a_slack >= t and b_slack > t, where a_slack = -(max_a <g,a> + tau) and
    b_slack = min_b <g,b> + tau; both are nonincreasing checks in t, so one
    sample serves every t.
    """
    d = probe.x_minus.dim
    g = rng.standard_normal((count, d))
    tau = rng.uniform(-probe.lam, probe.lam, count)
    a_max = (g @ probe.x_minus.points.T).max(axis=1)
    b_min = (g @ probe.x_plus.points.T).min(axis=1)
    return -(a_max + tau), b_min + tau


def estimate_separation_probability(probe: SeparationProbe) -> EstimatorResult:
    """Fraction of draws whose hyperplane t-separates x_minus from x_plus."""

    def draw(rng, count):
        a_slack, b_slack = _separation_margins(probe, rng, count)
        return ((a_slack >= probe.t) & (b_slack > probe.t)).astype(float)

    return run_chunked_estimator(draw, probe.trials, probe.seed)


def separation_probability_curve(probe: SeparationProbe, t_grid) -> list[EstimatorResult]:
    """Estimates for every t in t_grid using one shared hyperplane sample.

    Sharing the draws makes the estimated curve exactly nonincreasing in t.
    """
    t_arr = np.asarray(list(t_grid), dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("all t values must be nonnegative")
    n = probe.trials
    counts = []
    start = 0
    while start < n:
        counts.append(min(_CURVE_CHUNK, n - start))
        start += _CURVE_CHUNK
    hits = np.zeros(len(t_arr))
    for idx, count in enumerate(counts):
        rng = make_rng((probe.seed ^ idx) & MASK64)
        a_slack, b_slack = _separation_margins(probe, rng, count)
        for j, t in enumerate(t_arr):
            hits[j] += float(((a_slack >= t) & (b_slack > t)).sum())
    results = []
    for j in range(len(t_arr)):
        p = hits[j] / n
        var = max(0.0, (hits[j] - n * p * p) / (n - 1)) if n > 1 else 0.0
        results.append(
            EstimatorResult(estimate=p, std_error=math.sqrt(var / n), n_samples=n, seed=probe.seed & MASK64)
        )
    return results


# ---------------------------------------------------------------------------
# Theoretical lower bounds
# ---------------------------------------------------------------------------

def two_point_lower_bound(delta: float, lam: float, c: float) -> float:
    """Two-point bound c * delta / lam, clamped to [0, 1]."""
    if delta < 0 or lam <= 0 or c <= 0:
        raise ValueError("need delta >= 0, lam > 0, c > 0")
    return min(1.0, c * delta / lam)


def general_lower_bound(t: float, gamma_m: float, epsilon: float, lam: float, C: float) -> float:
    """(t/lam) * exp(-C t^2 gamma_m^-2 log(4/(1-eps))), clamped to [0, 1].

    gamma_m is the effective margin (1-eps)*gamma of the narrowness certificate.
    """
    if epsilon >= 1.0:
        raise DegenerateNarrownessError("epsilon = 1 makes the bound degenerate")
    if epsilon < 0:
        raise ValueError("epsilon must be in [0, 1)")
    if t < 0 or gamma_m <= 0 or lam <= 0 or C < 0:
        raise ValueError("need t >= 0, gamma_m > 0, lam > 0, C >= 0")
    exponent = -C * t * t / (gamma_m * gamma_m) * math.log(4.0 / (1.0 - epsilon))
    return max(0.0, min(1.0, (t / lam) * math.exp(exponent)))


@dataclass(frozen=True)
class BoundComparison:
    """Empirical estimate vs theoretical lower bound at given constants."""

    empirical: EstimatorResult
    theoretical_lower: float
    constants_used: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.empirical.estimate + 3.0 * self.empirical.std_error >= self.theoretical_lower

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "inconsistent"


# ---------------------------------------------------------------------------
# Spherical caps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalCap:
    """Exact cap measure plus the sandwich bounds when d >= 2/m^2."""

    exact: float
    lower: float | None
    upper: float | None


def spherical_cap_probability(m: float, d: int) -> SphericalCap:
    """P(<v, u> >= m) for v uniform on S^{d-1}.

    Exact value via the regularized incomplete beta function: half the
    Beta((d-1)/2, 1/2) mass below 1 - m^2.  The closed-form sandwich
    (1-m^2)^{(d-1)/2} / (6 m sqrt(d)) <= P <= (1-m^2)^{(d-1)/2} / (2 m sqrt(d))
    is reported only in its validity regime d >= 2/m^2.
    """
    if not (0.0 < m <= 1.0):
        raise ValueError(f"m must be in (0, 1], got {m}")
    if d < 2:
        raise ValueError("dimension d must be >= 2")
    exact = 0.5 * float(betainc((d - 1) / 2.0, 0.5, 1.0 - m * m))
    if d >= 2.0 / (m * m):
        envelope = (1.0 - m * m) ** ((d - 1) / 2.0)
        lower = envelope / (6.0 * m * math.sqrt(d))
        upper = envelope / (2.0 * m * math.sqrt(d))
    else:
        lower = upper = None
    return SphericalCap(exact=exact, lower=lower, upper=upper)


def sample_cap_probability(m: float, d: int, n_samples: int, seed: int) -> EstimatorResult:
    """Monte Carlo oracle for the cap measure (uniform sphere via normalized Gaussians)."""

    def draw(rng, count):
        g = rng.standard_normal((count, d))
        first = g[:, 0] / np.linalg.norm(g, axis=1)
        return (first >= m).astype(float)

    return run_chunked_estimator(draw, n_samples, seed)


# ---------------------------------------------------------------------------
# Neuron counting (Chernoff step at desk scale)
# ---------------------------------------------------------------------------

def expected_separating_neurons(n: int, delta: float, lam: float, c1: float) -> int:
    """floor((c1/2) lam^-1 delta n): the per-pair count the Chernoff step guarantees."""
    if n < 1 or delta <= 0 or lam <= 0 or c1 <= 0:
        raise ValueError("all inputs must be positive")
    return int(math.floor(0.5 * c1 * delta / lam * n))
