"""Complexity measures the separation guarantees consume.

Monte Carlo estimators for the Gaussian mean width w(X) = E sup_{x in X} <g, x>
and the width of the normalized-difference cone, a greedy covering construction,
mutual coverings/complexity, the union-width bound, and the theoretical theta
and margin formulas with explicit user-supplied absolute constants.

Estimators are chunked: sample chunk k uses generator seed (seed XOR k), and
chunk results merge by weighted averaging in chunk order, so the estimate is
bit-for-bit reproducible and independent of how many workers ran the chunks.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConeError,
    EmptyComponentError,
    EmptySetError,
    EstimatorError,
    HypothesisViolatedError,
    NotSeparatedError,
    OverflowBoundError,
)
from .geometry import PointSet, cross_distances, min_cross_distance, radius_bound
from .seeding import MASK64, derive_seed, make_rng

#: Samples per estimator chunk.  Fixed so that chunk boundaries (and hence the
#: exact floating-point result) do not depend on the worker count.
CHUNK_SIZE = 8192

#: exp() arguments beyond this magnitude leave the double range; raise instead.
EXP_OVERFLOW_LIMIT = 700.0


@dataclass(frozen=True)
class EstimatorResult:
    """Monte Carlo point estimate with its standard error and seed record."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int

    def within(self, target: float, k_sigma: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k_sigma * self.std_error


def _chunk_counts(n_samples: int) -> list[int]:
    full, rem = divmod(n_samples, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rem] if rem else [])


def run_chunked_estimator(value_fn, n_samples: int, seed: int, threads: int = 1) -> EstimatorResult:
    """Estimate E[V] where value_fn(rng, count) returns count i.i.d. samples of V.

    Chunk k draws from a fresh PCG64 generator seeded with (seed XOR k); the
    per-chunk sums are merged in chunk order, so results are identical for any
    thread count and reproduce bit-for-bit for a fixed seed.
    """
    if n_samples < 2:
        raise EstimatorError("n_samples must be >= 2 so the standard error is defined")
    counts = _chunk_counts(n_samples)

    def one_chunk(args):
        idx, count = args
        rng = make_rng((seed ^ idx) & MASK64)
        vals = np.asarray(value_fn(rng, count), dtype=float)
        return float(vals.sum()), float(np.square(vals).sum())

    jobs = list(enumerate(counts))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(one_chunk, jobs))
    else:
        partials = [one_chunk(j) for j in jobs]

    total = 0.0
    total_sq = 0.0
    for s, sq in partials:
        total += s
        total_sq += sq
    mean = total / n_samples
    var = max(0.0, (total_sq - n_samples * mean * mean) / (n_samples - 1))
    return EstimatorResult(
        estimate=mean,
        std_error=math.sqrt(var / n_samples),
        n_samples=n_samples,
        seed=seed & MASK64,
    )


def estimate_mean_width(s: PointSet, n_samples: int, seed: int, threads: int = 1) -> EstimatorResult:
    """Monte Carlo estimate of w(s) = E sup_{x in s} <g, x>, g standard Gaussian.

    For a finite sample of an infinite set this is a lower bound of the true
    width in expectation (the sup runs over a subset).
    """
    if len(s) == 0:
        raise EmptySetError("estimate_mean_width needs a nonempty set")
    pts_t = s.points.T  # (d, n)

    def draw(rng, count):
        g = rng.standard_normal((count, s.dim))
        return (g @ pts_t).max(axis=1)

    return run_chunked_estimator(draw, n_samples, seed, threads)


def normalized_difference_directions(s: PointSet) -> np.ndarray:
    """All normalized nonzero differences (x - x') / ||x - x'||, both signs.

    These span cone(s - s) intersected with the unit sphere for a finite s.
    """
    if len(s) < 2:
        raise DegenerateConeError("need at least two points to form differences")
    diffs = s.points[:, None, :] - s.points[None, :, :]
    iu = np.triu_indices(len(s), k=1)
    diffs = diffs[iu]
    norms = np.linalg.norm(diffs, axis=1)
    keep = norms > 0
    if not np.any(keep):
        raise DegenerateConeError("all points coincide; the difference cone is degenerate")
    unit = diffs[keep] / norms[keep, None]
    return np.vstack([unit, -unit])


def estimate_cone_width(s: PointSet, n_samples: int, seed: int, threads: int = 1) -> EstimatorResult:
    """Width of the normalized pairwise-difference set of s (finite-sample cone width)."""
    dirs_t = normalized_difference_directions(s).T  # (d, m)

    def draw(rng, count):
        g = rng.standard_normal((count, s.dim))
        return (g @ dirs_t).max(axis=1)

    return run_chunked_estimator(draw, n_samples, seed, threads)


# ---------------------------------------------------------------------------
# Greedy covering (farthest-point / Gonzalez ordering)
# ---------------------------------------------------------------------------

def farthest_point_ordering(s: PointSet) -> tuple[np.ndarray, np.ndarray]:
    """Farthest-point permutation of s and the residual covering radii.

    order[0] is point 0; order[k] is the point farthest from the first k
    chosen centers (ties to the lowest index).  residual[k] is the covering
    radius achieved by the first k+1 centers, a nonincreasing sequence, so a
    radius-r covering is the shortest prefix with residual <= r.
    """
    pts = s.points
    n = len(s)
    order = np.empty(n, dtype=int)
    residual = np.empty(n, dtype=float)
    order[0] = 0
    dist = np.linalg.norm(pts - pts[0], axis=1)
    for k in range(1, n):
        j = int(np.argmax(dist))
        residual[k - 1] = dist[j]
        order[k] = j
        dist = np.minimum(dist, np.linalg.norm(pts - pts[j], axis=1))
    residual[n - 1] = float(dist.max())  # 0 once every point is a center
    return order, residual


def greedy_covering(s: PointSet, r: float) -> PointSet:
    """Centers (a subset of s) whose radius-r balls cover s.

    The center count upper-bounds the covering number N(s, r); on a nested
    radius grid the counts are nonincreasing in r because the farthest-point
    ordering is shared across radii.
    """
    if r <= 0:
        raise ValueError("covering radius must be positive")
    order, residual = farthest_point_ordering(s)
    k = int(np.searchsorted(-residual, -r))  # first k with residual[k] <= r
    k = min(k + 1, len(s))
    return PointSet(s.points[order[:k]])


# ---------------------------------------------------------------------------
# Mutual covering and mutual complexity
# ---------------------------------------------------------------------------

@dataclass
class MutualCovering:
    """Class-wise ball covering with radii capped by cross-class distance.

    Validity: every point lies within the radius of its assigned center
    (coverage), and each radius r_j is at most lam^{-1} d^2(c_j, opposite
    centers) (proximity).
    """

    centers_plus: PointSet
    centers_minus: PointSet
    radii_plus: list[float]
    radii_minus: list[float]
    assignment_plus: list[int]
    assignment_minus: list[int]
    lam: float

    def n_plus(self) -> int:
        return len(self.centers_plus)

    def n_minus(self) -> int:
        return len(self.centers_minus)

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lam,
                "centers_plus": self.centers_plus.points.tolist(),
                "centers_minus": self.centers_minus.points.tolist(),
                "radii_plus": list(map(float, self.radii_plus)),
                "radii_minus": list(map(float, self.radii_minus)),
                "assignment_plus": list(map(int, self.assignment_plus)),
                "assignment_minus": list(map(int, self.assignment_minus)),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MutualCovering":
        d = json.loads(text)
        return cls(
            centers_plus=PointSet(np.asarray(d["centers_plus"], dtype=float)),
            centers_minus=PointSet(np.asarray(d["centers_minus"], dtype=float)),
            radii_plus=list(map(float, d["radii_plus"])),
            radii_minus=list(map(float, d["radii_minus"])),
            assignment_plus=list(map(int, d["assignment_plus"])),
            assignment_minus=list(map(int, d["assignment_minus"])),
            lam=float(d["lambda"]),
        )


def _greedy_cover_one_class(own: PointSet, opposite: PointSet, lam: float):
    """Greedy centers for one class; radii capped by lam^{-1} d^2(c, opposite data).

    Centers are data points and the final opposite center set is a subset of
    the opposite data, so d(c, opposite centers) >= d(c, opposite data) and the
    cap keeps the proximity condition valid against the finished covering.
    """
    pts = own.points
    n = len(own)
    dist_to_opp = cross_distances(own, opposite).min(axis=1)
    covered = np.zeros(n, dtype=bool)
    assignment = np.full(n, -1, dtype=int)
    center_idx: list[int] = []
    radii: list[float] = []
    dist_to_centers = np.full(n, np.inf)
    while not covered.all():
        uncovered = np.flatnonzero(~covered)
        if not center_idx:
            # start with the point farthest from the opposite class: the
            # far-bulk part gets the large-radius centers first
            pick = uncovered[int(np.argmax(dist_to_opp[uncovered]))]
        else:
            pick = uncovered[int(np.argmax(dist_to_centers[uncovered]))]
        cap = (dist_to_opp[pick] ** 2) / lam
        d_pick = np.linalg.norm(pts - pts[pick], axis=1)
        newly = (~covered) & (d_pick <= cap)
        newly[pick] = True  # the center always covers itself (distance 0)
        radius = float(d_pick[newly].max())
        j = len(center_idx)
        center_idx.append(int(pick))
        radii.append(radius)
        assignment[newly] = j
        covered |= newly
        dist_to_centers = np.minimum(dist_to_centers, d_pick)
    return PointSet(pts[center_idx]), radii, assignment.tolist()


def build_mutual_covering(x_plus: PointSet, x_minus: PointSet, lam: float) -> MutualCovering:
    """Greedy farthest-point mutual covering of two delta-separated classes.

    Always terminates: every candidate radius cap is at least lam^{-1} delta^2 > 0.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    delta = min_cross_distance(x_plus, x_minus)
    if delta == 0:
        raise NotSeparatedError("classes share a point; mutual covering needs delta > 0")
    centers_plus, radii_plus, assign_plus = _greedy_cover_one_class(x_plus, x_minus, lam)
    centers_minus, radii_minus, assign_minus = _greedy_cover_one_class(x_minus, x_plus, lam)
    return MutualCovering(
        centers_plus=centers_plus,
        centers_minus=centers_minus,
        radii_plus=radii_plus,
        radii_minus=radii_minus,
        assignment_plus=assign_plus,
        assignment_minus=assign_minus,
        lam=lam,
    )


def validate_mutual_covering(mc: MutualCovering, x_plus: PointSet, x_minus: PointSet):
    """Exact check of the coverage and proximity conditions.

    Returns (ok, violations) where violations lists every failing item; never
    raises on content.
    """
    violations: list[str] = []

    def check_side(side, points, centers, radii, assignment, opposite_centers):
        if len(assignment) != len(points):
            violations.append(f"{side}: assignment length {len(assignment)} != {len(points)} points")
            return
        # same vectorized distance computation as the builder, so that radii
        # assigned as exact maxima validate without float slack
        dist_to_center = [
            np.linalg.norm(points.points - centers.points[j], axis=1) for j in range(len(centers))
        ]
        for i, j in enumerate(assignment):
            if not (0 <= j < len(centers)):
                violations.append(f"{side}: point {i} assigned to missing component {j}")
                continue
            d = float(dist_to_center[j][i])
            if d > radii[j]:
                violations.append(f"{side}: point {i} at distance {d:.6g} outside radius {radii[j]:.6g} of component {j}")
        d_opp = cross_distances(centers, opposite_centers).min(axis=1)
        for j, r in enumerate(radii):
            cap = (d_opp[j] ** 2) / mc.lam
            if r > cap:
                violations.append(f"{side}: component {j} radius {r:.6g} exceeds lambda^-1 d^2 = {cap:.6g}")

    check_side("plus", x_plus, mc.centers_plus, mc.radii_plus, mc.assignment_plus, mc.centers_minus)
    check_side("minus", x_minus, mc.centers_minus, mc.radii_minus, mc.assignment_minus, mc.centers_plus)
    return (not violations), violations


def component_members(points: PointSet, centers: PointSet, radii, j: int) -> PointSet:
    """Data points of component j: the class intersected with the j-th ball."""
    d = np.linalg.norm(points.points - centers.points[j], axis=1)
    members = points.points[d <= radii[j]]
    if members.shape[0] == 0:
        raise EmptyComponentError(f"component {j} has no member points")
    return PointSet(members)


@dataclass(frozen=True)
class MutualComplexity:
    """Center counts, localized width bounds, and the ambient (R, delta) pair."""

    n_plus: int
    n_minus: int
    w_plus: float
    w_minus: float
    R: float
    delta: float
    lam: float


def measure_mutual_complexity(
    mc: MutualCovering,
    x_plus: PointSet,
    x_minus: PointSet,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> MutualComplexity:
    """Mutual complexity of a valid covering, widths estimated per component."""

    def side_width(points, centers, radii, sub):
        w = 0.0
        for j in range(len(centers)):
            members = component_members(points, centers, radii, j)
            if len(members) == 1:
                continue  # singleton components have width exactly 0
            est = estimate_mean_width(members, n_samples, derive_seed(seed, sub, j), threads)
            w = max(w, est.estimate)
        return w

    return MutualComplexity(
        n_plus=mc.n_plus(),
        n_minus=mc.n_minus(),
        w_plus=side_width(x_plus, mc.centers_plus, mc.radii_plus, 0x706C7573),
        w_minus=side_width(x_minus, mc.centers_minus, mc.radii_minus, 0x6D696E75),
        R=radius_bound(mc.centers_plus, mc.centers_minus),
        delta=min_cross_distance(mc.centers_plus, mc.centers_minus),
        lam=mc.lam,
    )


# ---------------------------------------------------------------------------
# Bound formulas
# ---------------------------------------------------------------------------

def union_width_bound(component_widths, R: float, C: float) -> float:
    """max_j w(X_j) + C * R * sqrt(log N) for N = number of components."""
    widths = list(component_widths)
    if not widths:
        raise EmptySetError("need at least one component width")
    if R <= 0 or C <= 0:
        raise ValueError("R and C must be positive")
    return float(max(widths) + C * R * math.sqrt(math.log(len(widths))))


def _checked_exp(exponent: float) -> float:
    if abs(exponent) > EXP_OVERFLOW_LIMIT:
        raise OverflowBoundError(
            f"exp argument {exponent:.6g} leaves the double-precision range"
        )
    return math.exp(exponent)


def compute_theta(alpha: float, lam: float, delta: float, C: float) -> float:
    """theta = exp(C (alpha^2 + lam^2) lam^6 delta^-8 log(lam/delta)).

    Requires lam/delta >= e (the regime of the second-layer width condition);
    theta >= 1 always holds there.
    """
    if delta <= 0 or lam <= 0:
        raise ValueError("lambda and delta must be positive")
    if C <= 0:
        raise ValueError("constant C must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if lam / delta < math.e:
        raise HypothesisViolatedError(f"need lambda/delta >= e, got {lam / delta:.6g}")
    exponent = C * (alpha**2 + lam**2) * lam**6 * delta**-8 * math.log(lam / delta)
    return _checked_exp(exponent)


@dataclass(frozen=True)
class TheoreticalBounds:
    """Inputs and outputs of the theta/margin formulas for one configuration.

    The absolute constants are not pinned by the underlying theory; they are
    explicit fields with defaults chosen so desk-scale runs produce
    non-degenerate numbers, and the calibrate command can refit them.
    """

    alpha: float
    lam: float
    lam_hat: float
    delta: float
    theta: float
    predicted_margin: float
    constant_C: float
    constant_c: float

    @classmethod
    def evaluate(
        cls,
        alpha: float,
        lam: float,
        lam_hat: float,
        delta: float,
        constant_c: float = 1.0,
        constant_C: float = 0.01,
        w_minus: float = 0.0,
        width_plus: float = 0.0,
    ) -> "TheoreticalBounds":
        theta = compute_theta(alpha, lam, delta, constant_C)
        partial = cls(
            alpha=alpha, lam=lam, lam_hat=lam_hat, delta=delta, theta=theta,
            predicted_margin=1.0, constant_C=constant_C, constant_c=constant_c,
        )
        margin = predicted_margin(partial, w_minus, width_plus)
        return cls(
            alpha=alpha, lam=lam, lam_hat=lam_hat, delta=delta, theta=theta,
            predicted_margin=margin, constant_C=constant_C, constant_c=constant_c,
        )


def predicted_margin(bounds: TheoreticalBounds, w_minus: float, width_plus: float) -> float:
    """Margin bound c s^2 / lam_hat * exp(-C s^2 lam^6 delta^-8 log(lam/delta)),
    with s = w_minus + width_plus + lam.

    Scales exactly as 1/lam_hat; out-of-double-range exponents raise rather
    than silently returning 0 or inf.
    """
    lam, delta = bounds.lam, bounds.delta
    if bounds.lam_hat <= 0:
        raise ValueError("lam_hat must be positive")
    if w_minus < 0 or width_plus < 0:
        raise ValueError("widths must be nonnegative")
    if lam / delta < math.e:
        raise HypothesisViolatedError(f"need lambda/delta >= e, got {lam / delta:.6g}")
    s = w_minus + width_plus + lam
    exponent = -bounds.constant_C * s**2 * lam**6 * delta**-8 * math.log(lam / delta)
    return bounds.constant_c * s**2 / bounds.lam_hat * _checked_exp(exponent)


# ---------------------------------------------------------------------------
# CSV logging of estimates
# ---------------------------------------------------------------------------

ESTIMATE_CSV_HEADER = ["quantity", "estimate", "std_error", "n_samples", "seed"]


def append_estimate_csv(path, quantity: str, res: EstimatorResult) -> None:
    """Append one estimator row, writing the header if the file is new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(ESTIMATE_CSV_HEADER)
        writer.writerow([quantity, repr(res.estimate), repr(res.std_error), res.n_samples, res.seed])
