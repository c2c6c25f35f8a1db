"""Closed-form expectations of the dithered ReLU kernel and statistical checks
of the geometry-preservation behaviour of a random ReLU layer.

The exact formulas (with u ~ uniform on [-lam, lam], mn = min(a,b), mx = max(a,b)):

    E[ReLU(a+u) ReLU(b+u)] = ab/2 + mn^2 mx/(4 lam) - mn^3/(12 lam)
                             + (a+b) lam/4 + lam^2/6

and, for the full layer with standard Gaussian rows,

    E <Phi(x+), Phi(x-)> = <x+, x-> + lam^2/3 + sqrt(2/pi) ||x+ - x-||^3 / (6 lam)
    E ||Phi(x)||^2       = ||x||^2 + lam^2/3
    E ||Phi(x+) - Phi(x-)||^2 = ||x+ - x-||^2 (1 - sqrt(2/pi) ||x+ - x-|| / (3 lam))

The inner-product and distance formulas are asymptotic targets for lam large
relative to the point radius; the deviation checks quantify the slack
empirically instead of tracking it symbolically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .complexity import EstimatorResult, estimate_mean_width
from .errors import HypothesisViolatedError
from .geometry import PointSet, as_vector, check_same_dim, radius_bound
from .layers import RandomReluLayer, apply_set, sample_layer
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class KernelParams:
    """Arguments of the dithered ReLU kernel; |a|, |b| must not exceed lam."""

    lam: float
    a: float
    b: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if abs(self.a) > self.lam or abs(self.b) > self.lam:
            raise HypothesisViolatedError(
                f"|a|={abs(self.a):.6g}, |b|={abs(self.b):.6g} must be <= lambda={self.lam:.6g}"
            )


def relu_kernel_expectation(p: KernelParams) -> float:
    """Exact E[ReLU(a+u) ReLU(b+u)] for u uniform on [-lam, lam]."""
    mn, mx = min(p.a, p.b), max(p.a, p.b)
    return (
        p.a * p.b / 2.0
        + mn * mn * mx / (4.0 * p.lam)
        - mn**3 / (12.0 * p.lam)
        + (p.a + p.b) * p.lam / 4.0
        + p.lam * p.lam / 6.0
    )


def expected_inner_product(x_plus, x_minus, lam: float) -> float:
    """<x+, x-> + lam^2/3 + sqrt(2/pi) ||x+ - x-||^3 / (6 lam).

    The cubic correction vanishes for coinciding points, in which case lam = 0
    is also allowed (the formula degenerates to the norm identity).
    """
    xp = as_vector(x_plus)
    xm = as_vector(x_minus)
    if xp.shape != xm.shape:
        raise ValueError("points must share a dimension")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    dist = float(np.linalg.norm(xp - xm))
    base = float(xp @ xm) + lam * lam / 3.0
    if dist == 0.0:
        return base
    if lam == 0.0:
        raise ValueError("lambda must be positive when the points differ")
    return base + SQRT_2_OVER_PI * dist**3 / (6.0 * lam)


def expected_squared_distance(x_plus, x_minus, lam: float) -> float:
    """||x+ - x-||^2 (1 - sqrt(2/pi) ||x+ - x-|| / (3 lam))."""
    xp = as_vector(x_plus)
    xm = as_vector(x_minus)
    if xp.shape != xm.shape:
        raise ValueError("points must share a dimension")
    dist = float(np.linalg.norm(xp - xm))
    if dist == 0.0:
        return 0.0
    if lam <= 0:
        raise ValueError("lambda must be positive when the points differ")
    return dist * dist * (1.0 - SQRT_2_OVER_PI * dist / (3.0 * lam))


def expected_squared_norm(x, lam: float) -> float:
    """||x||^2 + lam^2/3; lam = 0 reduces to the plain squared norm."""
    v = as_vector(x)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return float(v @ v) + lam * lam / 3.0


# ---------------------------------------------------------------------------
# Layer-ensemble deviation checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationReport:
    """Worst observed deviation from the three expectation formulas."""

    max_abs_deviation: float
    epsilon_target: float
    n_used: int
    passed: bool
    max_dev_dist: float
    max_dev_norm: float
    max_dev_ip: float
    pass_fraction: float
    n_layers: int
    lam: float
    seed: int

    CSV_HEADER = "n,lambda,epsilon_target,max_dev_dist,max_dev_norm,max_dev_ip,pass_fraction,seed"

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.n_used),
                repr(self.lam),
                repr(self.epsilon_target),
                repr(self.max_dev_dist),
                repr(self.max_dev_norm),
                repr(self.max_dev_ip),
                repr(self.pass_fraction),
                str(self.seed),
            ]
        )


def _layer_deviations(layer: RandomReluLayer, x_plus: PointSet, x_minus: PointSet, lam: float):
    """Max deviation of distance/norm/inner-product against the formulas."""
    yp = apply_set(layer, x_plus).points
    ym = apply_set(layer, x_minus).points
    dist_in = np.linalg.norm(
        x_plus.points[:, None, :] - x_minus.points[None, :, :], axis=2
    )
    # expected values, vectorized over all cross pairs
    exp_dist_sq = dist_in**2
    if lam > 0:
        exp_dist_sq = exp_dist_sq * (1.0 - SQRT_2_OVER_PI * dist_in / (3.0 * lam))
        cubic = SQRT_2_OVER_PI * dist_in**3 / (6.0 * lam)
    else:
        cubic = np.zeros_like(dist_in)
    exp_ip = x_plus.points @ x_minus.points.T + lam * lam / 3.0 + cubic
    obs_dist_sq = np.sum(
        (yp[:, None, :] - ym[None, :, :]) ** 2, axis=2
    )
    obs_ip = yp @ ym.T
    dev_dist = float(np.abs(obs_dist_sq - exp_dist_sq).max())
    dev_ip = float(np.abs(obs_ip - exp_ip).max())
    all_pts = np.vstack([x_plus.points, x_minus.points])
    all_img = np.vstack([yp, ym])
    exp_norm = np.sum(all_pts**2, axis=1) + lam * lam / 3.0
    obs_norm = np.sum(all_img**2, axis=1)
    dev_norm = float(np.abs(obs_norm - exp_norm).max())
    return dev_dist, dev_norm, dev_ip


def hypothesis_diagnostics(x_plus: PointSet, x_minus: PointSet, lam: float, n: int, epsilon: float) -> dict:
    """Log how the inputs sit relative to the theorem's width/bias conditions.

    The absolute constants are unspecified, so this only reports the raw
    comparisons (with constant 1) instead of hard-failing.
    """
    R = radius_bound(x_plus, x_minus)
    diag = {"R": R, "lam": lam, "n": n, "epsilon": epsilon}
    if lam > 0 and epsilon > 0:
        ratio = lam * lam / epsilon
        bias_floor = R * math.sqrt(math.log(ratio)) if ratio >= 1.0 else 0.0
        diag["bias_floor"] = bias_floor
        diag["bias_ok"] = lam >= bias_floor
        if not diag["bias_ok"]:
            logger.warning(
                "bias condition not met: lambda=%.4g < R sqrt(log(lam^2/eps))=%.4g", lam, bias_floor
            )
    return diag


def empirical_deviation(
    x_plus_set: PointSet,
    x_minus_set: PointSet,
    lam: float,
    n: int,
    n_layers: int,
    epsilon_target: float,
    seed: int,
) -> DeviationReport:
    """Sample n_layers independent width-n layers and record the worst deviations."""
    check_same_dim(x_plus_set, x_minus_set)
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    hypothesis_diagnostics(x_plus_set, x_minus_set, lam, n, epsilon_target)
    d = x_plus_set.dim
    worst = np.zeros(3)
    passes = 0
    for k in range(n_layers):
        layer = sample_layer(d, n, lam, derive_seed(seed, k))
        devs = _layer_deviations(layer, x_plus_set, x_minus_set, lam)
        worst = np.maximum(worst, devs)
        if max(devs) <= epsilon_target:
            passes += 1
    max_dev = float(worst.max())
    return DeviationReport(
        max_abs_deviation=max_dev,
        epsilon_target=epsilon_target,
        n_used=n,
        passed=max_dev <= epsilon_target,
        max_dev_dist=float(worst[0]),
        max_dev_norm=float(worst[1]),
        max_dev_ip=float(worst[2]),
        pass_fraction=passes / n_layers,
        n_layers=n_layers,
        lam=lam,
        seed=seed,
    )


def width_after_layer_check(
    s: PointSet, lam: float, n: int, n_samples: int, seed: int
) -> tuple[EstimatorResult, EstimatorResult, bool]:
    """Compare w(Phi(s)) against w(sqrt(2/n) W s) for one sampled W.

    The ReLU contraction makes the first at most the second; the verdict allows
    4 joint standard errors of estimator slack.
    """
    layer = sample_layer(s.dim, n, lam, derive_seed(seed, 0))
    image = apply_set(layer, s)
    linear = PointSet(s.points @ (layer.scale * layer.weights).T)
    w_after = estimate_mean_width(image, n_samples, derive_seed(seed, 1))
    w_matrix = estimate_mean_width(linear, n_samples, derive_seed(seed, 2))
    joint_se = math.hypot(w_after.std_error, w_matrix.std_error)
    verdict = w_after.estimate <= w_matrix.estimate + 4.0 * joint_se
    return w_after, w_matrix, verdict


@dataclass(frozen=True)
class ConeTransformReport:
    """Outcome of one random-matrix cone-preservation probe."""

    hypotheses_hold: bool
    conclusion_holds: bool
    image_in_double_radius: bool

    @property
    def ok(self) -> bool:
        # vacuously true when the hypothesis inequalities fail for the draw
        return self.conclusion_holds if self.hypotheses_hold else True


def cone_transform_check(
    direction,
    s: PointSet,
    k: int,
    kappa: float,
    alpha: float,
    beta: float,
    seed: int,
    matrix: np.ndarray | None = None,
    slack: float = 1e-9,
) -> ConeTransformReport:
    """Check the cone-preservation implication for A = G / sqrt(k).

    Given a unit direction u with <u, x> >= t ||x|| on s (t computed from the
    inputs), the conclusion tested is, for all x in s,

        <Au/||Au||, Ax> >= t/sqrt(1+kappa) ||Ax|| - kappa/sqrt(2)
                           - sqrt(2) (3R/2 + t) beta - 3/sqrt(2) (1+R) alpha

    whenever the three hypothesis inequalities hold for the draw (norm of Au
    within kappa, distances ||u - x|| within alpha, norms ||x|| within beta).
    An injected matrix replaces the Gaussian draw (used by the identity test).
    """
    u = as_vector(direction)
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise ValueError("direction must be nonzero")
    u = u / nrm
    if kappa <= 0 or kappa > 0.5:
        raise ValueError("kappa must lie in (0, 1/2]")
    pts = s.points
    norms = np.linalg.norm(pts, axis=1)
    R = float(max(norms.max(), 1.0))
    if alpha < 0 or beta < 0 or alpha > R or beta > R:
        raise ValueError("alpha and beta must lie in [0, R]")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = (pts @ u) / norms
    if np.any(norms > 0):
        t_raw = float(np.nanmin(ratios))
        if t_raw < 0:
            raise ValueError("direction does not certify a spherical cone for s (negative <u, x>)")
        t = min(t_raw, 1.0)
    else:
        t = 1.0
    if matrix is None:
        G = make_rng(seed).standard_normal((k, s.dim))
        A = G / math.sqrt(k)
    else:
        A = np.asarray(matrix, dtype=float)
    Au = A @ u
    Apts = pts @ A.T
    au_sq = float(Au @ Au)
    hyp1 = (1.0 - kappa) <= au_sq <= (1.0 + kappa)
    d_before = np.linalg.norm(pts - u, axis=1)
    d_after = np.linalg.norm(Apts - Au, axis=1)
    hyp2 = bool(np.all(np.abs(d_after - d_before) <= alpha + slack))
    n_after = np.linalg.norm(Apts, axis=1)
    hyp3 = bool(np.all(np.abs(n_after - norms) <= beta + slack))
    hypotheses = hyp1 and hyp2 and hyp3
    floor = (
        t / math.sqrt(1.0 + kappa) * n_after
        - kappa / math.sqrt(2.0)
        - math.sqrt(2.0) * (1.5 * R + t) * beta
        - 3.0 / math.sqrt(2.0) * (1.0 + R) * alpha
    )
    lhs = Apts @ (Au / math.sqrt(au_sq))
    conclusion = bool(np.all(lhs >= floor - slack))
    in_ball = bool(np.all(n_after <= 2.0 * R + slack))
    return ConeTransformReport(
        hypotheses_hold=hypotheses,
        conclusion_holds=conclusion,
        image_in_double_radius=in_ball,
    )
