"""Seeded generators for every data configuration the experiments exercise.

Each generator is a pure function of its config: fixed (kind, sizes, seed)
reproduce identical point sets.  Infinite shapes (balls, spheres, subspaces,
hulls) are represented by dense finite samples whose density is an explicit
config field, and every generator verifies delta-separation and containment
before returning.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InfeasibleScenarioError
from .geometry import PointSet, min_cross_distance, radius_bound
from .seeding import make_rng

SCENARIO_KINDS = (
    "finite_labeled",
    "ball_union",
    "sphere_vs_ball",
    "bulk_with_outliers",
    "subspace_union",
    "convex_hull_cloud",
)

#: Total rejection budget per generator call.
REJECTION_BUDGET = 100_000


@dataclass
class ScenarioConfig:
    """Parameters of one generated two-class instance.

    n_minus / n_plus count points for finite_labeled and samples for
    sphere_vs_ball; for the structured kinds they count components (balls,
    subspaces, hull clouds) sampled with points_per_component points each.
    """

    kind: str
    dim: int
    delta: float
    seed: int
    n_minus: int = 1
    n_plus: int = 1
    points_per_component: int = 32
    radius: float = 0.0
    outlier_pairs: int = 2
    subspace_dim: int = 1
    hull_vertices: int = 8
    radius_bound: float = 1.0
    centers_minus: list | None = field(default=None, repr=False)
    centers_plus: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise InfeasibleScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.dim < 1 or self.delta <= 0:
            raise InfeasibleScenarioError("need dim >= 1 and delta > 0")
        if self.n_minus < 1 or self.n_plus < 1 or self.points_per_component < 1:
            raise InfeasibleScenarioError("counts must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            return cls(**d)
        except TypeError as exc:
            raise InfeasibleScenarioError(f"bad scenario config: {exc}") from exc


def small_radius_regime(cfg: ScenarioConfig) -> bool:
    """Whether the inner radius sits in the benign r <= 1/sqrt(d) regime."""
    return cfg.radius <= 1.0 / math.sqrt(cfg.dim)


def _uniform_ball(rng, count: int, dim: int, radius: float = 1.0) -> np.ndarray:
    """Uniform samples of radius * B_2^d (direction times U^(1/d) radius)."""
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / dim)
    return g * r[:, None]


def _uniform_sphere(rng, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _verify(cfg: ScenarioConfig, minus: PointSet, plus: PointSet) -> tuple[PointSet, PointSet]:
    delta = min_cross_distance(minus, plus)
    if delta < cfg.delta * (1.0 - 1e-12):
        raise InfeasibleScenarioError(
            f"generated sets are only {delta:.6g}-separated, needed {cfg.delta:.6g}"
        )
    R = radius_bound(minus, plus)
    if R > cfg.radius_bound * (1.0 + 1e-12):
        raise InfeasibleScenarioError(
            f"generated sets reach radius {R:.6g} > bound {cfg.radius_bound:.6g}"
        )
    return minus, plus


def gen_finite_labeled(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """n_minus + n_plus uniform points of B_2^d, rejected into delta-separation.

    Negative points are placed freely; each positive candidate is rejected
    while within delta of any negative point, in a fixed draw order.
    """
    if cfg.delta > 2.0 * cfg.radius_bound:
        raise InfeasibleScenarioError(
            f"delta={cfg.delta:.6g} exceeds the diameter {2 * cfg.radius_bound:.6g} of the ball"
        )
    rng = make_rng(cfg.seed)
    R = cfg.radius_bound
    minus = _uniform_ball(rng, cfg.n_minus, cfg.dim, R)
    plus = np.empty((cfg.n_plus, cfg.dim))
    budget = REJECTION_BUDGET
    have = 0
    while have < cfg.n_plus:
        if budget <= 0:
            raise InfeasibleScenarioError(
                f"rejection budget exhausted: delta={cfg.delta:.6g} too large for the requested counts"
            )
        cand = _uniform_ball(rng, 1, cfg.dim, R)[0]
        budget -= 1
        if np.linalg.norm(minus - cand, axis=1).min() >= cfg.delta:
            plus[have] = cand
            have += 1
    return _verify(cfg, PointSet(minus), PointSet(plus))


def _sample_separated_centers(rng, count_minus, count_plus, dim, min_cross, reach):
    """Centers in reach * B with cross-class distances >= min_cross."""
    minus = _uniform_ball(rng, count_minus, dim, reach)
    plus = np.empty((count_plus, dim))
    budget = REJECTION_BUDGET
    have = 0
    while have < count_plus:
        if budget <= 0:
            raise InfeasibleScenarioError("cannot pack centers at the requested separation")
        cand = _uniform_ball(rng, 1, dim, reach)[0]
        budget -= 1
        if np.linalg.norm(minus - cand, axis=1).min() >= min_cross:
            plus[have] = cand
            have += 1
    return minus, plus


def gen_ball_union(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Each class is a union of radius-r balls, densely sampled.

    Cross-class centers are kept delta + 2r apart so the samples are
    delta-separated; within a class the balls may overlap arbitrarily.
    Explicit centers (config fields) override the sampling.  r = 0 reduces to
    finite point classes.
    """
    r = cfg.radius
    if r < 0:
        raise InfeasibleScenarioError("ball radius must be nonnegative")
    reach = cfg.radius_bound - r
    if reach <= 0:
        raise InfeasibleScenarioError("ball radius exceeds the containment bound")
    rng = make_rng(cfg.seed)
    if cfg.centers_minus is not None and cfg.centers_plus is not None:
        c_minus = np.asarray(cfg.centers_minus, dtype=float)
        c_plus = np.asarray(cfg.centers_plus, dtype=float)
    else:
        if cfg.delta + 2 * r > 2 * reach:
            raise InfeasibleScenarioError("center separation delta + 2r exceeds the reachable diameter")
        c_minus, c_plus = _sample_separated_centers(
            rng, cfg.n_minus, cfg.n_plus, cfg.dim, cfg.delta + 2 * r, reach
        )
    m = cfg.points_per_component

    def sample_class(centers):
        if r == 0.0:
            return centers.copy()
        parts = [center + _uniform_ball(rng, m, cfg.dim, r) for center in centers]
        # include the centers so the sampled set witnesses the nominal geometry
        parts.append(centers)
        return np.vstack(parts)

    return _verify(cfg, PointSet(sample_class(c_minus)), PointSet(sample_class(c_plus)))


def gen_sphere_vs_ball(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Thin hypersphere (minus) around a small concentric ball (plus).

    Minus: n_minus samples of S^{d-1}; plus: n_plus samples of r * B_2^d.
    The norm gap makes the sets exactly (1 - r)-separated, so 1 - r >= delta
    is required.
    """
    r = cfg.radius
    if not (0.0 <= r < 1.0):
        raise InfeasibleScenarioError("inner radius must lie in [0, 1)")
    if 1.0 - r < cfg.delta:
        raise InfeasibleScenarioError(f"gap 1 - r = {1 - r:.6g} is below delta = {cfg.delta:.6g}")
    rng = make_rng(cfg.seed)
    minus = _uniform_sphere(rng, cfg.n_minus, cfg.dim)
    plus = _uniform_ball(rng, cfg.n_plus, cfg.dim, r) if r > 0 else np.zeros((cfg.n_plus, cfg.dim))
    return _verify(cfg, PointSet(minus), PointSet(plus))


def gen_bulk_with_outliers(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Two far bulks plus outlier pairs at exactly delta from each other.

    The bulks sit at +-0.7 e1 with radius 0.15, the outlier pairs straddle the
    midplane at spacing max(2 delta, 0.1) along e2.  Designed so a uniform
    covering at scale delta^2/lam is large while the mutual covering stays
    small.  Requires d >= 2 and delta <= 0.2.
    """
    if cfg.dim < 2:
        raise InfeasibleScenarioError("bulk_with_outliers needs dim >= 2")
    if cfg.delta > 0.2:
        raise InfeasibleScenarioError("bulk_with_outliers expects delta <= 0.2")
    rng = make_rng(cfg.seed)
    m = cfg.points_per_component
    bulk_r = 0.15
    e1 = np.zeros(cfg.dim)
    e1[0] = 1.0
    e2 = np.zeros(cfg.dim)
    e2[1] = 1.0
    minus_parts = [-0.7 * e1 + _uniform_ball(rng, m, cfg.dim, bulk_r)]
    plus_parts = [0.7 * e1 + _uniform_ball(rng, m, cfg.dim, bulk_r)]
    spacing = max(2.0 * cfg.delta, 0.1)
    for k in range(cfg.outlier_pairs):
        mid = (k - (cfg.outlier_pairs - 1) / 2.0) * spacing * e2
        minus_parts.append(mid[None, :] - 0.5 * cfg.delta * e1[None, :])
        plus_parts.append(mid[None, :] + 0.5 * cfg.delta * e1[None, :])
    minus = PointSet(np.vstack(minus_parts))
    plus = PointSet(np.vstack(plus_parts))
    got = min_cross_distance(minus, plus)
    if cfg.outlier_pairs > 0 and abs(got - cfg.delta) > 1e-12:
        raise InfeasibleScenarioError(f"outlier construction drifted: delta={got!r}")
    return _verify(cfg, minus, plus)


def _random_orthonormal(rng, dim: int, k: int) -> np.ndarray:
    """Orthonormal basis of a uniformly random k-dim subspace, as a (dim, k) matrix."""
    q, r = np.linalg.qr(rng.standard_normal((dim, k)))
    return q * np.sign(np.diag(r))[None, :]


def _separate_by_translation(cfg: ScenarioConfig, minus_raw, plus_raw, rng):
    """Translate the classes apart along a random direction and rescale into the ball.

    The shift grows geometrically until the post-rescaling separation clears
    delta; both classes shrink by the same factor, so their internal shape is
    preserved up to scale.
    """
    u = _uniform_sphere(rng, 1, cfg.dim)[0]
    shift = cfg.delta
    for _ in range(60):
        minus = minus_raw - shift * u
        plus = plus_raw + shift * u
        R = max(
            np.linalg.norm(minus, axis=1).max(),
            np.linalg.norm(plus, axis=1).max(),
            1e-12,
        )
        scale = cfg.radius_bound / R
        m_set = PointSet(minus * scale)
        p_set = PointSet(plus * scale)
        if min_cross_distance(m_set, p_set) >= cfg.delta:
            return _verify(cfg, m_set, p_set)
        shift *= 1.5
    raise InfeasibleScenarioError("translation search failed to reach delta-separation")


def gen_subspace_union(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Classes sampled from unions of random low-dimensional subspaces.

    Each class draws n_minus (resp. n_plus) subspaces of dimension
    subspace_dim and points_per_component points per subspace with
    coefficients uniform in the unit ball; the classes are then translated
    apart and rescaled into the containment ball.
    """
    k = cfg.subspace_dim
    if not (1 <= k <= cfg.dim):
        raise InfeasibleScenarioError("subspace_dim must lie in [1, dim]")
    rng = make_rng(cfg.seed)

    def sample_class(n_components):
        parts = []
        for _ in range(n_components):
            basis = _random_orthonormal(rng, cfg.dim, k)
            coeff = _uniform_ball(rng, cfg.points_per_component, k)
            parts.append(coeff @ basis.T)
        return np.vstack(parts)

    minus_raw = sample_class(cfg.n_minus)
    plus_raw = sample_class(cfg.n_plus)
    return _separate_by_translation(cfg, minus_raw, plus_raw, rng)


def gen_convex_hull_cloud(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Classes sampled from convex hulls of hull_vertices random points of B_2^d."""
    N = cfg.hull_vertices
    if N < 1:
        raise InfeasibleScenarioError("hull_vertices must be >= 1")
    rng = make_rng(cfg.seed)

    def sample_class(n_components):
        parts = []
        for _ in range(n_components):
            vertices = _uniform_ball(rng, N, cfg.dim)
            weights = rng.dirichlet(np.ones(N), size=cfg.points_per_component)
            parts.append(weights @ vertices)
            parts.append(vertices)  # hull vertices witness the extreme geometry
        return np.vstack(parts)

    minus_raw = sample_class(cfg.n_minus)
    plus_raw = sample_class(cfg.n_plus)
    return _separate_by_translation(cfg, minus_raw, plus_raw, rng)


_GENERATORS = {
    "finite_labeled": gen_finite_labeled,
    "ball_union": gen_ball_union,
    "sphere_vs_ball": gen_sphere_vs_ball,
    "bulk_with_outliers": gen_bulk_with_outliers,
    "subspace_union": gen_subspace_union,
    "convex_hull_cloud": gen_convex_hull_cloud,
}


def generate(cfg: ScenarioConfig) -> tuple[PointSet, PointSet]:
    """Dispatch to the generator for cfg.kind; returns (minus, plus)."""
    return _GENERATORS[cfg.kind](cfg)


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of cfg with a different seed (used for per-trial derivation)."""
    d = asdict(cfg)
    d["seed"] = seed & ((1 << 64) - 1)
    return ScenarioConfig(**d)
