"""Explicit separating hyperplanes built from the zero pattern of a ReLU layer.

A neuron i is inactive on the negative class when <w_i, x> + b_i <= 0 for
every negative point; the unit vector uniform on those indices has zero inner
product with every negative image and a quantifiable positive inner product
with the positive images, which yields the layer's explicit separator.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .complexity import MutualCovering, component_members
from .errors import EmptyIndicatorError, NoSeparatingNeuronError
from .geometry import PointSet, as_vector, cross_distances, min_cross_distance, radius_bound
from .layers import RandomReluLayer, apply, apply_set, pre_activations
from .separability import Hyperplane

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NeuronIndexSet:
    """Sorted neuron indices that are nonpositive on every point of the context set."""

    indices: tuple[int, ...]
    context: str

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class IndicatorSeparator:
    """Unit direction with equal mass 1/sqrt(|I|) on an index set, plus an offset."""

    direction: np.ndarray
    offset: float
    index_set: NeuronIndexSet

    def hyperplane(self) -> Hyperplane:
        return Hyperplane(direction=self.direction, offset=self.offset)


def negative_index_set(layer: RandomReluLayer, s: PointSet, slack: float = 0.0) -> NeuronIndexSet:
    """Indices i with <w_i, x> + b_i <= slack for all x in s.

    The defining condition is closed, so exact boundary cases count as members;
    slack defaults to 0 (exact floating comparison).
    """
    pre = pre_activations(layer, s)
    mask = np.all(pre <= slack, axis=0)
    return NeuronIndexSet(
        indices=tuple(int(i) for i in np.flatnonzero(mask)),
        context=f"nonpositive on {len(s)} points",
    )


def _uniform_indicator(indices, n: int) -> np.ndarray:
    u = np.zeros(n)
    u[list(indices)] = 1.0 / math.sqrt(len(indices))
    return u


def t_separating_counts(layer: RandomReluLayer, x_minus: PointSet, x_plus: PointSet, t: float) -> np.ndarray:
    """Per positive point, the number of neurons whose hyperplane t-separates
    the whole negative class from that point."""
    pre_minus = pre_activations(layer, x_minus)  # (n_minus, n)
    pre_plus = pre_activations(layer, x_plus)  # (n_plus, n)
    neg_ok = np.all(pre_minus <= -t, axis=0)  # (n,)
    return ((pre_plus > t) & neg_ok[None, :]).sum(axis=1)


def build_indicator_separator(
    layer: RandomReluLayer, x_minus: PointSet, x_plus: PointSet, t: float
) -> tuple[IndicatorSeparator, np.ndarray]:
    """Indicator separator of the layer images with offset -t n' / (2n).

    n' is the minimum over positive points of the count of t-separating
    neurons; every positive point needs at least one (checked), which also
    forces the indicator set to be nonempty.  The returned hyperplane
    t n'/(2n)-separates the images, and by construction

        <u, Phi(x-)> <= 0                            for all x-,
        <u, Phi(x+)> >= (1/n) sum_{i in I_{x+}} |<w_i, x+> + b_i|.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    counts = t_separating_counts(layer, x_minus, x_plus, t)
    if np.any(counts < 1):
        bad = int(np.argmin(counts))
        raise NoSeparatingNeuronError(
            f"positive point {bad} has no neuron t-separating it from the negative class (t={t})"
        )
    idx = negative_index_set(layer, x_minus)
    n_prime = int(counts.min())
    direction = _uniform_indicator(idx.indices, layer.n_out)
    offset = -t * n_prime / (2.0 * layer.n_out)
    return IndicatorSeparator(direction=direction, offset=offset, index_set=idx), counts


def per_point_separator(layer: RandomReluLayer, x_minus_point) -> IndicatorSeparator:
    """Normalized indicator of the zero coordinates of Phi(x-), offset 0.

    The caller checks the separation quality against whatever positive set it
    cares about; this only constructs the direction.
    """
    image = apply(layer, as_vector(x_minus_point))
    zero = np.flatnonzero(image == 0.0)
    if zero.size == 0:
        raise EmptyIndicatorError("layer image has no zero coordinate")
    idx = NeuronIndexSet(indices=tuple(int(i) for i in zero), context="zero coordinates of one point")
    return IndicatorSeparator(
        direction=_uniform_indicator(idx.indices, layer.n_out), offset=0.0, index_set=idx
    )


# ---------------------------------------------------------------------------
# Per-component first-layer geometry report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentCheck:
    component: int
    dist_sq: float
    margin_required: float
    margin_observed: float
    passed: bool


@dataclass(frozen=True)
class GeometryReport:
    components: tuple[ComponentCheck, ...]
    pass_fraction: float
    bias_condition_ok: bool


COMPONENT_CSV_HEADER = ["component", "dist_sq", "margin_required", "margin_observed", "pass"]


def write_component_report_csv(report: GeometryReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPONENT_CSV_HEADER)
        for c in report.components:
            writer.writerow(
                [c.component, repr(c.dist_sq), repr(c.margin_required), repr(c.margin_observed), c.passed]
            )


def first_layer_geometry_check(
    layer: RandomReluLayer,
    mc: MutualCovering,
    x_plus: PointSet,
    x_minus: PointSet,
    c: float,
    c_prime: float,
) -> GeometryReport:
    """Per minus-component check of the explicit first-layer hyperplane.

    For component l with center c_l, the hyperplane has the per-point indicator
    direction at c_l and offset -4 c' lam^-1 d^2(c_l, plus centers); it should
    separate the component's image from the positive image with margin at least
    min(2c', c/2) lam^-1 d^2(c_l, plus centers).  A violated bias condition
    (lam below R sqrt(log(lam/delta))) is logged, not fatal.
    """
    lam = layer.lam
    R = radius_bound(x_plus, x_minus)
    delta = min_cross_distance(x_plus, x_minus)
    bias_ok = True
    if lam > 0 and delta > 0 and lam / delta > 1.0:
        floor = R * math.sqrt(math.log(lam / delta))
        bias_ok = lam >= floor
        if not bias_ok:
            logger.warning(
                "bias condition not met: lambda=%.4g < R sqrt(log(lam/delta))=%.4g", lam, floor
            )
    image_plus = apply_set(layer, x_plus)
    d_to_plus_centers = cross_distances(mc.centers_minus, mc.centers_plus).min(axis=1)
    checks = []
    for l in range(mc.n_minus()):
        dist_sq = float(d_to_plus_centers[l] ** 2)
        sep = per_point_separator(layer, mc.centers_minus.points[l])
        offset = -4.0 * c_prime * dist_sq / lam
        required = min(2.0 * c_prime, c / 2.0) * dist_sq / lam
        members = component_members(x_minus, mc.centers_minus, mc.radii_minus, l)
        minus_side = apply_set(layer, members).points @ sep.direction + offset
        plus_side = image_plus.points @ sep.direction + offset
        observed = float(min(-minus_side.max(), plus_side.min()))
        checks.append(
            ComponentCheck(
                component=l,
                dist_sq=dist_sq,
                margin_required=required,
                margin_observed=observed,
                passed=observed >= required,
            )
        )
    frac = sum(c_.passed for c_ in checks) / len(checks) if checks else 0.0
    return GeometryReport(components=tuple(checks), pass_fraction=frac, bias_condition_ok=bias_ok)
