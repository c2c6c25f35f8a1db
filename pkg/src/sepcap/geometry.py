"""Dimension-checked point-set primitives and basic metric quantities.

Every downstream module consumes the two-class geometry through this module:
finite point sets of equal dimension, their minimal cross-class distance
(delta), per-class diameters, and the smallest centered ball containing both
classes.  Distances are plain double-precision pairwise scans; desk-scale
inputs make anything smarter unnecessary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptySetError


def as_vector(x) -> np.ndarray:
    """Validate and return a finite 1-D float vector of dimension >= 1."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a 1-D vector with d >= 1, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector coordinates must be finite")
    return v


class PointSet:
    """Immutable list of equal-dimension points, stored as an (n, d) array.

    Empty sets are rejected unless `allow_empty=True`; theorem hypotheses
    ("nonempty, delta-separated") are enforced at this boundary rather than
    propagated through the library.
    """

    __slots__ = ("points", "dim")

    def __init__(self, points, allow_empty: bool = False):
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError(f"expected an (n, d) array of points, got shape {arr.shape}")
        if arr.shape[0] == 0 and not allow_empty:
            raise EmptySetError("point set must be nonempty")
        if arr.shape[0] > 0 and arr.shape[1] < 1:
            raise ValueError("point dimension must be >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("all coordinates must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        self.points = arr
        self.dim = int(arr.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)}, dim={self.dim})"

    @classmethod
    def single(cls, x) -> "PointSet":
        return cls(as_vector(x)[None, :])


@dataclass(frozen=True)
class SeparationStats:
    """Minimal cross distance, per-class diameters, and containing radius."""

    delta: float
    diameter_minus: float
    diameter_plus: float
    radius_bound: float


def check_same_dim(a: PointSet, b: PointSet) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def cross_distances(a: PointSet, b: PointSet) -> np.ndarray:
    """All pairwise Euclidean distances, shape (len(a), len(b))."""
    check_same_dim(a, b)
    diff = a.points[:, None, :] - b.points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def min_cross_distance(a: PointSet, b: PointSet) -> float:
    """Minimum distance over all cross pairs; 0 iff the sets share a point."""
    if len(a) == 0 or len(b) == 0:
        raise EmptySetError("min_cross_distance needs two nonempty sets")
    return float(cross_distances(a, b).min())


def diameter(s: PointSet) -> float:
    """Largest pairwise distance within s (0 for singletons)."""
    if len(s) == 0:
        raise EmptySetError("diameter needs a nonempty set")
    if len(s) == 1:
        return 0.0
    return float(cross_distances(s, s).max())


def radius_bound(*sets: PointSet) -> float:
    """Smallest R such that every given set lies in R * B_2^d."""
    norms = [np.linalg.norm(s.points, axis=1).max() if len(s) else 0.0 for s in sets]
    return float(max(norms)) if norms else 0.0


def set_stats(a: PointSet, b: PointSet) -> SeparationStats:
    """Exhaustive-scan summary of the two-class geometry."""
    return SeparationStats(
        delta=min_cross_distance(a, b),
        diameter_minus=diameter(a),
        diameter_plus=diameter(b),
        radius_bound=radius_bound(a, b),
    )


# ---------------------------------------------------------------------------
# Serialization: CSV with header x0..x{d-1}, and JSON arrays-of-arrays.
# ---------------------------------------------------------------------------

def save_points_csv(s: PointSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(s.dim)])
        for row in s.points:
            writer.writerow([repr(float(v)) for v in row])


def load_points_csv(path) -> PointSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        d = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d:
                raise ValueError(f"{path}:{lineno}: ragged row ({len(row)} fields, expected {d})")
            rows.append([float(v) for v in row])
    return PointSet(np.asarray(rows, dtype=float).reshape(len(rows), d))


def points_to_json(s: PointSet) -> str:
    return json.dumps([[float(v) for v in row] for row in s.points])


def points_from_json(text: str) -> PointSet:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("expected a JSON array of point arrays")
    lengths = {len(row) for row in data}
    if len(lengths) > 1:
        raise ValueError(f"ragged rows in JSON point set: lengths {sorted(lengths)}")
    return PointSet(np.asarray(data, dtype=float))
