"""Random ReLU layers x -> sqrt(2/n_out) * ReLU(Wx + b) and their composition.

W has i.i.d. standard Gaussian entries and b is uniform on [-lam, lam],
independent of W.  Sampling uses the pinned PCG64 generator with a fixed fill
order (row-major weights first, then bias), so a (seed, dims, lam) triple fully
determines a layer.  Exact bit reproducibility across BLAS/libm versions is
best-effort; the CSV dump is the escape hatch for freezing a layer exactly.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import DimensionMismatchError
from .geometry import PointSet, as_vector
from .seeding import MASK64, make_rng


class RandomReluLayer:
    """Immutable dithered ReLU layer with maximal bias lam and scale sqrt(2/n_out)."""

    __slots__ = ("weights", "bias", "lam", "n_in", "n_out", "scale", "seed")

    def __init__(self, weights, bias, lam: float, seed: int | None = None):
        W = np.asarray(weights, dtype=float)
        b = np.asarray(bias, dtype=float)
        if W.ndim != 2:
            raise ValueError(f"weights must be a 2-D matrix, got shape {W.shape}")
        if b.shape != (W.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match n_out={W.shape[0]}")
        if lam < 0:
            raise ValueError("maximal bias lambda must be nonnegative")
        if np.any(np.abs(b) > lam):
            raise ValueError("bias entries must lie in [-lambda, lambda]")
        W = W.copy()
        b = b.copy()
        W.setflags(write=False)
        b.setflags(write=False)
        self.weights = W
        self.bias = b
        self.lam = float(lam)
        self.n_in = int(W.shape[1])
        self.n_out = int(W.shape[0])
        self.scale = float(np.sqrt(2.0 / self.n_out))
        self.seed = seed

    def __repr__(self) -> str:
        return f"RandomReluLayer({self.n_in}->{self.n_out}, lambda={self.lam})"


def sample_layer(n_in: int, n_out: int, lam: float, seed: int) -> RandomReluLayer:
    """Draw a fresh layer; identical seeds give bitwise-identical layers."""
    if n_in < 1 or n_out < 1:
        raise ValueError("layer dimensions must be >= 1")
    rng = make_rng(seed)
    weights = rng.standard_normal((n_out, n_in))
    bias = rng.uniform(-lam, lam, n_out) if lam > 0 else np.zeros(n_out)
    return RandomReluLayer(weights, bias, lam, seed=seed & MASK64)


def apply(layer: RandomReluLayer, x) -> np.ndarray:
    """scale * ReLU(Wx + b); entrywise nonnegative."""
    v = as_vector(x)
    if v.shape[0] != layer.n_in:
        raise DimensionMismatchError(f"input dim {v.shape[0]} != layer n_in {layer.n_in}")
    return layer.scale * np.maximum(0.0, layer.weights @ v + layer.bias)


def apply_set(layer: RandomReluLayer, s: PointSet) -> PointSet:
    """Element-wise apply; preserves point order."""
    if s.dim != layer.n_in:
        raise DimensionMismatchError(f"set dim {s.dim} != layer n_in {layer.n_in}")
    pre = s.points @ layer.weights.T + layer.bias
    return PointSet(layer.scale * np.maximum(0.0, pre))


def pre_activations(layer: RandomReluLayer, s: PointSet) -> np.ndarray:
    """Wx + b for every point, shape (len(s), n_out); used by the separator builders."""
    if s.dim != layer.n_in:
        raise DimensionMismatchError(f"set dim {s.dim} != layer n_in {layer.n_in}")
    return s.points @ layer.weights.T + layer.bias


class TwoLayerNetwork:
    """Composition of two independent random ReLU layers."""

    __slots__ = ("first", "second")

    def __init__(self, first: RandomReluLayer, second: RandomReluLayer):
        if first.n_out != second.n_in:
            raise DimensionMismatchError(
                f"first.n_out={first.n_out} must equal second.n_in={second.n_in}"
            )
        self.first = first
        self.second = second


def sample_network(
    d: int, n: int, n_hat: int, lam: float, lam_hat: float, seed: int
) -> TwoLayerNetwork:
    """Two-layer network d -> n -> n_hat.

    The two layers use independent streams; the second layer's seed is derived
    as seed + 1 (a documented convention, the streams never overlap for PCG64
    with distinct seeds).
    """
    first = sample_layer(d, n, lam, seed)
    second = sample_layer(n, n_hat, lam_hat, (seed + 1) & MASK64)
    return TwoLayerNetwork(first, second)


def forward(net: TwoLayerNetwork, s: PointSet) -> PointSet:
    """Image of s under both layers."""
    return apply_set(net.second, apply_set(net.first, s))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def layer_to_json(layer: RandomReluLayer) -> str:
    """Binary-free record (dims, lambda, seed) for re-derivable sampled layers."""
    if layer.seed is None:
        raise ValueError("layer was injected, not sampled; use save_layer_csv instead")
    return json.dumps(
        {"n_in": layer.n_in, "n_out": layer.n_out, "lambda": layer.lam, "seed": layer.seed},
        sort_keys=True,
    )


def layer_from_json(text: str) -> RandomReluLayer:
    d = json.loads(text)
    return sample_layer(int(d["n_in"]), int(d["n_out"]), float(d["lambda"]), int(d["seed"]))


def save_layer_csv(layer: RandomReluLayer, path) -> None:
    """Full-matrix dump: one row per neuron, weight columns then the bias."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# lambda={layer.lam!r}\n")
        writer = csv.writer(fh)
        writer.writerow([f"w{i}" for i in range(layer.n_in)] + ["bias"])
        for w_row, b in zip(layer.weights, layer.bias):
            writer.writerow([repr(float(v)) for v in w_row] + [repr(float(b))])


def load_layer_csv(path) -> RandomReluLayer:
    with open(path, newline="") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("# lambda="):
            raise ValueError(f"{path}: missing '# lambda=' metadata line")
        lam = float(meta.split("=", 1)[1])
        reader = csv.reader(fh)
        header = next(reader)
        n_in = len(header) - 1
        rows = [list(map(float, row)) for row in reader]
    arr = np.asarray(rows, dtype=float)
    return RandomReluLayer(arr[:, :n_in], arr[:, n_in], lam)
