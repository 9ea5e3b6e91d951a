"""Coordinate-wise prediction network with a coordinate-averaging
interaction stage and a linear skip connection.

Three per-coordinate features go through a bias-free dense block
(3 -> 6 -> 12 -> 3); the block outputs are averaged over coordinates,
duplicated back to every row, and concatenated with the original
features.  That 6-feature augmentation feeds a second bias-free block
(6 -> 12 -> 1) plus a bias-free linear layer (6 -> 1) acting as a skip
connection.  Rectifiers follow every layer except the last of each
block and the skip.  Total parameter count: 216.

Weight sharing across coordinates and the exact (fsum-based) averaging
make the forward pass exactly permutation equivariant, and the bias-free
rectifier layers make it positively homogeneous of degree one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ShapeError
from .numerics import (
    Rng,
    column,
    concat_cols,
    dense,
    mean_rows,
    relu,
    repeat_rows,
    value_of,
)

N_FEATURES = 3
LAYER_SHAPES = (
    ("block1.0", 6, 3),
    ("block1.1", 12, 6),
    ("block1.2", 3, 12),
    ("block2.0", 12, 6),
    ("block2.1", 1, 12),
    ("skip", 1, 6),
)
PARAM_COUNT = sum(r * c for _, r, c in LAYER_SHAPES)  # 216
WEIGHT_FORMAT_VERSION = 1

# selects the 5th augmented feature: (avg0, avg1, avg2, B dg, d, -g B grad)
SKIP_INIT = np.array([[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class ModelWeights:
    """The six bias-free weight matrices, each shaped (out, in)."""

    block1: tuple
    block2: tuple
    skip: np.ndarray

    def __post_init__(self):
        for (name, rows, cols), w in zip(LAYER_SHAPES, self.layers()):
            if np.shape(w) != (rows, cols):
                raise ShapeError(
                    f"layer {name} has shape {np.shape(w)}, expected {(rows, cols)}"
                )
        assert param_count(self) == PARAM_COUNT

    def layers(self):
        return (*self.block1, *self.block2, self.skip)


def param_count(weights) -> int:
    return sum(np.asarray(value_of(w)).size for w in weights.layers())


def forward(weights, inputs):
    """Per-coordinate prediction from an (n, 3) feature matrix.

    `weights` may hold numpy arrays or tape nodes; likewise `inputs`.
    """
    shape = np.shape(value_of(inputs))
    if len(shape) != 2 or shape[1] != N_FEATURES:
        raise ShapeError(f"expected an (n, {N_FEATURES}) input, got {shape}")
    n = shape[0]
    h = relu(dense(inputs, weights.block1[0]))
    h = relu(dense(h, weights.block1[1]))
    h = dense(h, weights.block1[2])
    aug = concat_cols(repeat_rows(mean_rows(h), n), inputs)
    z = relu(dense(aug, weights.block2[0]))
    z = dense(z, weights.block2[1])
    out = z + dense(aug, weights.skip)
    return column(out, 0)


def _fan_in_uniform(rng: Rng, rows: int, cols: int, scale: float = 1.0) -> np.ndarray:
    bound = scale * np.sqrt(1.0 / cols)
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_bfgs_coincident(seed: int = 0) -> ModelWeights:
    """Weights whose forward output is exactly the second input column.

    The last block-2 layer is zero and the skip selects the 5th
    augmented feature, so the prediction equals the step-difference
    feature no matter what the seeded earlier layers contain.  Plugged
    into the quasi-Newton update this reproduces classical BFGS.
    """
    rng = Rng(seed, "coincident-init")
    block1 = tuple(
        _fan_in_uniform(rng.substream(name), rows, cols)
        for name, rows, cols in LAYER_SHAPES[:3]
    )
    first2 = _fan_in_uniform(rng.substream("block2.0"), 12, 6)
    return ModelWeights(
        block1=block1,
        block2=(first2, np.zeros((1, 12))),
        skip=SKIP_INIT.copy(),
    )


def random_weights(rng: Rng, scale: float = 1.0) -> ModelWeights:
    """Fully random fan-in-uniform weights (not BFGS-coincident)."""
    mats = [
        _fan_in_uniform(rng.substream(name), rows, cols, scale)
        for name, rows, cols in LAYER_SHAPES
    ]
    return ModelWeights(block1=tuple(mats[:3]), block2=tuple(mats[3:5]), skip=mats[5])


def weights_to_vector(weights: ModelWeights) -> np.ndarray:
    return np.concatenate([np.asarray(w).ravel() for w in weights.layers()])


def vector_to_weights(vec: np.ndarray) -> ModelWeights:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (PARAM_COUNT,):
        raise ShapeError(f"expected {PARAM_COUNT} parameters, got {vec.shape}")
    mats = []
    offset = 0
    for _, rows, cols in LAYER_SHAPES:
        size = rows * cols
        mats.append(vec[offset:offset + size].reshape(rows, cols).copy())
        offset += size
    return ModelWeights(block1=tuple(mats[:3]), block2=tuple(mats[3:5]), skip=mats[5])


def serialize(weights: ModelWeights) -> bytes:
    payload = {
        "version": WEIGHT_FORMAT_VERSION,
        "layers": [
            {
                "name": name,
                "rows": rows,
                "cols": cols,
                "data": [float(v) for v in np.asarray(w).ravel()],
            }
            for (name, rows, cols), w in zip(LAYER_SHAPES, weights.layers())
        ],
    }
    return json.dumps(payload).encode("utf-8")


def deserialize(data: bytes) -> ModelWeights:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"not a weight file: {exc}") from exc
    if payload.get("version") != WEIGHT_FORMAT_VERSION:
        raise FormatError(f"unknown weight format version {payload.get('version')!r}")
    layers = payload.get("layers")
    if not isinstance(layers, list) or len(layers) != len(LAYER_SHAPES):
        raise FormatError("wrong number of layers")
    mats = []
    total = 0
    for (name, rows, cols), entry in zip(LAYER_SHAPES, layers):
        if entry.get("name") != name or entry.get("rows") != rows \
                or entry.get("cols") != cols:
            raise FormatError(
                f"layer {entry.get('name')!r} has shape "
                f"({entry.get('rows')}, {entry.get('cols')}), expected "
                f"{name} ({rows}, {cols})"
            )
        data_list = entry.get("data", [])
        if len(data_list) != rows * cols:
            raise FormatError(f"layer {name} has {len(data_list)} values")
        mats.append(np.array(data_list, dtype=float).reshape(rows, cols))
        total += rows * cols
    if total != PARAM_COUNT:
        raise FormatError(f"parameter count {total} != {PARAM_COUNT}")
    return ModelWeights(block1=tuple(mats[:3]), block2=tuple(mats[3:5]), skip=mats[5])


def save_weights(weights: ModelWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(weights))


def load_weights(path) -> ModelWeights:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
