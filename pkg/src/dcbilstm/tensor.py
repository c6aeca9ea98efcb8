"""Dense 2-D float64 tensor operations and the seeded RNG.

A "tensor" throughout this package is a C-contiguous 2-D ``float64`` numpy
array; a vector is a 1 x n tensor.  Randomness always flows through a
``numpy.random.Generator`` seeded with PCG64 so that every run is
reproducible from its recorded seed.
"""

import numpy as np

from .errors import ShapeError

__all__ = [
    "make_rng",
    "as_tensor",
    "matmul",
    "sigmoid",
    "tanh",
    "activation",
    "concat_cols",
    "glorot_uniform",
]


def make_rng(seed):
    """Seeded PCG64 generator; identical seed gives an identical draw stream."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def as_tensor(x):
    """Coerce to a 2-D float64 array, rejecting other ranks."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D tensor, got ndim={a.ndim}")
    return np.ascontiguousarray(a)


def matmul(a, b):
    """Matrix product with an explicit conformance check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    return a @ b


def sigmoid(x):
    """Logistic function via 0.5*(tanh(x/2)+1); saturates without overflow."""
    return 0.5 * (np.tanh(0.5 * np.asarray(x, dtype=np.float64)) + 1.0)


def tanh(x):
    return np.tanh(np.asarray(x, dtype=np.float64))


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh}


def activation(kind, x):
    """Element-wise sigmoid or tanh, shape preserved."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}, expected one of {sorted(_ACTIVATIONS)}")
    return fn(x)


def concat_cols(parts):
    """Horizontal concatenation; all parts must share the row count.

    Order is part of the contract: callers rely on part 0 occupying the
    leftmost columns.
    """
    if not parts:
        raise ShapeError("concat_cols: empty part list")
    arrs = [np.asarray(p) for p in parts]
    rows = arrs[0].shape[0]
    for a in arrs:
        if a.ndim != 2 or a.shape[0] != rows:
            raise ShapeError(
                f"concat_cols: row mismatch, shapes {[tuple(x.shape) for x in arrs]}"
            )
    return np.concatenate(arrs, axis=1)


def glorot_uniform(rows, cols, rng):
    """Uniform draw on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))]."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"glorot_uniform: invalid shape ({rows}, {cols})")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))
