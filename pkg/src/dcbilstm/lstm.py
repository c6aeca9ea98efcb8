"""LSTM cell: single-step forward/backward and directional sequence runs.

The cell follows the classic formulation: one affine transform of the
concatenated ``[x_t; h_{t-1}]`` produces four ``d``-wide blocks in the fixed
order ``[i | f | o | g]`` (input gate, forget gate, output gate, candidate),
then

    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

``lstm_step`` / ``lstm_step_backward`` are the step-granularity reference
implementations; ``run_direction`` delegates whole sequences to the fast
layer kernels.  Initial states are exactly zero.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import EmptySequenceError, ShapeError
from .tensor import concat_cols, glorot_uniform, matmul, sigmoid, tanh


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass
class LstmParams:
    """Affine transform of one direction: W (input_dim + d, 4d), b (1, 4d)."""

    W: np.ndarray
    b: np.ndarray

    @property
    def d(self):
        return self.W.shape[1] // 4

    @property
    def input_dim(self):
        return self.W.shape[0] - self.d

    @classmethod
    def init(cls, input_dim, d, rng, forget_bias=0.0):
        """Glorot-uniform weights, zero bias (optionally offset the f block)."""
        W = glorot_uniform(input_dim + d, 4 * d, rng)
        b = np.zeros((1, 4 * d))
        if forget_bias:
            b[0, d:2 * d] = forget_bias
        return cls(W=W, b=b)

    def check_finite(self):
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("LstmParams contain non-finite entries")


@dataclass
class StepCache:
    """Everything the backward pass needs from one forward step."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray


def _check_step_shapes(p, x, h_prev, c_prev):
    d = p.d
    if x.shape != (1, p.input_dim):
        raise ShapeError(f"lstm_step: x shape {x.shape}, expected (1, {p.input_dim})")
    if h_prev.shape != (1, d) or c_prev.shape != (1, d):
        raise ShapeError(
            f"lstm_step: state shapes {h_prev.shape}/{c_prev.shape}, expected (1, {d})"
        )


def lstm_step(p, x, h_prev, c_prev):
    """One cell update; returns (h, c, cache)."""
    _check_step_shapes(p, x, h_prev, c_prev)
    d = p.d
    z = matmul(concat_cols([x, h_prev]), p.W) + p.b
    i = sigmoid(z[:, :d])
    f = sigmoid(z[:, d:2 * d])
    o = sigmoid(z[:, 2 * d:3 * d])
    g = tanh(z[:, 3 * d:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    cache = StepCache(x=x, h_prev=h_prev, c_prev=c_prev, i=i, f=f, o=o, g=g, c=c)
    return h, c, cache


def lstm_step_backward(p, cache, dh, dc_in):
    """Exact gradients of one step.

    dh and dc_in are the loss gradients arriving at h_t and c_t.  Returns
    (dW, db, dx, dh_prev, dc_prev).  Gate derivatives reuse the cached
    activation values: sigm' = v(1-v), tanh' = 1-v^2.
    """
    d = p.d
    if dh.shape != (1, d) or dc_in.shape != (1, d):
        raise ShapeError(f"lstm_step_backward: grad shapes {dh.shape}/{dc_in.shape}, expected (1, {d})")
    i, f, o, g = cache.i, cache.f, cache.o, cache.g
    tc = np.tanh(cache.c)
    dc = dc_in + dh * o * (1.0 - tc * tc)
    dz = np.empty((1, 4 * d))
    dz[:, :d] = (dc * g) * i * (1.0 - i)
    dz[:, d:2 * d] = (dc * cache.c_prev) * f * (1.0 - f)
    dz[:, 2 * d:3 * d] = (dh * tc) * o * (1.0 - o)
    dz[:, 3 * d:] = (dc * i) * (1.0 - g * g)
    xh = concat_cols([cache.x, cache.h_prev])
    dW = xh.T @ dz
    db = dz.copy()
    dxh = dz @ p.W.T
    dx = dxh[:, :p.input_dim]
    dh_prev = dxh[:, p.input_dim:]
    dc_prev = dc * f
    return dW, db, dx, dh_prev, dc_prev


def run_direction(p, inputs, length, direction):
    """Hidden states of one direction over a sentence.

    inputs is a list of (1, input_dim) tensors; only the first ``length``
    positions enter the recurrence.  The result is index-aligned with the
    inputs, zero vectors beyond ``length``.
    """
    if length == 0:
        raise EmptySequenceError("run_direction: zero-length sequence")
    if length > len(inputs):
        raise ShapeError(f"run_direction: length {length} exceeds {len(inputs)} inputs")
    T = len(inputs)
    X = np.zeros((1, T, p.input_dim))
    for t, x in enumerate(inputs):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (1, p.input_dim):
            raise ShapeError(f"run_direction: input {t} shape {x.shape}, expected (1, {p.input_dim})")
        X[0, t] = x[0]
    lengths = np.array([length], dtype=np.int64)
    H, _, _ = kernels.lstm_layer_forward(
        X, lengths, p.W, p.b[0], direction is Direction.BACKWARD
    )
    return [H[0, t].reshape(1, -1) for t in range(T)]
