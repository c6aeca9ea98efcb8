"""Cell-level contracts: hand-computed values, step gradients, direction runs."""

import numpy as np
import pytest

from dcbilstm import kernels
from dcbilstm.errors import EmptySequenceError, ShapeError
from dcbilstm.lstm import Direction, LstmParams, lstm_step, lstm_step_backward, run_direction
from dcbilstm.tensor import make_rng

# Scalar hand case, d = 1, input_dim = 1, every weight 0.5, bias 0, x = 1,
# zero initial state.  All four pre-activations equal 0.5, so with
# sigm(0.5) and tanh(0.5) from a 30-digit evaluation:
#   i = f = o = 0.62245933120185456464
#   g =         0.46211715726000975850
#   c = i*g =   0.28764913664496792492
#   h = o*tanh(c) = 0.17426971865610505882
HAND = {
    "gate": 0.62245933120185456464,
    "g": 0.46211715726000975850,
    "c": 0.28764913664496792492,
    "h": 0.17426971865610505882,
}


def _scalar_params():
    return LstmParams(W=np.full((2, 4), 0.5), b=np.zeros((1, 4)))


def test_step_scalar_hand_case():
    p = _scalar_params()
    h, c, cache = lstm_step(p, np.ones((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))
    assert abs(cache.i[0, 0] - HAND["gate"]) < 1e-15
    assert abs(cache.f[0, 0] - HAND["gate"]) < 1e-15
    assert abs(cache.o[0, 0] - HAND["gate"]) < 1e-15
    assert abs(cache.g[0, 0] - HAND["g"]) < 1e-15
    assert abs(c[0, 0] - HAND["c"]) < 1e-15
    assert abs(h[0, 0] - HAND["h"]) < 1e-15


def test_step_zero_input_zero_state():
    # all pre-activations 0: gates 0.5, candidate 0, so c = 0 and h = 0
    p = LstmParams(W=np.zeros((5, 8)), b=np.zeros((1, 8)))
    h, c, cache = lstm_step(p, np.zeros((1, 3)), np.zeros((1, 2)), np.zeros((1, 2)))
    assert np.array_equal(h, np.zeros((1, 2)))
    assert np.array_equal(c, np.zeros((1, 2)))
    assert np.array_equal(cache.i, np.full((1, 2), 0.5))


def test_step_shape_validation():
    p = LstmParams(W=np.zeros((5, 8)), b=np.zeros((1, 8)))
    with pytest.raises(ShapeError):
        lstm_step(p, np.zeros((1, 4)), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ShapeError):
        lstm_step(p, np.zeros((1, 3)), np.zeros((1, 3)), np.zeros((1, 2)))


def test_init_forget_bias_block():
    p = LstmParams.init(3, 4, make_rng(0), forget_bias=1.5)
    assert np.array_equal(p.b[0, 4:8], np.full(4, 1.5))
    assert np.array_equal(p.b[0, :4], np.zeros(4))
    assert np.array_equal(p.b[0, 8:], np.zeros(8))
    assert p.d == 4 and p.input_dim == 3


def _fd_step_grads(p, x, h_prev, c_prev, alpha, beta, eps=1e-6):
    """Central differences of loss = sum(alpha*h) + sum(beta*c)."""

    def loss():
        h, c, _ = lstm_step(p, x, h_prev, c_prev)
        return float((alpha * h).sum() + (beta * c).sum())

    grads = {}
    for name, arr in (("W", p.W), ("b", p.b), ("x", x), ("h_prev", h_prev), ("c_prev", c_prev)):
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            keep = flat[k]
            flat[k] = keep + eps
            up = loss()
            flat[k] = keep - eps
            down = loss()
            flat[k] = keep
            gflat[k] = (up - down) / (2 * eps)
        grads[name] = g
    return grads


def _assert_close(analytic, numeric, tol_rel, tol_abs, ctx):
    diff = np.abs(analytic - numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    bad = ~((diff / denom <= tol_rel) | (diff <= tol_abs))
    assert not bad.any(), f"{ctx}: worst rel {(diff / denom).max():.3e}"


def test_step_backward_matches_finite_differences():
    # every returned gradient within 1e-6 relative (1e-10 absolute floor for
    # elements where the central difference itself is below noise)
    for seed in range(4):
        rng = make_rng(seed)
        input_dim = int(rng.integers(1, 9))
        d = int(rng.integers(1, 9))
        p = LstmParams.init(input_dim, d, rng)
        x = rng.standard_normal((1, input_dim))
        h_prev = 0.5 * rng.standard_normal((1, d))
        c_prev = 0.5 * rng.standard_normal((1, d))
        alpha = rng.standard_normal((1, d))
        beta = rng.standard_normal((1, d))

        _, _, cache = lstm_step(p, x, h_prev, c_prev)
        dW, db, dx, dh_prev, dc_prev = lstm_step_backward(p, cache, alpha, beta)
        fd = _fd_step_grads(p, x, h_prev, c_prev, alpha, beta)
        for got, name in ((dW, "W"), (db, "b"), (dx, "x"), (dh_prev, "h_prev"), (dc_prev, "c_prev")):
            _assert_close(got, fd[name], 1e-6, 1e-10, f"seed {seed} {name}")


def test_step_backward_rejects_bad_grad_shape():
    p = LstmParams.init(2, 3, make_rng(1))
    _, _, cache = lstm_step(p, np.zeros((1, 2)), np.zeros((1, 3)), np.zeros((1, 3)))
    with pytest.raises(ShapeError):
        lstm_step_backward(p, cache, np.zeros((1, 2)), np.zeros((1, 3)))


def test_run_direction_matches_composed_steps():
    """The layer kernel must agree with a plain chain of lstm_step calls.

    Not bitwise: the kernel folds the input transform into one matrix
    product, which reorders the summation, so compare at 1e-12.
    """
    for seed in range(5):
        rng = make_rng(100 + seed)
        input_dim, d, T = int(rng.integers(1, 7)), int(rng.integers(1, 7)), int(rng.integers(1, 9))
        p = LstmParams.init(input_dim, d, rng)
        inputs = [rng.standard_normal((1, input_dim)) for _ in range(T)]

        out = run_direction(p, inputs, T, Direction.FORWARD)
        h = np.zeros((1, d))
        c = np.zeros((1, d))
        for t in range(T):
            h, c, _ = lstm_step(p, inputs[t], h, c)
            assert np.abs(out[t] - h).max() < 1e-12, f"seed {seed} position {t}"

        out_b = run_direction(p, inputs, T, Direction.BACKWARD)
        h = np.zeros((1, d))
        c = np.zeros((1, d))
        for t in range(T - 1, -1, -1):
            h, c, _ = lstm_step(p, inputs[t], h, c)
            assert np.abs(out_b[t] - h).max() < 1e-12


def test_reversal_duality_bitwise():
    # backward run == forward run on the reversed sequence, read backwards
    for seed in range(20):
        rng = make_rng(200 + seed)
        input_dim, d, T = int(rng.integers(1, 8)), int(rng.integers(1, 8)), int(rng.integers(1, 12))
        p = LstmParams.init(input_dim, d, rng)
        inputs = [rng.standard_normal((1, input_dim)) for _ in range(T)]
        bwd = run_direction(p, inputs, T, Direction.BACKWARD)
        fwd_rev = run_direction(p, inputs[::-1], T, Direction.FORWARD)
        for t in range(T):
            assert np.array_equal(bwd[t], fwd_rev[T - 1 - t]), f"seed {seed} t={t}"


def test_run_direction_padding_left_untouched():
    rng = make_rng(9)
    p = LstmParams.init(3, 2, rng)
    inputs = [rng.standard_normal((1, 3)) for _ in range(6)]
    out = run_direction(p, inputs, 4, Direction.FORWARD)
    assert np.array_equal(out[4], np.zeros((1, 2)))
    assert np.array_equal(out[5], np.zeros((1, 2)))
    # and the first 4 equal the unpadded run exactly
    ref = run_direction(p, inputs[:4], 4, Direction.FORWARD)
    for t in range(4):
        assert np.array_equal(out[t], ref[t])


def test_run_direction_errors():
    p = LstmParams.init(2, 2, make_rng(0))
    inputs = [np.zeros((1, 2))]
    with pytest.raises(EmptySequenceError):
        run_direction(p, inputs, 0, Direction.FORWARD)
    with pytest.raises(ShapeError):
        run_direction(p, inputs, 2, Direction.FORWARD)
    with pytest.raises(ShapeError):
        run_direction(p, [np.zeros((1, 3))], 1, Direction.FORWARD)


def test_layer_kernel_jit_and_plain_paths_agree():
    rng = make_rng(42)
    B, T, Din, d = 3, 7, 5, 4
    X = rng.standard_normal((B, T, Din))
    lengths = np.array([7, 4, 1], dtype=np.int64)
    W = 0.4 * rng.standard_normal((Din + d, 4 * d))
    b = 0.1 * rng.standard_normal(4 * d)
    dH = rng.standard_normal((B, T, d))
    for n in range(B):
        dH[n, lengths[n]:] = 0.0
    for rev in (False, True):
        H, C, G = kernels.lstm_layer_forward(X, lengths, W, b, rev)
        Hp, Cp, Gp = kernels.lstm_layer_forward_plain(X, lengths, W, b, rev)
        assert np.abs(H - Hp).max() < 1e-13
        assert np.abs(C - Cp).max() < 1e-13
        assert np.abs(G - Gp).max() < 1e-13
        out = kernels.lstm_layer_backward(X, lengths, W, H, C, G, dH, rev)
        ref = kernels.lstm_layer_backward_plain(X, lengths, W, Hp, Cp, Gp, dH, rev)
        for a, b_ in zip(out, ref):
            assert np.abs(a - b_).max() < 1e-12
