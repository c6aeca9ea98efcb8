"""Hot sequence kernels: full forward / backward recurrences of one LSTM
direction over a padded batch.

These are the inner loops of the whole package.  Each function is written
once as plain numpy restricted to numba-compilable constructs; the binding
actually used (``lstm_layer_forward`` / ``lstm_layer_backward``) is the
jitted version unless the environment selects the numpy fallback (see
``backend``).  The ``*_plain`` names always refer to the uncompiled twins
so the two paths can be benchmarked against each other.

Conventions shared with the rest of the package:
  - weights ``W`` of shape ``(input_dim + d, 4d)`` act on ``[x; h_prev]``,
    bias ``b`` of shape ``(4d,)``;
  - the ``4d`` axis is sliced in the fixed gate order ``[i | f | o | g]``;
  - initial hidden and cell states are exactly zero;
  - positions at or beyond a sentence's length are never touched and hold
    zero vectors, so padded and unpadded runs are bit-identical.

The gate-value array ``G`` stores the activated gates, and sigmoids are
computed as ``0.5 * (tanh(z/2) + 1)``, which saturates without overflow.
"""

import numpy as np

from .backend import jit_compile


def _lstm_layer_forward(X, lengths, W, b, reverse):
    """Run one direction of an LSTM layer over every sentence of a batch.

    X:       (B, T, Din) float64, padded inputs
    lengths: (B,) int64, true lengths (>= 1)
    W:       (Din + d, 4d);  b: (4d,)
    reverse: False processes positions 0..L-1, True processes L-1..0

    Returns (H, C, G): hidden states (B, T, d), cell states (B, T, d) and
    activated gate values (B, T, 4d), all zero beyond each length.
    """
    B, T, Din = X.shape
    H4 = W.shape[1]
    d = H4 // 4
    Wx = W[:Din]
    Wh = W[Din:]
    H = np.zeros((B, T, d))
    C = np.zeros((B, T, d))
    G = np.zeros((B, T, H4))
    for n in range(B):
        L = lengths[n]
        XW = np.dot(X[n, :L], Wx)
        h = np.zeros(d)
        c = np.zeros(d)
        for j in range(L):
            t = L - 1 - j if reverse else j
            z = XW[t] + np.dot(h, Wh) + b
            i = 0.5 * (np.tanh(0.5 * z[:d]) + 1.0)
            f = 0.5 * (np.tanh(0.5 * z[d:2 * d]) + 1.0)
            o = 0.5 * (np.tanh(0.5 * z[2 * d:3 * d]) + 1.0)
            g = np.tanh(z[3 * d:])
            c = f * c + i * g
            h = o * np.tanh(c)
            G[n, t, :d] = i
            G[n, t, d:2 * d] = f
            G[n, t, 2 * d:3 * d] = o
            G[n, t, 3 * d:] = g
            C[n, t] = c
            H[n, t] = h
    return H, C, G


def _lstm_layer_backward(X, lengths, W, H, C, G, dH, reverse):
    """Reverse-mode pass matching ``_lstm_layer_forward``.

    dH holds the loss gradient w.r.t. every stored hidden state.  Returns
    (dW, db, dX) with dW/db accumulated over all sentences and positions.
    Positions are visited opposite to the forward consumption order while
    carrying the recurrent gradients dh and dc; the per-step gate gradients
    are buffered so the weight accumulation runs as one matrix product per
    sentence instead of a rank-1 update per step.
    """
    B, T, Din = X.shape
    H4 = W.shape[1]
    d = H4 // 4
    WxT = np.ascontiguousarray(W[:Din].T)
    WhT = np.ascontiguousarray(W[Din:].T)
    dW = np.zeros_like(W)
    db = np.zeros(H4)
    dX = np.zeros_like(X)
    for n in range(B):
        L = lengths[n]
        dZ = np.zeros((L, H4))
        Hprev = np.zeros((L, d))
        dh_rec = np.zeros(d)
        dc = np.zeros(d)
        for j in range(L):
            t = j if reverse else L - 1 - j
            i = G[n, t, :d]
            f = G[n, t, d:2 * d]
            o = G[n, t, 2 * d:3 * d]
            g = G[n, t, 3 * d:]
            tc = np.tanh(C[n, t])
            dh = dH[n, t] + dh_rec
            dc = dc + dh * o * (1.0 - tc * tc)
            if reverse:
                prev_in_range = t + 1 < L
                tp = t + 1
            else:
                prev_in_range = t - 1 >= 0
                tp = t - 1
            if prev_in_range:
                c_prev = C[n, tp]
                Hprev[t] = H[n, tp]
            else:
                c_prev = np.zeros(d)
            dz = dZ[t]
            dz[:d] = (dc * g) * i * (1.0 - i)
            dz[d:2 * d] = (dc * c_prev) * f * (1.0 - f)
            dz[2 * d:3 * d] = (dh * tc) * o * (1.0 - o)
            dz[3 * d:] = (dc * i) * (1.0 - g * g)
            db += dz
            dh_rec = np.dot(dz, WhT)
            dc = dc * f
        Xn = np.ascontiguousarray(X[n, :L])
        dW[:Din] += np.dot(np.ascontiguousarray(Xn.T), dZ)
        dW[Din:] += np.dot(np.ascontiguousarray(Hprev.T), dZ)
        dX[n, :L] = np.dot(dZ, WxT)
    return dW, db, dX


lstm_layer_forward_plain = _lstm_layer_forward
lstm_layer_backward_plain = _lstm_layer_backward

lstm_layer_forward = jit_compile(_lstm_layer_forward)
lstm_layer_backward = jit_compile(_lstm_layer_backward)


def warmup():
    """Trigger jit compilation on a tiny instance (no-op on the numpy path)."""
    X = np.zeros((1, 2, 3))
    lengths = np.ones(1, dtype=np.int64)
    W = np.zeros((3 + 2, 8))
    b = np.zeros(8)
    H, C, G = lstm_layer_forward(X, lengths, W, b, False)
    lstm_layer_backward(X, lengths, W, H, C, G, np.zeros((1, 2, 2)), True)
