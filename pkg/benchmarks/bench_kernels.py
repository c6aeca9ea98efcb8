"""Benchmark the jitted LSTM layer kernels against the plain-numpy twins.

Runs the forward and backward recurrence on a padded batch shaped like a
real sentence-classification workload and reports per-call times plus the
speedup.  Also cross-checks that both paths agree to 1e-12, which is the
contract that lets the numpy fallback stand in for the compiled kernels.

Usage:
    python benchmarks/bench_kernels.py [--batch 64] [--seq-len 40]
        [--input-dim 300] [--hidden 100] [--repeats 5]
"""

import argparse
import time

import numpy as np

from dcbilstm import kernels
from dcbilstm.backend import HAVE_NUMBA, active_backend


def time_fn(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--seq-len", type=int, default=40)
    ap.add_argument("--input-dim", type=int, default=300)
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if active_backend() != "numba":
        print(f"active backend is {active_backend()!r}; nothing to compare "
              f"(numba available: {HAVE_NUMBA})")
        return

    rng = np.random.default_rng(args.seed)
    B, T, Din, d = args.batch, args.seq_len, args.input_dim, args.hidden
    X = rng.standard_normal((B, T, Din))
    lengths = rng.integers(1, T + 1, size=B).astype(np.int64)
    lengths[0] = T
    W = 0.1 * rng.standard_normal((Din + d, 4 * d))
    b = 0.1 * rng.standard_normal(4 * d)

    # compile outside the timed region
    kernels.warmup()
    kernels.lstm_layer_forward(X[:1], lengths[:1], W, b, True)

    a = time.perf_counter()
    rows = []
    t_jit, (H, C, G) = time_fn(kernels.lstm_layer_forward, (X, lengths, W, b, False), args.repeats)
    t_np, (Hn, Cn, Gn) = time_fn(kernels.lstm_layer_forward_plain, (X, lengths, W, b, False), args.repeats)
    max_diff = max(np.abs(H - Hn).max(), np.abs(C - Cn).max(), np.abs(G - Gn).max())
    assert max_diff < 1e-12, f"forward paths disagree: {max_diff:.3e}"
    rows.append(("forward", t_jit, t_np, max_diff))

    dH = rng.standard_normal((B, T, d))
    for n in range(B):
        dH[n, lengths[n]:] = 0.0
    t_jit, (dW, db, dX) = time_fn(kernels.lstm_layer_backward, (X, lengths, W, H, C, G, dH, False), args.repeats)
    t_np, (dWn, dbn, dXn) = time_fn(kernels.lstm_layer_backward_plain, (X, lengths, W, Hn, Cn, Gn, dH, False), args.repeats)
    scale = max(1.0, np.abs(dW).max())
    max_diff = max(np.abs(dW - dWn).max() / scale, np.abs(db - dbn).max() / scale,
                   np.abs(dX - dXn).max())
    assert max_diff < 1e-12, f"backward paths disagree: {max_diff:.3e}"
    rows.append(("backward", t_jit, t_np, max_diff))

    print(f"batch={B} seq_len={T} input_dim={Din} hidden={d} "
          f"(best of {args.repeats})")
    print(f"{'kernel':<10}{'numba':>12}{'numpy':>12}{'speedup':>10}{'max diff':>12}")
    for name, tj, tn, diff in rows:
        print(f"{name:<10}{tj * 1e3:>10.2f}ms{tn * 1e3:>10.2f}ms{tn / tj:>9.1f}x{diff:>12.2e}")
    print(f"total wall {time.perf_counter() - a:.1f}s; agreement within 1e-12 confirmed")


if __name__ == "__main__":
    main()
