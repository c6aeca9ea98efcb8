"""Central-difference verification of the analytic gradients.

The checker drives the production forward/backward paths end to end: it
wraps a random length-5 sentence as a one-row batch whose "embedding
matrix" is the input itself, so the loss function being differentiated is
exactly the training loss (dropout off).  Every parameter tensor plus the
input occupies one report group; an element passes when the relative error
against the numerical derivative is within tol_rel, or the absolute gap is
under tol_abs for near-zero pairs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import Model, ModelConfig, model_backward, model_forward
from .data import Batch
from .tensor import make_rng


def finite_diff(loss_fn, arrays, eps=1e-5):
    """Two-sided difference of loss_fn w.r.t. every element of `arrays`.

    arrays maps names to float64 tensors that loss_fn reads; each element
    is nudged in place and restored.  Cost is two loss evaluations per
    element, so keep the model tiny.
    """
    grads = {}
    for name, arr in arrays.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + eps
            lo_hi = loss_fn()
            flat[k] = saved - eps
            lo_lo = loss_fn()
            flat[k] = saved
            if not (np.isfinite(lo_hi) and np.isfinite(lo_lo)):
                raise ConfigError(f"non-finite loss while probing {name}[{k}]")
            gflat[k] = (lo_hi - lo_lo) / (2.0 * eps)
        grads[name] = g
    return grads


@dataclass
class GroupResult:
    name: str
    n: int
    max_rel: float
    max_abs: float
    worst_index: tuple
    passed: bool


@dataclass
class GradCheckReport:
    arch: str
    dl: int
    seed: int
    tol_rel: float
    tol_abs: float
    passed: bool
    groups: list = field(default_factory=list)

    def format(self):
        lines = [
            f"gradcheck arch={self.arch} dl={self.dl} seed={self.seed} "
            f"tol_rel={self.tol_rel:g} tol_abs={self.tol_abs:g}"
        ]
        for g in self.groups:
            verdict = "ok" if g.passed else "FAIL"
            lines.append(
                f"  {g.name:<16s} n={g.n:<5d} max_rel={g.max_rel:.3e} "
                f"max_abs={g.max_abs:.3e} worst={g.worst_index} {verdict}"
            )
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _compare(name, analytic, numeric, tol_rel, tol_abs):
    diff = np.abs(analytic - numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    rel = diff / denom
    ok = (rel <= tol_rel) | (diff <= tol_abs)
    worst_flat = int(rel.argmax()) if rel.size else 0
    worst = np.unravel_index(worst_flat, analytic.shape) if analytic.size else ()
    return GroupResult(
        name=name,
        n=analytic.size,
        max_rel=float(rel.max()) if rel.size else 0.0,
        max_abs=float(diff.max()) if diff.size else 0.0,
        worst_index=tuple(int(i) for i in worst),
        passed=bool(ok.all()),
    )


def check_model(arch="dense", dl=1, seed=0, m=8, dh=4, th=6, num_classes=3,
                seq_len=5, tol_rel=1e-4, tol_abs=1e-7, eps=1e-5,
                check_input=True, inject_fault=False):
    """Build a small random model and verify all its gradients.

    inject_fault deliberately corrupts one analytic softmax weight gradient
    so callers can confirm the checker notices and names the element.
    """
    rng = make_rng(seed)
    cfg = ModelConfig(
        m=m, dl=dl, dh=dh, th=th, num_classes=num_classes, arch=arch,
        dropout_embed=0.0, dropout_pool=0.0, max_norm_s=None,
    ).validate()
    model = Model.build(cfg, rng)

    # the fake embedding matrix IS the input sentence, one row per position
    emb_matrix = 0.5 * rng.standard_normal((seq_len, m))
    batch = Batch(
        indices=np.arange(seq_len, dtype=np.int64).reshape(1, seq_len),
        lengths=np.array([seq_len], dtype=np.int64),
        labels=np.array([int(rng.integers(num_classes))], dtype=np.int64),
    )

    def loss_fn():
        probs, _ = model_forward(model, emb_matrix, batch, training=False)
        p = probs[0, batch.labels[0]]
        return float(-np.log(np.maximum(p, np.finfo(np.float64).tiny)))

    probs, trace = model_forward(model, emb_matrix, batch, training=False)
    dlogits = probs.copy()
    dlogits[0, batch.labels[0]] -= 1.0
    analytic, dEmb = model_backward(model, trace, dlogits)
    if inject_fault:
        analytic["softmax.W"] = analytic["softmax.W"].copy()
        analytic["softmax.W"][0, 0] += 1e-2

    arrays = dict(model.named_params())
    if check_input:
        arrays["input"] = emb_matrix
        analytic["input"] = dEmb[0]

    numeric = finite_diff(loss_fn, arrays, eps)
    groups = [
        _compare(name, analytic[name], numeric[name], tol_rel, tol_abs)
        for name in arrays
    ]
    return GradCheckReport(
        arch=arch, dl=dl, seed=seed, tol_rel=tol_rel, tol_abs=tol_abs,
        passed=all(g.passed for g in groups), groups=groups,
    )
