"""Training loop: Adam, cross-entropy, max-norm constraint, early stopping.

Runs write two artifacts into the output directory: a JSONL run log
(`run.log`) and the best-dev checkpoint (`model.ckpt`, or `fold<i>.ckpt`
under cross-validation).  The log holds one JSON object per line: a
"config" event echoing the effective configuration, one "epoch" record per
epoch, and a closing "result" (plus "cv_summary" for CV runs).  Log content
is a pure function of the configuration and seed, so identical runs produce
identical bytes; wall-clock timing goes to stderr only.
"""

import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import data as D
from .errors import ConfigError, TrainingDiverged
from .model import (
    Model,
    ModelConfig,
    dropout,  # noqa: F401  (re-exported; the two dropout sites live in model_forward)
    model_backward,
    model_forward,
    save_checkpoint,
)

__all__ = [
    "TrainConfig", "TrainReport", "AdamState", "adam_update", "cross_entropy",
    "max_norm_constrain", "train", "evaluate", "dropout",
]


@dataclass
class TrainConfig:
    # architecture
    arch: str = "dense"
    dl: int = 1
    dh: int = 10
    th: int = 100
    num_classes: int = 0  # 0 = infer from the labels
    dropout_embed: float = 0.5
    dropout_pool: float = 0.5
    max_norm_s: float | None = 3.0
    softmax_l2: float = 0.0  # weight-decay reading of the softmax constraint
    forget_bias: float = 0.0
    train_embeddings: bool = False
    # optimizer
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 200
    epochs: int = 100
    patience: int = 10
    stop_at_train_acc: float | None = None
    # data
    data_format: str = "tsv"  # tsv | sst_trees
    train_path: str = ""
    dev_path: str | None = None
    test_path: str | None = None
    binary: bool = False
    phrases: bool = False
    cv_folds: int = 0  # 0 = plain train/dev/test split
    dev_fraction: float = 0.1
    embeddings_path: str | None = None
    embedding_dim: int = 50  # used only when embeddings_path is unset
    # run
    seed: int = 0
    out_dir: str = "."

    def validate(self):
        if self.data_format not in ("tsv", "sst_trees"):
            raise ConfigError(f"data_format must be tsv or sst_trees, got {self.data_format!r}")
        if not self.train_path:
            raise ConfigError("train_path is required")
        if self.cv_folds < 0 or self.cv_folds == 1:
            raise ConfigError(f"cv_folds must be 0 or >= 2, got {self.cv_folds}")
        if self.cv_folds and (self.dev_path or self.test_path):
            raise ConfigError("cross-validation uses a single input file; drop dev/test paths")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ConfigError(f"dev_fraction must be in [0, 1), got {self.dev_fraction}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.softmax_l2 < 0:
            raise ConfigError(f"softmax_l2 must be >= 0, got {self.softmax_l2}")
        return self


@dataclass
class TrainReport:
    best_dev_acc: float | None
    test_acc: float | None
    final_train_acc: float
    epochs_run: int
    checkpoint_path: str
    log_path: str
    history: list = field(default_factory=list)
    fold_accs: list | None = None
    mean_acc: float | None = None
    seed: int = 0


# ---------------------------------------------------------------------------
# pieces


def cross_entropy(probs, labels):
    """Mean negative log-likelihood and its gradient at the logits.

    probs must be softmax rows; the gradient (probs - onehot) / B is exact
    for that pairing.
    """
    B = probs.shape[0]
    picked = probs[np.arange(B), labels]
    loss = float(-np.log(np.maximum(picked, np.finfo(np.float64).tiny)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    return loss, dlogits / B


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def like(cls, arr):
        return cls(m=np.zeros_like(arr), v=np.zeros_like(arr))


def adam_update(param, grad, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam step, in place on param."""
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


def max_norm_constrain(W, s):
    """Rescale columns of W whose L2 norm exceeds s, in place.

    The (1 + 1e-12) slack keeps the operation idempotent: a column scaled
    to norm s picks up rounding in the last ulp, and without slack a second
    pass would rescale it again.
    """
    if s is None:
        return W
    norms = np.sqrt((W * W).sum(axis=0))
    over = norms > s * (1.0 + 1e-12)
    if over.any():
        W[:, over] *= s / norms[over]
    return W


def evaluate(model, emb_matrix, indexed, batch_size=200):
    """Accuracy in eval mode (dropout off); argmax ties go to the lowest class."""
    if not indexed:
        raise ConfigError("cannot evaluate on an empty example list")
    correct = 0
    for batch in D.make_batches(indexed, batch_size):
        probs, _ = model_forward(model, emb_matrix, batch, training=False)
        correct += int((probs.argmax(axis=1) == batch.labels).sum())
    return correct / len(indexed)


# ---------------------------------------------------------------------------
# data assembly


def _load_split(cfg, path, phrases=False):
    return D.load_dataset(path, cfg.data_format, binary=cfg.binary, phrases=phrases)


def _prepare_single(cfg, rng_split):
    train = _load_split(cfg, cfg.train_path, phrases=cfg.phrases)
    dev = _load_split(cfg, cfg.dev_path) if cfg.dev_path else None
    test = _load_split(cfg, cfg.test_path) if cfg.test_path else None
    if dev is None and cfg.dev_fraction > 0 and len(train) > 1:
        order = np.arange(len(train))
        rng_split.shuffle(order)
        n_dev = max(1, int(len(train) * cfg.dev_fraction))
        dev = [train[i] for i in order[:n_dev]]
        train = [train[i] for i in order[n_dev:]]
    return train, dev, test


def _build_tables(cfg, example_sets, rng_emb):
    sets = [s for s in example_sets if s]
    if cfg.embeddings_path:
        table = D.load_embeddings(cfg.embeddings_path)
        vocab = D.build_vocab(sets, table)
        emb_matrix = D.build_embedding_matrix(vocab, table)
        m = table.dim
    else:
        vocab = D.build_vocab(sets)
        m = cfg.embedding_dim
        emb_matrix = D.random_embedding_matrix(vocab, m, rng_emb)
    return vocab, emb_matrix, m


def _infer_classes(example_sets):
    top = -1
    for examples in example_sets:
        if examples:
            top = max(top, max(ex.label for ex in examples))
    return top + 1


# ---------------------------------------------------------------------------
# fit loop


def _grad_group_norms(grads):
    groups = {}
    for name, g in grads.items():
        key = name.split(".")[0]
        groups[key] = groups.get(key, 0.0) + float((g * g).sum())
    return {k: float(np.sqrt(v)) for k, v in sorted(groups.items())}


def _fit(cfg, model_cfg, emb_matrix, train_idx, dev_idx, test_idx, seed_seqs, log_fh, tag):
    init_rng = np.random.Generator(np.random.PCG64(seed_seqs[0]))
    batch_rng = np.random.Generator(np.random.PCG64(seed_seqs[1]))
    drop_rng = np.random.Generator(np.random.PCG64(seed_seqs[2]))

    model = Model.build(model_cfg, init_rng)
    emb = emb_matrix.copy() if cfg.train_embeddings else emb_matrix
    states = {name: AdamState.like(arr) for name, arr in model.named_params()}
    emb_state = AdamState.like(emb) if cfg.train_embeddings else None

    best_dev = -1.0
    best_snapshot = model.copy_params()
    best_emb = emb.copy() if cfg.train_embeddings else None
    epochs_since_best = 0
    history = []
    t_start = time.monotonic()

    for epoch in range(1, cfg.epochs + 1):
        loss_sum = 0.0
        grads = {}
        for b_idx, batch in enumerate(D.make_batches(train_idx, cfg.batch_size, batch_rng, shuffle=True)):
            probs, trace = model_forward(model, emb, batch, drop_rng, training=True)
            loss, dlogits = cross_entropy(probs, batch.labels)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} batch {b_idx} (seed {cfg.seed})"
                )
            grads, dEmb = model_backward(model, trace, dlogits)
            if cfg.softmax_l2 > 0:
                grads["softmax.W"] = grads["softmax.W"] + cfg.softmax_l2 * model.softmax_W
            for name, arr in model.named_params():
                adam_update(arr, grads[name], states[name], cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
            if cfg.train_embeddings:
                full = np.zeros_like(emb)
                np.add.at(full, batch.indices, dEmb)
                full[D.PAD_IDX] = 0.0
                adam_update(emb, full, emb_state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
                emb[D.PAD_IDX] = 0.0
            max_norm_constrain(model.softmax_W, cfg.max_norm_s)
            loss_sum += loss * len(batch.labels)

        train_loss = loss_sum / len(train_idx)
        train_acc = evaluate(model, emb, train_idx, cfg.batch_size)
        dev_acc = evaluate(model, emb, dev_idx, cfg.batch_size) if dev_idx else None
        test_acc = evaluate(model, emb, test_idx, cfg.batch_size) if test_idx else None

        record = {
            "event": "epoch",
            "tag": tag,
            "epoch": epoch,
            "train_loss": train_loss,
            "train_acc": train_acc,
            "dev_acc": dev_acc,
            "test_acc": test_acc,
            "grad_norm_per_layer": _grad_group_norms(grads),
            "seed": cfg.seed,
        }
        # log lines must be a pure function of (config, seed, data); wall time
        # lives only in the in-memory report and on stderr
        log_fh.write(json.dumps(record, sort_keys=True) + "\n")
        wall_ms = (time.monotonic() - t_start) * 1e3
        history.append({**record, "wall_ms": wall_ms})
        print(
            f"[{tag}] epoch {epoch}: loss {train_loss:.4f} train {train_acc:.4f}"
            + (f" dev {dev_acc:.4f}" if dev_acc is not None else "")
            + f" ({wall_ms / 1e3:.1f}s)",
            file=sys.stderr,
        )

        if dev_idx:
            if dev_acc > best_dev:
                best_dev = dev_acc
                best_snapshot = model.copy_params()
                if cfg.train_embeddings:
                    best_emb = emb.copy()
                epochs_since_best = 0
            else:
                epochs_since_best += 1
                if epochs_since_best >= cfg.patience:
                    break
        else:
            best_snapshot = model.copy_params()
            if cfg.train_embeddings:
                best_emb = emb.copy()
        if cfg.stop_at_train_acc is not None and train_acc >= cfg.stop_at_train_acc:
            break

    model.load_params(best_snapshot)
    if cfg.train_embeddings:
        emb = best_emb
    final_train_acc = evaluate(model, emb, train_idx, cfg.batch_size)
    final_dev = evaluate(model, emb, dev_idx, cfg.batch_size) if dev_idx else None
    final_test = evaluate(model, emb, test_idx, cfg.batch_size) if test_idx else None
    return model, emb, {
        "best_dev_acc": final_dev,
        "test_acc": final_test,
        "final_train_acc": final_train_acc,
        "epochs_run": epoch,
        "history": history,
    }


# ---------------------------------------------------------------------------
# entry point


def train(cfg):
    """Run the configured training job; returns a TrainReport."""
    cfg.validate()
    import os

    root = np.random.SeedSequence(cfg.seed)
    split_ss, emb_ss, *_ = root.spawn(2)
    rng_split = np.random.Generator(np.random.PCG64(split_ss))
    rng_emb = np.random.Generator(np.random.PCG64(emb_ss))

    # load everything before touching the filesystem so a bad path or a
    # malformed corpus leaves no half-written artifacts behind
    if cfg.cv_folds:
        pool = _load_split(cfg, cfg.train_path, phrases=cfg.phrases)
        splits = [pool]
    else:
        train_ex, dev_ex, test_ex = _prepare_single(cfg, rng_split)
        splits = [train_ex, dev_ex or [], test_ex or []]
    vocab, emb_matrix, m = _build_tables(cfg, splits, rng_emb)
    num_classes = cfg.num_classes or _infer_classes(splits)
    model_cfg = _model_config(cfg, m, num_classes)

    os.makedirs(cfg.out_dir, exist_ok=True)
    log_path = os.path.join(cfg.out_dir, "run.log")

    with open(log_path, "w", encoding="utf-8") as log_fh:
        _write_config(log_fh, cfg, m, num_classes)
        if cfg.cv_folds:
            indexed = D.vectorize(pool, vocab, drop_unknown=bool(cfg.embeddings_path))
            folds = D.make_folds(len(indexed), cfg.cv_folds, seed=cfg.seed)
            fold_accs = []
            ckpt_path = ""
            fold_seqs = root.spawn(cfg.cv_folds)
            for i, held_out in enumerate(folds):
                held = set(held_out)
                test_idx = [indexed[j] for j in held_out]
                rest = [indexed[j] for j in range(len(indexed)) if j not in held]
                order = np.arange(len(rest))
                rng_split.shuffle(order)
                n_dev = max(1, int(len(rest) * cfg.dev_fraction)) if cfg.dev_fraction > 0 else 0
                dev_idx = [rest[j] for j in order[:n_dev]]
                train_idx = [rest[j] for j in order[n_dev:]]
                model, emb, stats = _fit(
                    cfg, model_cfg, emb_matrix, train_idx, dev_idx or None, test_idx,
                    fold_seqs[i].spawn(3), log_fh, f"fold{i}",
                )
                ckpt_path = os.path.join(cfg.out_dir, f"fold{i}.ckpt")
                save_checkpoint(ckpt_path, model, cfg.seed, vocab=vocab, emb_matrix=emb)
                fold_accs.append(stats["test_acc"])
                log_fh.write(json.dumps(
                    {"event": "result", "tag": f"fold{i}", "seed": cfg.seed, **{
                        k: stats[k] for k in ("best_dev_acc", "test_acc", "final_train_acc", "epochs_run")
                    }}, sort_keys=True) + "\n")
            mean_acc = float(np.mean(fold_accs))
            log_fh.write(json.dumps(
                {"event": "cv_summary", "fold_accs": fold_accs, "mean_acc": mean_acc,
                 "seed": cfg.seed}, sort_keys=True) + "\n")
            return TrainReport(
                best_dev_acc=None, test_acc=None, final_train_acc=float("nan"),
                epochs_run=0, checkpoint_path=ckpt_path, log_path=log_path,
                history=[], fold_accs=fold_accs, mean_acc=mean_acc, seed=cfg.seed,
            )

        drop = bool(cfg.embeddings_path)
        train_idx = D.vectorize(train_ex, vocab, drop_unknown=drop)
        dev_idx = D.vectorize(dev_ex, vocab, drop_unknown=drop) if dev_ex else None
        test_idx = D.vectorize(test_ex, vocab, drop_unknown=drop) if test_ex else None
        model, emb, stats = _fit(
            cfg, model_cfg, emb_matrix, train_idx, dev_idx, test_idx,
            root.spawn(1)[0].spawn(3), log_fh, "train",
        )
        ckpt_path = os.path.join(cfg.out_dir, "model.ckpt")
        save_checkpoint(ckpt_path, model, cfg.seed, vocab=vocab, emb_matrix=emb)
        log_fh.write(json.dumps(
            {"event": "result", "tag": "train", "seed": cfg.seed, **{
                k: stats[k] for k in ("best_dev_acc", "test_acc", "final_train_acc", "epochs_run")
            }}, sort_keys=True) + "\n")
        return TrainReport(
            best_dev_acc=stats["best_dev_acc"], test_acc=stats["test_acc"],
            final_train_acc=stats["final_train_acc"], epochs_run=stats["epochs_run"],
            checkpoint_path=ckpt_path, log_path=log_path, history=stats["history"],
            seed=cfg.seed,
        )


def _model_config(cfg, m, num_classes):
    if num_classes < 2:
        raise ConfigError("could not infer at least two classes from the data")
    return ModelConfig(
        m=m, dl=cfg.dl, dh=cfg.dh, th=cfg.th, num_classes=num_classes,
        arch=cfg.arch, dropout_embed=cfg.dropout_embed, dropout_pool=cfg.dropout_pool,
        max_norm_s=cfg.max_norm_s, forget_bias=cfg.forget_bias,
        train_embeddings=cfg.train_embeddings,
    ).validate()


def _write_config(log_fh, cfg, m, num_classes):
    effective = asdict(cfg)
    effective.update({"event": "config", "m": m, "resolved_num_classes": num_classes})
    log_fh.write(json.dumps(effective, sort_keys=True) + "\n")
