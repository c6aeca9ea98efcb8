"""Optimizer pieces, the epoch loop, evaluation, and run-log behavior."""

import json
import math

import numpy as np
import pytest

from dcbilstm.data import Batch, make_batches
from dcbilstm.errors import ConfigError, TrainingDiverged
from dcbilstm.model import Model, softmax_rows
from dcbilstm.tensor import make_rng
from dcbilstm.train import (
    AdamState,
    TrainConfig,
    adam_update,
    cross_entropy,
    evaluate,
    max_norm_constrain,
    train,
)
from tests.test_model import small_config

LN2 = 0.69314718055994530942
LN3 = 1.09861228866810969140


# ---------------------------------------------------------------------------
# loss


def test_cross_entropy_uniform_gives_log_c():
    loss2, _ = cross_entropy(np.full((1, 2), 0.5), np.array([1]))
    assert abs(loss2 - LN2) < 1e-15
    loss3, _ = cross_entropy(np.full((1, 3), 1 / 3), np.array([0]))
    assert abs(loss3 - LN3) < 1e-15


def test_cross_entropy_confident_prediction():
    probs = np.array([[0.0, 1.0, 0.0]])
    loss, dlogits = cross_entropy(probs, np.array([1]))
    assert loss == 0.0
    assert np.array_equal(dlogits, np.zeros((1, 3)))


def test_cross_entropy_gradient_matches_finite_differences():
    rng = make_rng(0)
    logits = rng.standard_normal((1, 4))
    label = np.array([2])
    probs = softmax_rows(logits)
    _, dlogits = cross_entropy(probs, label)

    eps = 1e-6
    for k in range(4):
        for sign, store in ((1, "up"), (-1, "down")):
            shifted = logits.copy()
            shifted[0, k] += sign * eps
            p = softmax_rows(shifted)[0, label[0]]
            if sign == 1:
                up = -math.log(p)
            else:
                down = -math.log(p)
        fd = (up - down) / (2 * eps)
        assert abs(dlogits[0, k] - fd) <= 1e-8 * max(1.0, abs(fd))


def test_cross_entropy_batch_mean():
    probs = np.array([[0.5, 0.5], [0.25, 0.75]])
    labels = np.array([0, 1])
    loss, dlogits = cross_entropy(probs, labels)
    assert abs(loss - 0.5 * (LN2 - math.log(0.75))) < 1e-15
    # the 1/B factor sits in the gradient too
    assert np.abs(dlogits - np.array([[-0.25, 0.25], [0.125, -0.125]])).max() < 1e-15


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_is_a_no_op():
    p = np.array([[1.0, -2.0]])
    state = AdamState.like(p)
    adam_update(p, np.zeros_like(p), state, lr=0.1)
    assert np.array_equal(p, np.array([[1.0, -2.0]]))
    assert state.t == 1


def test_adam_against_scalar_reference():
    """Five steps on one weight, checked against a plain-float transcription
    of the bias-corrected update rule."""
    lr, b1, b2, eps = 0.005, 0.9, 0.999, 1e-8
    grads = [0.3, -1.2, 0.7, 0.05, 2.0]

    w_ref, m, v = 0.5, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w_ref -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)

    p = np.array([[0.5]])
    state = AdamState.like(p)
    for g in grads:
        adam_update(p, np.array([[g]]), state, lr, b1, b2, eps)
    assert abs(p[0, 0] - w_ref) < 1e-15


def test_adam_first_step_size_is_lr():
    # with bias correction, step 1 moves by exactly lr against the gradient
    # sign (up to the eps cushion) regardless of gradient magnitude
    for g in (1e-4, 1.0, 250.0):
        p = np.array([[0.0]])
        adam_update(p, np.array([[g]]), AdamState.like(p), lr=0.005)
        assert abs(p[0, 0] + 0.005) < 1e-6, g


def test_adam_determinism():
    rng = make_rng(4)
    grads = [rng.standard_normal((3, 2)) for _ in range(4)]

    def run():
        p = np.ones((3, 2))
        st = AdamState.like(p)
        for g in grads:
            adam_update(p, g, st, 0.01)
        return p

    assert np.array_equal(run(), run())


# ---------------------------------------------------------------------------
# max-norm


def test_max_norm_leaves_small_columns_untouched():
    W = np.array([[1.0, 0.5], [2.0, 0.5]])
    before = W.copy()
    max_norm_constrain(W, 3.0)
    assert np.array_equal(W, before)
    assert max_norm_constrain(W, None) is W


def test_max_norm_rescales_large_columns():
    W = np.zeros((2, 2))
    W[:, 0] = [6.0, 0.0]  # norm 6 = 2s
    W[:, 1] = [0.0, 1.0]
    max_norm_constrain(W, 3.0)
    assert abs(np.linalg.norm(W[:, 0]) - 3.0) < 1e-12
    assert np.array_equal(W[:, 1], [0.0, 1.0])


def test_max_norm_idempotent_bitwise():
    rng = make_rng(2)
    W = 4.0 * rng.standard_normal((10, 6))
    once = max_norm_constrain(W.copy(), 3.0)
    twice = max_norm_constrain(once.copy(), 3.0)
    assert np.array_equal(once, twice)
    # and never increases a norm
    assert (np.linalg.norm(once, axis=0) <= np.linalg.norm(W, axis=0) + 1e-12).all()


# ---------------------------------------------------------------------------
# evaluate


def _indexed_toy(n=20, seed=0):
    rng = make_rng(seed)
    return [([int(rng.integers(2, 8)) for _ in range(int(rng.integers(1, 6)))], k % 2)
            for k in range(n)]


def test_evaluate_uniform_model_ties_to_class_zero():
    cfg = small_config(arch="dense", dl=0, num_classes=2)
    model = Model.build(cfg, make_rng(1))
    model.softmax_W[...] = 0.0
    model.softmax_b[...] = 0.0
    # uniform probabilities predict class 0 everywhere, so accuracy on a
    # balanced set is exactly the share of zero labels
    emb = make_rng(2).standard_normal((8, cfg.m))
    acc = evaluate(model, emb, _indexed_toy(20), batch_size=7)
    assert acc == 0.5


def test_evaluate_matches_confusion_matrix_recount():
    cfg = small_config(arch="dense", dl=1, num_classes=3)
    model = Model.build(cfg, make_rng(3))
    emb = make_rng(4).standard_normal((8, cfg.m))
    indexed = [(idxs, label % 3) for idxs, label in _indexed_toy(30, seed=5)]
    acc = evaluate(model, emb, indexed, batch_size=4)

    from dcbilstm.model import model_forward
    confusion = np.zeros((3, 3), dtype=int)
    for batch in make_batches(indexed, 1):
        probs, _ = model_forward(model, emb, batch, training=False)
        confusion[batch.labels[0], int(probs.argmax())] += 1
    assert confusion.sum() == 30
    assert acc == np.trace(confusion) / 30


def test_evaluate_empty_is_an_error():
    model = Model.build(small_config(), make_rng(0))
    with pytest.raises(ConfigError):
        evaluate(model, np.zeros((4, 6)), [], batch_size=2)


# ---------------------------------------------------------------------------
# train() end to end


def _quick_cfg(toy_tsv, tmp_path, **kw):
    base = dict(
        arch="dense", dl=1, dh=4, th=8, data_format="tsv", train_path=toy_tsv,
        embedding_dim=12, batch_size=8, epochs=3, seed=0,
        out_dir=str(tmp_path / "run"),
    )
    base.update(kw)
    return TrainConfig(**base)


def test_train_writes_log_and_checkpoint(toy_tsv, tmp_path):
    report = train(_quick_cfg(toy_tsv, tmp_path))
    lines = [json.loads(l) for l in open(report.log_path, encoding="utf-8")]
    assert lines[0]["event"] == "config"
    assert lines[0]["seed"] == 0 and lines[0]["epochs"] == 3
    epochs = [l for l in lines if l["event"] == "epoch"]
    assert len(epochs) == report.epochs_run
    assert "wall_ms" not in epochs[0]  # timing must not break byte determinism
    assert "wall_ms" in report.history[0]
    assert set(epochs[0]["grad_norm_per_layer"]) == {"dense0", "top", "softmax"}
    assert lines[-1]["event"] == "result"

    from dcbilstm.model import load_checkpoint
    model, meta = load_checkpoint(report.checkpoint_path)
    assert meta["seed"] == 0 and meta["vocab"] is not None
    assert model.config.dl == 1


def test_train_same_seed_reproduces_bytes(toy_tsv, tmp_path):
    cfg = _quick_cfg(toy_tsv, tmp_path, epochs=2)
    r1 = train(cfg)
    log1 = open(r1.log_path, "rb").read()
    ckpt1 = open(r1.checkpoint_path, "rb").read()
    r2 = train(_quick_cfg(toy_tsv, tmp_path, epochs=2))
    assert open(r2.log_path, "rb").read() == log1
    assert open(r2.checkpoint_path, "rb").read() == ckpt1


def test_train_seed_changes_results(toy_tsv, tmp_path):
    r1 = train(_quick_cfg(toy_tsv, tmp_path, epochs=2))
    r2 = train(_quick_cfg(toy_tsv, tmp_path, epochs=2, seed=1))
    assert r1.history[0]["train_loss"] != r2.history[0]["train_loss"]


def test_train_loss_decreases_on_toy_corpus(toy_tsv, tmp_path):
    cfg = _quick_cfg(toy_tsv, tmp_path, dl=2, dh=8, th=16, epochs=10,
                     dropout_embed=0.0, dropout_pool=0.0, dev_fraction=0.0,
                     batch_size=32)
    report = train(cfg)
    losses = [rec["train_loss"] for rec in report.history]
    assert losses[-1] < losses[0]


def test_train_early_stopping_on_flat_dev(toy_tsv, tmp_path):
    # an lr of ~0 freezes the model, so dev accuracy never improves and the
    # patience counter runs out on schedule
    cfg = _quick_cfg(toy_tsv, tmp_path, epochs=50, lr=1e-12, patience=3,
                     dev_fraction=0.25)
    report = train(cfg)
    assert report.epochs_run == 1 + 3


def test_train_stop_at_train_acc(toy_tsv, tmp_path):
    cfg = _quick_cfg(toy_tsv, tmp_path, dl=2, dh=8, th=16, epochs=200,
                     dropout_embed=0.0, dropout_pool=0.0, dev_fraction=0.0,
                     batch_size=32, stop_at_train_acc=1.0)
    report = train(cfg)
    assert report.final_train_acc == 1.0
    assert report.epochs_run < 200


def test_train_cv_mode(toy_tsv, tmp_path):
    cfg = _quick_cfg(toy_tsv, tmp_path, epochs=2, cv_folds=4, dev_fraction=0.2)
    report = train(cfg)
    assert len(report.fold_accs) == 4
    assert report.mean_acc == pytest.approx(float(np.mean(report.fold_accs)))
    lines = [json.loads(l) for l in open(report.log_path, encoding="utf-8")]
    assert lines[-1]["event"] == "cv_summary"
    tags = {l["tag"] for l in lines if l["event"] == "epoch"}
    assert tags == {f"fold{i}" for i in range(4)}


def test_train_softmax_l2_mode_changes_trajectory(toy_tsv, tmp_path):
    plain = train(_quick_cfg(toy_tsv, tmp_path, epochs=2))
    decayed = train(_quick_cfg(toy_tsv, tmp_path, epochs=2, softmax_l2=0.1))
    assert plain.history[-1]["train_loss"] != decayed.history[-1]["train_loss"]


def test_train_diverges_on_corrupt_embeddings(toy_tsv, tmp_path):
    emb = tmp_path / "broken_vectors.txt"
    words = ["the", "movie", "a", "film", "it", "was", "and", "very",
             "great", "superb", "fun", "lovely", "brilliant", "warm",
             "awful", "dull", "tedious", "grim", "flat", "cold"]
    emb.write_text(
        "\n".join(f"{w} nan 0.1 0.2" if w == "movie" else f"{w} 0.5 0.1 0.2"
                  for w in words) + "\n",
        encoding="utf-8",
    )
    cfg = _quick_cfg(toy_tsv, tmp_path, embeddings_path=str(emb), epochs=2)
    with pytest.raises(TrainingDiverged) as info:
        train(cfg)
    msg = str(info.value)
    assert "batch" in msg and "seed 0" in msg


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(train_path="").validate()
    with pytest.raises(ConfigError):
        TrainConfig(train_path="x", cv_folds=1).validate()
    with pytest.raises(ConfigError):
        TrainConfig(train_path="x", cv_folds=3, dev_path="y").validate()
    with pytest.raises(ConfigError):
        TrainConfig(train_path="x", epochs=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(train_path="x", data_format="parquet").validate()
