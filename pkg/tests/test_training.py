import numpy as np
import pytest

from splinemetric import metrics as mx
from splinemetric.oracles import finite_diff_vec
from splinemetric.spd import random_spd
from splinemetric.spline import spline_deriv
from splinemetric.synthetic import canonical_bands, gen_bands_dataset
from splinemetric.training import (
    AdamState,
    LabeledSpdDataset,
    Standardizer,
    TrainConfig,
    adam_step,
    airm_probe_features,
    clip_global_norm,
    evaluate,
    softmax_xent,
    standardize_batch,
    stratified_split,
    train_probe,
)
from splinemetric.training import _batch_loss_and_grads, _rebuild_metric


def test_softmax_xent_symmetric_case():
    loss, grad = softmax_xent(np.array([0.0, 0.0]), 0)
    assert loss == pytest.approx(np.log(2.0), abs=1e-12)
    assert grad == pytest.approx([-0.5, 0.5], abs=1e-12)


def test_softmax_xent_saturation_is_stable():
    loss, grad = softmax_xent(np.array([1000.0, 0.0]), 0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(grad))


def test_softmax_xent_grad_matches_fd(rng):
    logits = rng.standard_normal(5)

    def loss_fn(z):
        return softmax_xent(z, 2)[0]

    fd = finite_diff_vec(loss_fn, logits, 1e-6)
    _, grad = softmax_xent(logits, 2)
    assert np.max(np.abs(grad - fd)) / np.max(np.abs(fd)) < 1e-8


def test_softmax_xent_label_range():
    with pytest.raises(ValueError):
        softmax_xent(np.array([0.0, 0.0]), 2)


def test_clip_global_norm():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([0.0, 4.0])}
    clipped = clip_global_norm(grads, 2.0)
    total = np.sqrt(sum(float(np.sum(g * g)) for g in clipped.values()))
    assert total == pytest.approx(2.0, abs=1e-12)
    small = {"a": np.array([0.6, 0.8])}
    assert clip_global_norm(small, 2.0) is small


def test_adam_first_step_is_signed_lr():
    config = TrainConfig(weight_decay=0.0)
    state = AdamState()
    params = {"x": np.array([1.0, -2.0])}
    grads = {"x": np.array([0.5, -3.0])}
    new = adam_step(state, params, grads, config)
    delta = new["x"] - params["x"]
    expect = -config.learning_rate * np.sign(grads["x"])
    assert delta == pytest.approx(expect, rel=1e-6)


def test_adam_zero_gradient_fixed_point():
    config = TrainConfig(weight_decay=0.0)
    state = AdamState()
    params = {"x": np.array([1.0, -2.0])}
    new = adam_step(state, params, {"x": np.zeros(2)}, config)
    assert np.array_equal(new["x"], params["x"])


def test_standardize_batch_training_moments(rng):
    sd = Standardizer.for_dim(3)
    x = rng.standard_normal((32, 3)) * 4.0 + 1.5
    z, cache = standardize_batch(sd, x, training=True)
    assert np.abs(z.mean(axis=0)).max() < 1e-6
    assert np.abs(z.var(axis=0) - 1.0).max() < 1e-5
    assert cache is not None


def test_standardize_constant_column():
    sd = Standardizer.for_dim(2)
    x = np.column_stack([np.full(8, 3.0), np.arange(8.0)])
    z, _ = standardize_batch(sd, x, training=True)
    assert np.abs(z[:, 0]).max() < 1e-12


def test_standardize_eval_uses_running_stats(rng):
    sd = Standardizer.for_dim(2)
    x = rng.standard_normal((64, 2)) * 2.0 + 5.0
    train_out, _ = standardize_batch(sd, x, training=True)
    eval_out, cache = standardize_batch(sd, x, training=False)
    assert cache is None
    # one momentum-0.1 update moves running stats a tenth of the way
    assert np.abs(eval_out).mean() > np.abs(train_out).mean()


def test_standardize_rejects_empty():
    with pytest.raises(ValueError):
        standardize_batch(Standardizer.for_dim(2), np.zeros((0, 2)), True)


def test_stratified_split_balanced():
    labels = np.array([0, 1] * 50)
    train_idx, val_idx = stratified_split(labels, 0.2, 42)
    assert len(val_idx) == 20
    assert np.sum(labels[val_idx] == 0) == 10
    assert len(np.intersect1d(train_idx, val_idx)) == 0
    again = stratified_split(labels, 0.2, 42)
    assert np.array_equal(train_idx, again[0])


def _toy_dataset(count=60, seed=1):
    ds = gen_bands_dataset(count, 4, canonical_bands(), seed)
    return ds


def test_end_to_end_spline_gradient(rng, random_curve):
    metric = mx.SplineSpectralMetric(random_curve)
    mats = np.stack([random_spd(3, (0.5, 4.0), 700 + i) for i in range(4)])
    labels = np.array([0, 1, 0, 1])
    params = {
        "linear_w": rng.standard_normal((2, 9)) * 0.3,
        "linear_b": rng.standard_normal(2) * 0.1,
        "spline_c0": np.asarray(random_curve.params.c0_raw),
        "spline_w": random_curve.params.step_weights.copy(),
    }
    live = _rebuild_metric(metric, params)
    loss, grads, _ = _batch_loss_and_grads(live, Standardizer.for_dim(9),
                                           params, mats, labels)

    def loss_of_w(w):
        p = dict(params)
        p["spline_w"] = w
        return _batch_loss_and_grads(_rebuild_metric(metric, p),
                                     Standardizer.for_dim(9), p, mats,
                                     labels)[0]

    fd = finite_diff_vec(loss_of_w, params["spline_w"], 1e-6)
    assert np.max(np.abs(grads["spline_w"] - fd)) / np.max(np.abs(fd)) < 1e-5


def test_single_batch_overfit():
    # spectra in disjoint ranges: linearly separable under any log map
    mats = np.stack(
        [random_spd(4, (0.5, 1.0), 900 + i) for i in range(16)]
        + [random_spd(4, (5.0, 10.0), 950 + i) for i in range(16)])
    ds = LabeledSpdDataset(mats, np.array([0] * 16 + [1] * 16))
    config = TrainConfig(max_epochs=200, patience=500, batch_size=32,
                         val_fraction=0.2, seed=0)
    model, history = train_probe(ds, mx.LogEuclideanMetric(), config)
    assert max(h["train_acc"] for h in history) == 1.0


def test_early_stopping_on_plateau():
    mats = np.stack([np.eye(3)] * 40)
    ds = LabeledSpdDataset(mats, np.array([0, 1] * 20))
    config = TrainConfig(max_epochs=100, patience=15, seed=0)
    model, history = train_probe(ds, mx.LogEuclideanMetric(), config)
    assert len(history) < 100
    assert len(history) >= 16


def test_training_determinism(random_curve):
    ds = _toy_dataset(60, seed=5)
    config = TrainConfig(max_epochs=6, seed=11)
    metric = mx.SplineSpectralMetric(random_curve)
    m1, h1 = train_probe(ds, metric, config)
    m2, h2 = train_probe(ds, metric, config)
    assert h1 == h2
    assert np.array_equal(m1.weight, m2.weight)
    assert np.array_equal(m1.metric.curve.params.step_weights,
                          m2.metric.curve.params.step_weights)


def test_best_weights_restored(random_curve):
    ds = _toy_dataset(80, seed=6)
    config = TrainConfig(max_epochs=12, seed=2)
    model, history = train_probe(ds, mx.SplineCholeskyMetric(random_curve),
                                 config)
    train_idx, val_idx = stratified_split(ds.labels, 0.2, 2)
    val_ds = LabeledSpdDataset(ds.matrices[val_idx], ds.labels[val_idx])
    assert evaluate(model, val_ds) == max(h["val_acc"] for h in history)


def test_spline_stays_diffeomorphic_through_training(random_curve):
    ds = _toy_dataset(60, seed=7)
    config = TrainConfig(max_epochs=5, seed=3, metric_lr_scale=10.0)
    model, _ = train_probe(ds, mx.SplineSpectralMetric(random_curve), config)
    xs = np.exp(np.linspace(-18.0, 18.0, 400))
    assert spline_deriv(model.metric.curve, xs).min() > 0.0


def test_train_probe_rejects_degenerate():
    mats = np.stack([np.eye(2)] * 10)
    ds = LabeledSpdDataset(mats, np.zeros(10, dtype=int))
    with pytest.raises(ValueError):
        train_probe(ds, mx.LogEuclideanMetric(), TrainConfig())


def test_evaluate_matches_confusion_recount(random_curve):
    ds = _toy_dataset(60, seed=8)
    config = TrainConfig(max_epochs=4, seed=4)
    model, _ = train_probe(ds, mx.LogEuclideanMetric(), config)
    acc = evaluate(model, ds)
    from splinemetric.training import _features
    feats = _features(model.metric, ds.matrices)
    z, _ = standardize_batch(model.standardizer, feats, training=False)
    preds = np.argmax(z @ model.weight.T + model.bias, axis=1)
    confusion = np.zeros((2, 2), dtype=int)
    for p, t in zip(preds, ds.labels):
        confusion[t, p] += 1
    assert acc == pytest.approx(np.trace(confusion) / len(ds))


def test_evaluate_dim_mismatch(random_curve):
    ds = _toy_dataset(40, seed=9)
    model, _ = train_probe(ds, mx.LogEuclideanMetric(),
                           TrainConfig(max_epochs=2))
    bad = LabeledSpdDataset(np.stack([np.eye(3)] * 4),
                            np.array([0, 1, 0, 1]))
    with pytest.raises(ValueError):
        evaluate(model, bad)


def test_airm_probe_features(rng):
    mean = random_spd(3, (0.5, 4.0), 20)
    ds = LabeledSpdDataset(np.stack([mean]), np.array([0]))
    feats = airm_probe_features(ds, mean)
    assert np.abs(feats).max() < 1e-10

    mats = np.stack([random_spd(3, (0.5, 4.0), 21 + i) for i in range(3)])
    ds2 = LabeledSpdDataset(mats, np.zeros(3, dtype=int))
    le_feats = np.stack([
        mx.baseline_forward(mx.LogEuclideanMetric(), m).ravel()
        for m in mats])
    assert np.abs(airm_probe_features(ds2, np.eye(3)) - le_feats).max() < 1e-9

    a = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    ds3 = LabeledSpdDataset(
        np.stack([a @ m @ a.T for m in mats]), np.zeros(3, dtype=int))
    w1 = airm_probe_features(ds2, mean)
    w2 = airm_probe_features(ds3, a @ mean @ a.T)
    n1 = np.linalg.norm(w1, axis=1)
    n2 = np.linalg.norm(w2, axis=1)
    assert n1 == pytest.approx(n2, rel=1e-8)


def test_history_schema(random_curve):
    ds = _toy_dataset(40, seed=10)
    _, history = train_probe(ds, mx.LogEuclideanMetric(),
                             TrainConfig(max_epochs=3))
    for row in history:
        assert set(row) == {"epoch", "train_loss", "train_acc", "val_acc"}
