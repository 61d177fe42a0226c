"""Desk-scale training of linear probes over pullback features.

The probe is: metric projection, flatten, batch feature standardization,
linear classifier.  Gradients flow end to end, through the standardizer's
batch statistics and, for the learnable metrics, through the spline
weights via the analytical backward passes.  Everything is seeded and
accumulated in a fixed order so runs are bit-for-bit repeatable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    PullbackMetric,
    SplineCholeskyMetric,
    SplineSpectralMetric,
    has_learnable_map,
    metric_backward,
    metric_forward,
)
from .spd import eig_sym, symmetrize
from .spline import MonotoneSplineParams, make_curve

__all__ = [
    "TrainConfig",
    "AdamState",
    "Standardizer",
    "LabeledSpdDataset",
    "ProbeModel",
    "softmax_xent",
    "clip_global_norm",
    "adam_step",
    "standardize_batch",
    "stratified_split",
    "train_probe",
    "evaluate",
    "airm_probe_features",
]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 15
    clip_norm: float = 2.0
    seed: int = 42
    val_fraction: float = 0.2
    # learning-rate multiplier for the metric (spline) parameter group;
    # the cumulative parameterization needs larger steps than the head
    metric_lr_scale: float = 1.0

    def __post_init__(self):
        positives = {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "clip_norm": self.clip_norm,
            "metric_lr_scale": self.metric_lr_scale,
        }
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class LabeledSpdDataset:
    matrices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.matrices.ndim != 3 or (
                self.matrices.shape[1] != self.matrices.shape[2]):
            raise ValueError("matrices must be a stack of square matrices")
        if len(self.matrices) != len(self.labels):
            raise ValueError("matrices and labels lengths differ")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0


def softmax_xent(logits: np.ndarray, label: int):
    """Cross entropy and its logit gradient, via a stable log-sum-exp."""
    z = np.asarray(logits, dtype=float)
    if not 0 <= label < len(z):
        raise ValueError(f"label {label} out of range for {len(z)} classes")
    shifted = z - z.max()
    log_probs = shifted - math.log(np.sum(np.exp(shifted)))
    grad = np.exp(log_probs)
    grad[label] -= 1.0
    return -float(log_probs[label]), grad


def clip_global_norm(grads: dict[str, np.ndarray],
                     max_norm: float) -> dict[str, np.ndarray]:
    """Scale every gradient by max_norm/g when the joint L2 norm g exceeds it."""
    if max_norm <= 0.0:
        raise ValueError("max_norm must be positive")
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(state: AdamState, params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray], config: TrainConfig,
              lr_scale: dict[str, float] | None = None) -> dict[str, np.ndarray]:
    """One Adam update with bias correction and coupled L2 weight decay.

    ``lr_scale`` optionally multiplies the learning rate per parameter
    group, the usual way to give slow parameters a faster schedule.
    """
    if not state.m:
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
    state.step += 1
    t = state.step
    lr_scale = lr_scale or {}
    out = {}
    for key, p in params.items():
        g = grads[key] + config.weight_decay * p
        state.m[key] = state.beta1 * state.m[key] + (1 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1 - state.beta2) * g * g
        m_hat = state.m[key] / (1 - state.beta1 ** t)
        v_hat = state.v[key] / (1 - state.beta2 ** t)
        lr = config.learning_rate * lr_scale.get(key, 1.0)
        out[key] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


@dataclass
class Standardizer:
    """Per-feature batch standardization with running statistics."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def for_dim(cls, dim: int) -> "Standardizer":
        return cls(np.zeros(dim), np.ones(dim))

    def copy(self) -> "Standardizer":
        return Standardizer(self.running_mean.copy(), self.running_var.copy(),
                            self.momentum, self.eps)


def standardize_batch(standardizer: Standardizer, features: np.ndarray,
                      training: bool):
    """Normalize a (batch, features) block.

    Training mode normalizes by batch statistics, updates the running
    stats, and returns a cache for the backward pass; eval mode uses the
    running statistics and returns no cache.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("expected a nonempty (batch, features) array")
    if training:
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + standardizer.eps)
        out = (x - mean) * inv_std
        mom, b = standardizer.momentum, x.shape[0]
        unbiased = var * b / max(b - 1, 1)
        standardizer.running_mean = (
            (1 - mom) * standardizer.running_mean + mom * mean)
        standardizer.running_var = (
            (1 - mom) * standardizer.running_var + mom * unbiased)
        return out, (x, mean, inv_std)
    inv_std = 1.0 / np.sqrt(standardizer.running_var + standardizer.eps)
    return (x - standardizer.running_mean) * inv_std, None


def standardize_backward(cache, grad_out: np.ndarray) -> np.ndarray:
    """Backpropagate through train-mode standardization (batch statistics)."""
    x, mean, inv_std = cache
    b = x.shape[0]
    xc = x - mean
    g = np.asarray(grad_out, dtype=float)
    dvar = np.sum(g * xc, axis=0) * (-0.5) * inv_std ** 3
    dmean = -np.sum(g, axis=0) * inv_std + dvar * (-2.0 / b) * np.sum(
        xc, axis=0)
    return g * inv_std + dvar * 2.0 * xc / b + dmean / b


def stratified_split(labels: np.ndarray, val_fraction: float, seed: int):
    """Per-class seeded shuffle, then round-robin assignment to validation."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    period = max(2, int(round(1.0 / val_fraction)))
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        ids = np.nonzero(labels == cls)[0]
        ids = ids[rng.permutation(len(ids))]
        mask = np.zeros(len(ids), dtype=bool)
        mask[::period] = True
        val_idx.extend(ids[mask])
        train_idx.extend(ids[~mask])
    return np.sort(np.array(train_idx)), np.sort(np.array(val_idx))


@dataclass
class ProbeModel:
    metric: PullbackMetric
    standardizer: Standardizer
    weight: np.ndarray
    bias: np.ndarray

    @property
    def class_count(self) -> int:
        return self.weight.shape[0]


def _features(metric: PullbackMetric, matrices: np.ndarray) -> np.ndarray:
    return np.stack([metric_forward(metric, s).ravel() for s in matrices])


def _rebuild_metric(metric: PullbackMetric,
                    params: dict[str, np.ndarray]) -> PullbackMetric:
    if not has_learnable_map(metric):
        return metric
    spline_params = MonotoneSplineParams(
        float(params["spline_c0"]), params["spline_w"].copy(),
        metric.curve.params.min_step)
    curve = make_curve(metric.curve.grid, spline_params)
    if isinstance(metric, SplineSpectralMetric):
        return SplineSpectralMetric(curve, metric.policy, metric.tie_break)
    return SplineCholeskyMetric(curve)


def _batch_loss_and_grads(metric, standardizer, params, mats, labels):
    """Forward and backward over one minibatch; returns mean-loss grads."""
    feats = _features(metric, mats)
    z, cache = standardize_batch(standardizer, feats, training=True)
    logits = z @ params["linear_w"].T + params["linear_b"]
    b = len(labels)
    loss = 0.0
    dlogits = np.zeros_like(logits)
    hits = 0
    for i, label in enumerate(labels):
        li, gi = softmax_xent(logits[i], int(label))
        loss += li / b
        dlogits[i] = gi / b
        hits += int(np.argmax(logits[i]) == label)
    grads = {
        "linear_w": dlogits.T @ z,
        "linear_b": dlogits.sum(axis=0),
    }
    if has_learnable_map(metric):
        dz = dlogits @ params["linear_w"]
        dfeat = standardize_backward(cache, dz)
        gc0, gw = 0.0, np.zeros_like(params["spline_w"])
        for i, s in enumerate(mats):
            upstream = dfeat[i].reshape(s.shape)
            mg = metric_backward(metric, s, upstream)
            gc0 += mg.grad_spline.c0_raw
            gw += mg.grad_spline.step_weights
        grads["spline_c0"] = np.asarray(gc0)
        grads["spline_w"] = gw
    return loss, grads, hits


def train_probe(dataset: LabeledSpdDataset, metric: PullbackMetric,
                config: TrainConfig = TrainConfig()):
    """Train the linear probe; returns the best-validation model and history.

    The dataset is split stratified by class, minibatches reshuffle each
    epoch, and the weights from the best validation epoch are restored
    before returning.  Training halts once validation accuracy has not
    improved for ``config.patience`` epochs.
    """
    if dataset.class_count < 2:
        raise ValueError("need at least two classes")
    train_idx, val_idx = stratified_split(dataset.labels,
                                          config.val_fraction, config.seed)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError("dataset too small for the validation split")

    feat_dim = dataset.dim * dataset.dim
    k = dataset.class_count
    rng = np.random.default_rng(config.seed)
    bound = 1.0 / math.sqrt(feat_dim)
    params = {
        "linear_w": rng.uniform(-bound, bound, (k, feat_dim)),
        "linear_b": np.zeros(k),
    }
    lr_scale = None
    if has_learnable_map(metric):
        params["spline_c0"] = np.asarray(float(metric.curve.params.c0_raw))
        params["spline_w"] = metric.curve.params.step_weights.copy()
        lr_scale = {"spline_c0": config.metric_lr_scale,
                    "spline_w": config.metric_lr_scale}
    standardizer = Standardizer.for_dim(feat_dim)
    state = AdamState()

    best = None
    best_val = -1.0
    since_best = 0
    history = []
    for epoch in range(config.max_epochs):
        order = train_idx[rng.permutation(len(train_idx))]
        epoch_loss, epoch_hits = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            live = _rebuild_metric(metric, params)
            loss, grads, hits = _batch_loss_and_grads(
                live, standardizer, params, dataset.matrices[batch],
                dataset.labels[batch])
            grads = clip_global_norm(grads, config.clip_norm)
            params = adam_step(state, params, grads, config, lr_scale)
            epoch_loss += loss * len(batch)
            epoch_hits += hits
        model = ProbeModel(_rebuild_metric(metric, params),
                           standardizer, params["linear_w"],
                           params["linear_b"])
        val_acc = evaluate(model, LabeledSpdDataset(
            dataset.matrices[val_idx], dataset.labels[val_idx]))
        history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / len(order),
            "train_acc": epoch_hits / len(order),
            "val_acc": val_acc,
        })
        if val_acc > best_val:
            best_val = val_acc
            best = ({key: np.copy(val) for key, val in params.items()},
                    standardizer.copy())
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    best_params, best_standardizer = best
    model = ProbeModel(_rebuild_metric(metric, best_params),
                       best_standardizer, best_params["linear_w"],
                       best_params["linear_b"])
    return model, history


def evaluate(model: ProbeModel, dataset: LabeledSpdDataset) -> float:
    """Argmax accuracy under eval-mode standardization."""
    if dataset.dim * dataset.dim != model.weight.shape[1]:
        raise ValueError("dataset dimension does not match the model")
    feats = _features(model.metric, dataset.matrices)
    z, _ = standardize_batch(model.standardizer, feats, training=False)
    logits = z @ model.weight.T + model.bias
    pred = np.argmax(logits, axis=1)
    return float(np.mean(pred == dataset.labels))


def airm_probe_features(dataset: LabeledSpdDataset,
                        global_mean: np.ndarray) -> np.ndarray:
    """Whitened log features log(M^-1/2 X M^-1/2), flattened per sample."""
    u, lam = eig_sym(global_mean, tie_break=0.0)
    if np.any(lam <= 0.0):
        raise ValueError("global mean must be positive definite")
    isqrt = (u / np.sqrt(lam)) @ u.T
    out = np.empty((len(dataset), dataset.dim * dataset.dim))
    for i, x in enumerate(dataset.matrices):
        m = symmetrize(isqrt @ x @ isqrt)
        w, v = np.linalg.eigh(m)
        out[i] = symmetrize((v * np.log(w)) @ v.T).ravel()
    return out
