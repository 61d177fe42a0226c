"""Closed-form Riemannian operators under a flat pullback geometry.

Every metric here is a global diffeomorphism onto a flat matrix space,
so geodesics, means, transport, and the classifier logits all reduce to
straight-line algebra in the mapped coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .metrics import (
    LogCholeskyMetric,
    LogEuclideanMetric,
    PullbackMetric,
    SplineCholeskyMetric,
    SplineSpectralMetric,
    _divided_differences,
    dk_matrix,
    metric_forward,
    metric_inverse,
)
from .spd import chol_with_fallback, eig_sym, frob, perturb_spectrum, symmetrize
from .spline import spline_deriv
from .metrics import _phi_half

__all__ = [
    "TangentVector",
    "MlrHead",
    "distance",
    "geodesic",
    "log_map",
    "exp_map",
    "pushforward",
    "pushforward_inv",
    "tangent_norm",
    "frechet_mean",
    "parallel_transport",
    "mlr_logits",
]


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        if self.base.shape != self.value.shape:
            raise ValueError("tangent vector and base point dims differ")


@dataclass(frozen=True)
class MlrHead:
    """Per-class flat weights and anchors, shaped like the mapped space."""

    weights: np.ndarray
    anchors: np.ndarray

    def __post_init__(self):
        if self.weights.shape != self.anchors.shape:
            raise ValueError("weights and anchors must share a shape")

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]


def _check_dims(p: np.ndarray, q: np.ndarray):
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")


def distance(metric: PullbackMetric, p: np.ndarray, q: np.ndarray) -> float:
    _check_dims(p, q)
    return frob(metric_forward(metric, p) - metric_forward(metric, q))


def geodesic(metric: PullbackMetric, p: np.ndarray, q: np.ndarray,
             t: float) -> np.ndarray:
    _check_dims(p, q)
    fp = metric_forward(metric, p)
    fq = metric_forward(metric, q)
    return metric_inverse(metric, (1.0 - t) * fp + t * fq)


# ------------------------------------------------------------ differentials

def _spectral_context(metric, p):
    """Eigen data and divided-difference matrix at the base point."""
    if isinstance(metric, SplineSpectralMetric):
        u, lam = eig_sym(p, tie_break=metric.tie_break)
        lam = perturb_spectrum(lam, metric.policy)
        k = dk_matrix(metric.curve, lam)
    else:
        u, lam = eig_sym(p, tie_break=0.0)
        k = _divided_differences(lam, np.log(lam), 1.0 / lam)
    if not np.all(k > 0.0):
        raise AssertionError("divided differences lost positivity")
    return u, k


def _chol_diag_deriv(metric, d: np.ndarray) -> np.ndarray:
    if isinstance(metric, SplineCholeskyMetric):
        return spline_deriv(metric.curve, d)
    if isinstance(metric, LogCholeskyMetric):
        return 1.0 / d
    return np.power(d, metric.theta - 1.0)


def pushforward(metric: PullbackMetric, p: np.ndarray,
                v: np.ndarray) -> np.ndarray:
    """Differential of the pullback map applied to a tangent vector at p."""
    v = symmetrize(v)
    if isinstance(metric, (SplineSpectralMetric, LogEuclideanMetric)):
        u, k = _spectral_context(metric, p)
        return symmetrize(u @ (k * (u.T @ v @ u)) @ u.T)
    l = chol_with_fallback(p)
    a = np.linalg.solve(l, np.linalg.solve(l, v.T).T)
    dl = l @ _phi_half(a)
    d = np.diag(l)
    return np.tril(dl, -1) + np.diag(np.diag(dl) * _chol_diag_deriv(metric, d))


def pushforward_inv(metric: PullbackMetric, p: np.ndarray,
                    w: np.ndarray) -> np.ndarray:
    """Inverse differential: flat displacement back to a tangent vector."""
    if isinstance(metric, (SplineSpectralMetric, LogEuclideanMetric)):
        u, k = _spectral_context(metric, p)
        return symmetrize(u @ ((u.T @ symmetrize(w) @ u) / k) @ u.T)
    l = chol_with_fallback(p)
    d = np.diag(l)
    w = np.tril(np.asarray(w, dtype=float))
    dl = np.tril(w, -1) + np.diag(np.diag(w) / _chol_diag_deriv(metric, d))
    m = np.linalg.solve(l, dl)
    return symmetrize(l @ (m + m.T) @ l.T)


def log_map(metric: PullbackMetric, p: np.ndarray,
            q: np.ndarray) -> TangentVector:
    _check_dims(p, q)
    delta = metric_forward(metric, q) - metric_forward(metric, p)
    return TangentVector(p, pushforward_inv(metric, p, delta))


def exp_map(metric: PullbackMetric, tv: TangentVector) -> np.ndarray:
    flat = metric_forward(metric, tv.base) + pushforward(
        metric, tv.base, tv.value)
    return metric_inverse(metric, flat)


def tangent_norm(metric: PullbackMetric, tv: TangentVector) -> float:
    """Riemannian norm, i.e. the flat norm of the pushed-forward vector."""
    return frob(pushforward(metric, tv.base, tv.value))


def frechet_mean(metric: PullbackMetric, points: Sequence[np.ndarray],
                 weights: Sequence[float] | None = None) -> np.ndarray:
    """Weighted mean in the flat coordinates, mapped back to the cone."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    if weights is None:
        weights = np.full(len(points), 1.0 / len(points))
    w = np.asarray(weights, dtype=float)
    if len(w) != len(points):
        raise ValueError("one weight per point required")
    if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be positive and sum to one")
    acc = sum(wi * metric_forward(metric, p) for wi, p in zip(w, points))
    return metric_inverse(metric, acc)


def parallel_transport(metric: PullbackMetric, tv: TangentVector,
                       b: np.ndarray) -> TangentVector:
    """Move a tangent vector to base b; the flat coordinates never change."""
    _check_dims(tv.base, b)
    flat = pushforward(metric, tv.base, tv.value)
    return TangentVector(b, pushforward_inv(metric, b, flat))


def mlr_logits(metric: PullbackMetric, head: MlrHead,
               x: np.ndarray) -> np.ndarray:
    """Per-class scores <W_k, phi(X) - anchor_k>_F on the mapped input."""
    fx = metric_forward(metric, x)
    if head.weights.shape[1:] != fx.shape:
        raise ValueError(
            f"head shape {head.weights.shape[1:]} does not match mapped "
            f"input {fx.shape}")
    diff = fx[None, :, :] - head.anchors
    return np.einsum("kij,kij->k", head.weights, diff)
