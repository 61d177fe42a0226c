"""Pullback maps on SPD matrices and their analytical backward passes.

Two routes turn the scalar monotone map into a matrix diffeomorphism:

* spectral: apply it to the eigenvalues in the eigenbasis, so the map is
  rank invariant and commutes with rotations;
* Cholesky: apply it to the diagonal of the Cholesky factor, leaving the
  strictly lower triangle Euclidean.

The fixed log-Euclidean, log-Cholesky, and power-Cholesky baselines ride
the same two routes with hard-coded scalar functions, which is exactly
what makes an identity-initialized spline reproduce them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .spd import (
    PerturbationPolicy,
    TIE_BREAK_DELTA,
    chol_with_fallback,
    eig_sym,
    perturb_spectrum,
    symmetrize,
)
from .spline import (
    SplineCurve,
    build_grid,
    init_identity,
    make_curve,
    spline_deriv,
    spline_eval,
    spline_grad_weights,
    spline_invert,
)

__all__ = [
    "SplineSpectralMetric",
    "SplineCholeskyMetric",
    "LogEuclideanMetric",
    "LogCholeskyMetric",
    "PowerCholeskyMetric",
    "PullbackMetric",
    "SplineGradient",
    "MetricGradients",
    "dk_matrix",
    "sspm_forward",
    "sspm_inverse",
    "sspm_backward",
    "cspm_forward",
    "cspm_inverse",
    "cspm_backward",
    "baseline_forward",
    "baseline_inverse",
    "metric_forward",
    "metric_inverse",
    "metric_backward",
    "has_learnable_map",
    "airm_distance",
    "alem_counterexample",
    "AlemDemo",
]


@dataclass(frozen=True)
class SplineSpectralMetric:
    """Learnable spectral pullback; jittered on the forward/gradient path."""

    curve: SplineCurve
    policy: PerturbationPolicy = PerturbationPolicy()
    tie_break: float = TIE_BREAK_DELTA


@dataclass(frozen=True)
class SplineCholeskyMetric:
    """Learnable Cholesky-route pullback; factorization is exact."""

    curve: SplineCurve


@dataclass(frozen=True)
class LogEuclideanMetric:
    pass


@dataclass(frozen=True)
class LogCholeskyMetric:
    pass


@dataclass(frozen=True)
class PowerCholeskyMetric:
    """Power map psi(x) = (x^theta - 1) / theta on the Cholesky diagonal.

    Its image is bounded on one side, so the inverse has a restricted
    domain and rejects values beyond the bound instead of clamping.
    """

    theta: float
    allow_nonpositive: bool = False

    def __post_init__(self):
        if self.theta == 0.0:
            raise ValueError("theta must be nonzero")
        if self.theta < 0.0 and not self.allow_nonpositive:
            raise ValueError("theta must be positive "
                             "(pass allow_nonpositive=True to override)")


PullbackMetric = Union[
    SplineSpectralMetric,
    SplineCholeskyMetric,
    LogEuclideanMetric,
    LogCholeskyMetric,
    PowerCholeskyMetric,
]


class SplineGradient(NamedTuple):
    c0_raw: float
    step_weights: np.ndarray


@dataclass
class MetricGradients:
    grad_input: np.ndarray
    grad_spline: SplineGradient | None = None


def _psi(theta: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: (np.power(x, theta) - 1.0) / theta


def _psi_inv(theta: float) -> Callable[[np.ndarray], np.ndarray]:
    def inv(y):
        y = np.asarray(y, dtype=float)
        arg = 1.0 + theta * y
        if np.any(arg <= 0.0):
            bound = -1.0 / theta
            side = "above" if theta < 0.0 else "below"
            raise ValueError(
                f"value outside the power map image (bounded {side} "
                f"by {bound:g})")
        return np.power(arg, 1.0 / theta)
    return inv


def dk_matrix(curve: SplineCurve, perturbed_eigs: np.ndarray) -> np.ndarray:
    """Divided-difference matrix of the scalar map over a separated spectrum.

    Off-diagonal entries are (f(a_i) - f(a_j)) / (a_i - a_j), diagonal
    entries the derivative, so the matrix is symmetric with every entry
    bounded by the value spread over the smallest gap.
    """
    lam = np.asarray(perturbed_eigs, dtype=float)
    if np.any(np.diff(lam) <= 0.0):
        raise ValueError("perturbed eigenvalues must be strictly increasing")
    return _divided_differences(lam, spline_eval(curve, lam),
                                spline_deriv(curve, lam))


def _divided_differences(lam, values, derivs) -> np.ndarray:
    den = lam[:, None] - lam[None, :]
    num = np.asarray(values)[:, None] - np.asarray(values)[None, :]
    np.fill_diagonal(den, 1.0)
    k = num / den
    np.fill_diagonal(k, derivs)
    return k


# ---------------------------------------------------------------- spectral

def _spectral_forward(s, fn, tie_break, policy):
    u, lam = eig_sym(s, tie_break=tie_break)
    if policy is not None:
        lam = perturb_spectrum(lam, policy)
    return symmetrize((u * fn(lam)) @ u.T), (u, lam)


def sspm_forward(metric: SplineSpectralMetric, s: np.ndarray) -> np.ndarray:
    x, _ = _spectral_forward(s, lambda lam: spline_eval(metric.curve, lam),
                             metric.tie_break, metric.policy)
    return x


def sspm_inverse(metric: SplineSpectralMetric, x: np.ndarray) -> np.ndarray:
    """Exact inverse; the gradient-path safeguards have no business here."""
    u, mu = eig_sym(x, tie_break=0.0)
    lam = spline_invert(metric.curve, mu)
    return symmetrize((u * lam) @ u.T)


def sspm_backward(metric: SplineSpectralMetric, s: np.ndarray,
                  upstream: np.ndarray) -> MetricGradients:
    u, lam = eig_sym(s, tie_break=metric.tie_break)
    lam_t = perturb_spectrum(lam, metric.policy)
    k = dk_matrix(metric.curve, lam_t)
    g = u.T @ symmetrize(upstream) @ u
    grad_input = symmetrize(u @ (k * g) @ u.T)
    gc0, gw = spline_grad_weights(metric.curve, lam_t, np.diag(g))
    return MetricGradients(grad_input, SplineGradient(gc0, gw))


# ---------------------------------------------------------------- cholesky

def _phi_half(m: np.ndarray) -> np.ndarray:
    """Lower triangle with halved diagonal, the Cholesky adjoint kernel."""
    return np.tril(m, -1) + 0.5 * np.diag(np.diag(m))


def _chol_forward(s, fn):
    l = chol_with_fallback(s)
    return np.tril(l, -1) + np.diag(fn(np.diag(l))), l


def _chol_inverse(x, fn_inv):
    x = np.asarray(x, dtype=float)
    l = np.tril(x, -1) + np.diag(fn_inv(np.diag(x)))
    return symmetrize(l @ l.T)


def _chol_adjoint(l: np.ndarray, lbar: np.ndarray) -> np.ndarray:
    """Map sensitivities on the factor back to the symmetric input."""
    p = _phi_half(l.T @ lbar)
    inner = np.linalg.solve(l.T, p + p.T)
    return symmetrize(0.5 * np.linalg.solve(l.T, inner.T).T)


def cspm_forward(metric: SplineCholeskyMetric, s: np.ndarray) -> np.ndarray:
    out, _ = _chol_forward(s, lambda d: spline_eval(metric.curve, d))
    return out


def cspm_inverse(metric: SplineCholeskyMetric, x: np.ndarray) -> np.ndarray:
    return _chol_inverse(x, lambda d: spline_invert(metric.curve, d))


def cspm_backward(metric: SplineCholeskyMetric, s: np.ndarray,
                  upstream: np.ndarray) -> MetricGradients:
    l = chol_with_fallback(s)
    d = np.diag(l)
    up = np.tril(np.asarray(upstream, dtype=float))
    fprime = spline_deriv(metric.curve, d)
    lbar = np.tril(up, -1) + np.diag(np.diag(up) * fprime)
    grad_input = _chol_adjoint(l, lbar)
    gc0, gw = spline_grad_weights(metric.curve, d, np.diag(up))
    return MetricGradients(grad_input, SplineGradient(gc0, gw))


# ---------------------------------------------------------------- baselines

def baseline_forward(metric: PullbackMetric, s: np.ndarray) -> np.ndarray:
    if isinstance(metric, LogEuclideanMetric):
        x, _ = _spectral_forward(s, np.log, 0.0, None)
        return x
    if isinstance(metric, LogCholeskyMetric):
        out, _ = _chol_forward(s, np.log)
        return out
    if isinstance(metric, PowerCholeskyMetric):
        out, _ = _chol_forward(s, _psi(metric.theta))
        return out
    raise TypeError(f"not a fixed baseline metric: {metric!r}")


def baseline_inverse(metric: PullbackMetric, x: np.ndarray) -> np.ndarray:
    if isinstance(metric, LogEuclideanMetric):
        u, mu = eig_sym(x, tie_break=0.0)
        return symmetrize((u * np.exp(mu)) @ u.T)
    if isinstance(metric, LogCholeskyMetric):
        return _chol_inverse(x, np.exp)
    if isinstance(metric, PowerCholeskyMetric):
        return _chol_inverse(x, _psi_inv(metric.theta))
    raise TypeError(f"not a fixed baseline metric: {metric!r}")


# ------------------------------------------------------------- dispatchers

def metric_forward(metric: PullbackMetric, s: np.ndarray) -> np.ndarray:
    if isinstance(metric, SplineSpectralMetric):
        return sspm_forward(metric, s)
    if isinstance(metric, SplineCholeskyMetric):
        return cspm_forward(metric, s)
    return baseline_forward(metric, s)


def metric_inverse(metric: PullbackMetric, x: np.ndarray) -> np.ndarray:
    if isinstance(metric, SplineSpectralMetric):
        return sspm_inverse(metric, x)
    if isinstance(metric, SplineCholeskyMetric):
        return cspm_inverse(metric, x)
    return baseline_inverse(metric, x)


def metric_backward(metric: PullbackMetric, s: np.ndarray,
                    upstream: np.ndarray) -> MetricGradients:
    if isinstance(metric, SplineSpectralMetric):
        return sspm_backward(metric, s, upstream)
    if isinstance(metric, SplineCholeskyMetric):
        return cspm_backward(metric, s, upstream)
    raise TypeError(f"metric has no learnable backward pass: {metric!r}")


def has_learnable_map(metric: PullbackMetric) -> bool:
    return isinstance(metric, (SplineSpectralMetric, SplineCholeskyMetric))


# ------------------------------------------------------------------- airm

def airm_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Affine-invariant distance ||log(P^-1/2 Q P^-1/2)||_F."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    u, lam = eig_sym(p, tie_break=0.0)
    isqrt = (u / np.sqrt(lam)) @ u.T
    m = symmetrize(isqrt @ q @ isqrt)
    mu = np.linalg.eigvalsh(m)
    return float(np.linalg.norm(np.log(mu)))


# ------------------------------------------------- rank-dependence failure

class AlemDemo(NamedTuple):
    y1: np.ndarray
    y2: np.ndarray
    spm_output: np.ndarray
    spm_output_alt: np.ndarray


def alem_counterexample(curve: SplineCurve | None = None) -> AlemDemo:
    """Rank-dependent eigenvalue maps are one-to-many at repeated spectra.

    For S = 2I both the standard basis and a 45-degree rotation are valid
    eigenbases.  A map that assigns different values to the two sorted
    eigenvalue slots (here 1 and 2) reconstructs two different outputs,
    while the rank-invariant spectral map lands on the same scalar
    multiple of the identity under either basis.
    """
    if curve is None:
        grid = build_grid(3, 10, (-15.0, 15.0))
        curve = make_curve(grid, init_identity(grid))
    u1 = np.eye(2)
    u2 = np.array([[1.0, -1.0], [1.0, 1.0]]) / np.sqrt(2.0)
    rank_values = np.array([1.0, 2.0])
    y1 = u1 @ np.diag(rank_values) @ u1.T
    y2 = u2 @ np.diag(rank_values) @ u2.T
    c = spline_eval(curve, 2.0)
    spm1 = u1 @ np.diag([c, c]) @ u1.T
    spm2 = u2 @ np.diag([c, c]) @ u2.T
    if np.linalg.norm(y1 - y2) <= 1e-12:
        raise AssertionError("rank-dependent outputs unexpectedly agree")
    if np.linalg.norm(spm1 - spm2) > 1e-12:
        raise AssertionError("rank-invariant outputs unexpectedly differ")
    return AlemDemo(y1, y2, spm1, spm2)
