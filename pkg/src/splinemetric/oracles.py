"""Independent verification tools used by tests and the check suites.

Nothing here is called by the main computational path.  The finite
difference gradients, the brute-force mean minimizer, and the sampled
sup-norm exist to check the analytical routes by a slower, structurally
different computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import geometry
from .spd import symmetrize

__all__ = [
    "FdConfig",
    "OracleDivergence",
    "finite_diff_grad",
    "finite_diff_vec",
    "brute_frechet",
    "sample_sup_error",
]


@dataclass(frozen=True)
class FdConfig:
    step: float = 1e-6

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("step must be positive")


class OracleDivergence(RuntimeError):
    """The brute-force minimizer made no progress for too long."""


def finite_diff_grad(fn: Callable[[np.ndarray], float], s: np.ndarray,
                     config: FdConfig = FdConfig()) -> np.ndarray:
    """Central-difference gradient of a scalar function of a symmetric matrix.

    Uses the symmetric perturbation basis E_ij + E_ji (just E_ii on the
    diagonal) and returns G with d fn = <G, dS>_F for symmetric dS.
    """
    s = symmetrize(s)
    h = config.step
    n = s.shape[0]
    grad = np.zeros_like(s)
    for i in range(n):
        for j in range(i, n):
            d = np.zeros_like(s)
            d[i, j] = d[j, i] = 1.0
            plus = fn(s + h * d)
            minus = fn(s - h * d)
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise ValueError("non-finite function value in differencing")
            slope = (plus - minus) / (2.0 * h)
            if i == j:
                grad[i, i] = slope
            else:
                grad[i, j] = grad[j, i] = 0.5 * slope
    return grad


def finite_diff_vec(fn: Callable[[np.ndarray], float], x: np.ndarray,
                    step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of a flat parameter vector."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        d = np.zeros_like(x)
        d[i] = step
        out[i] = (fn(x + d) - fn(x - d)) / (2.0 * step)
    return out


def _expm_sym(g: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(symmetrize(g))
    return symmetrize((u * np.exp(w)) @ u.T)


def _logm_spd(p: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(symmetrize(p))
    return symmetrize((u * np.log(w)) @ u.T)


def brute_frechet(metric, points, weights, steps: int = 400) -> np.ndarray:
    """Minimize the weighted squared-distance sum by descent, not algebra.

    The candidate mean is parameterized as the matrix exponential of an
    unconstrained symmetric matrix, so every iterate is positive definite
    without projection.  Gradients come from finite differences; step
    sizes adapt with the Barzilai-Borwein rule, which handles the badly
    conditioned basins a learned diagonal map can produce.  The best
    iterate seen is returned.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    weights = np.asarray(weights, dtype=float)
    # the P_i are constants of the objective; map them once
    flats = [geometry.metric_forward(metric, p) for p in points]

    def objective(g):
        fm = geometry.metric_forward(metric, _expm_sym(g))
        return float(sum(w * np.sum((fm - fp) ** 2)
                         for w, fp in zip(weights, flats)))

    g = sum(w * _logm_spd(p) for w, p in zip(weights, points))
    val = objective(g)
    grad = finite_diff_grad(objective, g, FdConfig(step=1e-6))
    best_g, best_val = g, val
    alpha = 1.0 / max(1.0, np.linalg.norm(grad))
    increases = 0
    for _ in range(steps):
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-11:
            break
        cand = g - alpha * grad
        cand_val = objective(cand)
        for _ in range(30):
            if cand_val <= val + 0.1 * abs(val) + 1e-12:
                break
            alpha *= 0.5
            cand = g - alpha * grad
            cand_val = objective(cand)
        increases = increases + 1 if cand_val > val else 0
        if increases >= 50:
            raise OracleDivergence(
                "objective increased for 50 consecutive steps")
        new_grad = finite_diff_grad(objective, cand, FdConfig(step=1e-6))
        s = cand - g
        y = new_grad - grad
        sy = float(np.sum(s * y))
        yy = float(np.sum(y * y))
        alpha = sy / yy if sy > 0.0 and yy > 0.0 else alpha
        g, grad, val = cand, new_grad, cand_val
        if val < best_val:
            best_g, best_val = g, val
        if np.linalg.norm(s) < 1e-11:
            break
    return _expm_sym(best_g)


def sample_sup_error(fn_a, fn_b, domain: tuple[float, float],
                     samples: int = 1000) -> float:
    """Max absolute difference over log-spaced samples of a positive domain."""
    lo, hi = domain
    if not 0.0 < lo < hi:
        raise ValueError("domain must be positive and ordered")
    x = np.exp(np.linspace(np.log(lo), np.log(hi), samples))
    return float(np.max(np.abs(np.asarray(fn_a(x)) - np.asarray(fn_b(x)))))
