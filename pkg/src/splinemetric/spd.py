"""Validated SPD matrices, guarded factorizations, spectral perturbation.

Plain float64 ndarrays are the working representation; the functions here
are the validated constructors and the numerically safeguarded
decompositions every other module routes through.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DecompositionError",
    "PerturbationPolicy",
    "SpectralDecomp",
    "symmetrize",
    "as_spd",
    "eig_sym",
    "perturb_spectrum",
    "chol_with_fallback",
    "random_orthogonal",
    "random_spd",
    "frob",
]

TIE_BREAK_DELTA = 1e-8
CLAMP_FLOOR = 1e-4


class DecompositionError(RuntimeError):
    """A matrix factorization failed for the given input."""


@dataclass(frozen=True)
class PerturbationPolicy:
    """Asymmetric spectral shift: eigenvalue i receives i * delta."""

    delta: float = 1e-8

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be strictly positive")


class SpectralDecomp(NamedTuple):
    u: np.ndarray
    eigenvalues: np.ndarray


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def as_spd(m: np.ndarray, project: bool = False,
           floor: float = 1e-12) -> np.ndarray:
    """Validated SPD matrix: symmetrized, smallest eigenvalue > 0.

    With project=True, eigenvalues are clamped to ``floor`` instead of
    rejecting the input; meant for user-ingested data.
    """
    s = symmetrize(m)
    if not np.all(np.isfinite(s)):
        raise ValueError("matrix entries must be finite")
    w = np.linalg.eigvalsh(s)
    if w[0] > 0.0:
        return s
    if not project:
        raise ValueError(f"matrix is not positive definite (min eig {w[0]:g})")
    w_full, u = np.linalg.eigh(s)
    return symmetrize(u @ np.diag(np.maximum(w_full, floor)) @ u.T)


def eig_sym(s: np.ndarray,
            tie_break: float = TIE_BREAK_DELTA) -> SpectralDecomp:
    """Ascending eigendecomposition with a diagonal tie-breaker.

    Entry i of the diagonal receives (i+1) * tie_break before the solve so
    exactly repeated eigenvalues separate deterministically; pass 0.0 for
    an exact decomposition.  Reconstruction holds for the jittered matrix.
    """
    s = symmetrize(s)
    if not np.all(np.isfinite(s)):
        raise DecompositionError("non-finite entries")
    n = s.shape[0]
    if tie_break:
        s = s + np.diag(tie_break * np.arange(1, n + 1, dtype=float))
    try:
        w, u = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh is robust
        raise DecompositionError(str(exc)) from exc
    return SpectralDecomp(u, w)


def perturb_spectrum(eigenvalues: np.ndarray,
                     policy: PerturbationPolicy) -> np.ndarray:
    """Shift eigenvalue i by (i+1) * delta, forcing pairwise gaps >= delta."""
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(lam) < 0.0):
        raise ValueError("eigenvalues must be ascending")
    return lam + policy.delta * np.arange(1, len(lam) + 1, dtype=float)


def chol_with_fallback(s: np.ndarray, jitter: float = 0.0,
                       clamp_floor: float = CLAMP_FLOOR) -> np.ndarray:
    """Lower Cholesky factor that never fails on finite symmetric input.

    The primary attempt factors s (plus an optional diagonal jitter).  If
    that fails, eigenvalues are clamped to ``clamp_floor``, the matrix is
    rebuilt, and the factorization is retried on the sanitized matrix.
    """
    s = symmetrize(s)
    if not np.all(np.isfinite(s)):
        raise DecompositionError("non-finite entries")
    attempt = s if jitter == 0.0 else s + jitter * np.eye(s.shape[0])
    try:
        return np.linalg.cholesky(attempt)
    except np.linalg.LinAlgError:
        pass
    w, u = np.linalg.eigh(s)
    rebuilt = symmetrize(u @ np.diag(np.maximum(w, clamp_floor)) @ u.T)
    return np.linalg.cholesky(rebuilt)


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-like orthogonal matrix: QR of a Gaussian with sign correction."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_spd(dim: int, eig_range: tuple[float, float],
               seed: int) -> np.ndarray:
    """U diag(lam) U^T with uniform eigenvalues and a random rotation."""
    lo, hi = float(eig_range[0]), float(eig_range[1])
    if not 0.0 < lo < hi:
        raise ValueError(f"eig_range must be positive and ordered, got "
                         f"({lo}, {hi})")
    rng = np.random.default_rng(seed)
    lam = rng.uniform(lo, hi, size=dim)
    u = random_orthogonal(dim, rng)
    return symmetrize(u @ np.diag(lam) @ u.T)


def frob(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))
