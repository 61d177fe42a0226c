"""Monotone clamped B-splines in the log domain.

The scalar map built here sends a positive number x to a real value by
evaluating a B-spline at log(x) inside a fixed knot grid and extending
linearly, with the boundary slopes of the spline, outside it.  Strictly
increasing control points make the map a bijection from (0, inf) onto the
whole real line; the control points are generated from unconstrained
weights through a cumulative softplus so gradient descent can never break
monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KnotGrid",
    "MonotoneSplineParams",
    "SplineCurve",
    "build_grid",
    "basis_value",
    "design_matrix",
    "control_design",
    "deriv_control_design",
    "softplus",
    "softplus_inv",
    "sigmoid",
    "control_points",
    "make_curve",
    "spline_eval",
    "spline_deriv",
    "spline_invert",
    "spline_grad_weights",
    "init_identity",
    "init_random",
    "fit_weights_lsq",
]

DEFAULT_MIN_STEP = 1e-4


@dataclass(frozen=True)
class KnotGrid:
    """Clamped knot vector: end values repeated to multiplicity degree+1."""

    degree: int
    interior_intervals: int
    lo: float
    hi: float
    knots: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.interior_intervals

    @property
    def n_basis(self) -> int:
        return self.interior_intervals + self.degree


def build_grid(degree: int, interior_intervals: int,
               rng: tuple[float, float] = (-15.0, 15.0)) -> KnotGrid:
    """Build the clamped, uniformly spaced knot grid over ``rng``."""
    lo, hi = float(rng[0]), float(rng[1])
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if interior_intervals < 1:
        raise ValueError(
            f"interior_intervals must be >= 1, got {interior_intervals}")
    if not lo < hi:
        raise ValueError(f"range must be ordered, got ({lo}, {hi})")
    inner = np.linspace(lo, hi, interior_intervals + 1)
    knots = np.concatenate([np.full(degree, lo), inner, np.full(degree, hi)])
    return KnotGrid(degree, interior_intervals, lo, hi, knots)


def basis_value(knots: np.ndarray, i: int, degree: int, x: float) -> float:
    """Single basis function B_{i,degree}(x) by the Cox-de Boor recursion.

    The 0/0 convention resolves to zero.  The last nonempty interval is
    treated as closed on the right so the basis still sums to one at the
    final knot.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - degree - 1
    if not 0 <= i < n:
        raise IndexError(f"basis index {i} outside [0, {n})")
    if degree == 0:
        if knots[i] <= x < knots[i + 1]:
            return 1.0
        # closed right end of the global support
        if x == knots[-1] and knots[i] < knots[i + 1] == knots[-1]:
            return 1.0
        return 0.0
    left = 0.0
    d1 = knots[i + degree] - knots[i]
    if d1 > 0.0:
        left = (x - knots[i]) / d1 * basis_value(knots, i, degree - 1, x)
    right = 0.0
    d2 = knots[i + degree + 1] - knots[i + 1]
    if d2 > 0.0:
        right = (knots[i + degree + 1] - x) / d2 * basis_value(
            knots, i + 1, degree - 1, x)
    return left + right


def design_matrix(knots: np.ndarray, degree: int, x: np.ndarray) -> np.ndarray:
    """All basis values at once: shape (len(x), len(knots) - degree - 1)."""
    t = np.asarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = ((t[None, :-1] <= x[:, None]) & (x[:, None] < t[None, 1:])).astype(float)
    at_end = x == t[-1]
    if np.any(at_end):
        nonempty = np.nonzero(t[:-1] < t[1:])[0]
        b[at_end, :] = 0.0
        b[at_end, nonempty[-1]] = 1.0
    for k in range(1, degree + 1):
        cols = len(t) - k - 1
        nxt = np.zeros((len(x), cols))
        for i in range(cols):
            d1 = t[i + k] - t[i]
            if d1 > 0.0:
                nxt[:, i] += (x - t[i]) / d1 * b[:, i]
            d2 = t[i + k + 1] - t[i + 1]
            if d2 > 0.0:
                nxt[:, i] += (t[i + k + 1] - x) / d2 * b[:, i + 1]
        b = nxt
    return b


def softplus(w):
    w = np.asarray(w, dtype=float)
    return np.maximum(w, 0.0) + np.log1p(np.exp(-np.abs(w)))


def softplus_inv(s):
    """Inverse of softplus, stable for large s via log1p(-exp(-s))."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise ValueError("softplus_inv requires strictly positive input")
    with np.errstate(divide="ignore"):
        small = np.log(np.expm1(s))
    large = s + np.log1p(-np.exp(-s))
    return np.where(s < 20.0, small, large)


def sigmoid(w):
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    pos = w >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-w[pos]))
    ew = np.exp(w[~pos])
    out[~pos] = ew / (1.0 + ew)
    return out


@dataclass
class MonotoneSplineParams:
    """Unconstrained weights generating a strictly increasing control polygon."""

    c0_raw: float
    step_weights: np.ndarray
    min_step: float = DEFAULT_MIN_STEP

    def __post_init__(self):
        if self.min_step <= 0.0:
            raise ValueError("min_step must be strictly positive")
        self.step_weights = np.asarray(self.step_weights, dtype=float)

    def copy(self) -> "MonotoneSplineParams":
        return MonotoneSplineParams(self.c0_raw, self.step_weights.copy(),
                                    self.min_step)


def control_points(params: MonotoneSplineParams) -> np.ndarray:
    """c_0 = c0_raw, then c_i = c_{i-1} + softplus(w_i) + min_step."""
    steps = softplus(params.step_weights) + params.min_step
    out = np.empty(len(steps) + 1)
    out[0] = params.c0_raw
    out[1:] = params.c0_raw + np.cumsum(steps)
    return out


@dataclass(frozen=True)
class SplineCurve:
    grid: KnotGrid
    params: MonotoneSplineParams
    control: np.ndarray = field(repr=False)
    slope_left: float
    slope_right: float


def _boundary_slope_coeffs(grid: KnotGrid) -> tuple[float, float]:
    """Denominators of the boundary derivative terms of the control polygon."""
    k, t, n = grid.degree, grid.knots, grid.n_basis
    return t[1 + k] - t[1], t[n - 1 + k] - t[n - 1]


def make_curve(grid: KnotGrid, params: MonotoneSplineParams) -> SplineCurve:
    if len(params.step_weights) != grid.n_basis - 1:
        raise ValueError(
            f"expected {grid.n_basis - 1} step weights, "
            f"got {len(params.step_weights)}")
    c = control_points(params)
    k = grid.degree
    d_left, d_right = _boundary_slope_coeffs(grid)
    m_l = k * (c[1] - c[0]) / d_left
    m_r = k * (c[-1] - c[-2]) / d_right
    return SplineCurve(grid, params, c, m_l, m_r)


def control_design(grid: KnotGrid, x) -> np.ndarray:
    """Rows of d f(x) / d c, valid on every branch of the piecewise map.

    The full map is linear in the control points, including the linear
    tails whose slopes are themselves control point differences, so one
    design matrix evaluates the curve everywhere: f(x) = A(x) @ c.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("spline domain is strictly positive finite x")
    y = np.log(x)
    k, t, n = grid.degree, grid.knots, grid.n_basis
    a, b = grid.lo, grid.hi
    rows = np.zeros((len(x), n))
    inside = (y >= a) & (y <= b)
    if np.any(inside):
        rows[inside] = design_matrix(t, k, y[inside])
    d_left, d_right = _boundary_slope_coeffs(grid)
    left = y < a
    if np.any(left):
        # f = m_L (y - a) + c_0 with m_L = k (c_1 - c_0) / d_left
        w = k * (y[left] - a) / d_left
        rows[left, 0] = 1.0 - w
        rows[left, 1] = w
    right = y > b
    if np.any(right):
        w = k * (y[right] - b) / d_right
        rows[right, n - 1] = 1.0 + w
        rows[right, n - 2] = -w
    return rows


def deriv_control_design(grid: KnotGrid, x) -> np.ndarray:
    """Rows of d f'(x) / d c; f'(x) = S'(log x) / x by the chain rule."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("spline domain is strictly positive finite x")
    y = np.log(x)
    k, t, n = grid.degree, grid.knots, grid.n_basis
    a, b = grid.lo, grid.hi
    rows = np.zeros((len(x), n))
    inside = (y >= a) & (y <= b)
    if np.any(inside):
        # S'(y) = sum_i k (c_i - c_{i-1}) / (t_{i+k} - t_i) B_{i,k-1}(y)
        lower = design_matrix(t, k - 1, y[inside])
        for i in range(1, n):
            coeff = k / (t[i + k] - t[i])
            rows[inside, i] += coeff * lower[:, i]
            rows[inside, i - 1] -= coeff * lower[:, i]
    d_left, d_right = _boundary_slope_coeffs(grid)
    left = y < a
    if np.any(left):
        rows[left, 1] = k / d_left
        rows[left, 0] = -k / d_left
    right = y > b
    if np.any(right):
        rows[right, n - 1] = k / d_right
        rows[right, n - 2] = -k / d_right
    return rows / x[:, None]


def _as_given(x, values: np.ndarray):
    return float(values[0]) if np.isscalar(x) or np.ndim(x) == 0 else values


def spline_eval(curve: SplineCurve, x):
    """Evaluate the monotone map at x > 0 (scalar or array)."""
    rows = control_design(curve.grid, x)
    return _as_given(x, rows @ curve.control)


def spline_deriv(curve: SplineCurve, x):
    """First derivative at x > 0; strictly positive by construction."""
    rows = deriv_control_design(curve.grid, x)
    return _as_given(x, rows @ curve.control)


def spline_invert(curve: SplineCurve, y):
    """Solve spline_eval(curve, x) = y for the unique x > 0.

    Outside the spline's value range the linear tails invert in closed
    form; inside, 60 bisection halvings bracket the root in the log
    domain and a short Newton polish finishes to ~1e-12 relative.  Array
    inputs invert in lockstep.
    """
    scalar = np.isscalar(y) or np.ndim(y) == 0
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    a, b = curve.grid.lo, curve.grid.hi
    f_a, f_b = curve.control[0], curve.control[-1]
    out = np.empty_like(ys)
    below = ys <= f_a
    above = ys >= f_b
    inner = ~(below | above)
    out[below] = (ys[below] - f_a) / curve.slope_left + a
    out[above] = (ys[above] - f_b) / curve.slope_right + b
    if np.any(inner):
        out[inner] = _invert_inner(curve, ys[inner], a, b)
    x = np.exp(out)
    x = np.maximum(x, np.finfo(float).tiny)
    return float(x[0]) if scalar else x


def _inner_values(curve: SplineCurve, z: np.ndarray) -> np.ndarray:
    return design_matrix(curve.grid.knots, curve.grid.degree,
                         z) @ curve.control


def _invert_inner(curve: SplineCurve, ys: np.ndarray, lo: float,
                  hi: float) -> np.ndarray:
    lo = np.full_like(ys, lo)
    hi = np.full_like(ys, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        low_side = _inner_values(curve, mid) < ys
        lo = np.where(low_side, mid, lo)
        hi = np.where(low_side, hi, mid)
    z = 0.5 * (lo + hi)
    for _ in range(5):
        fz = _inner_values(curve, z) - ys
        dz = deriv_control_design(curve.grid,
                                  np.exp(z)) @ curve.control * np.exp(z)
        z = np.clip(z - fz / dz, lo, hi)
    return z


def spline_grad_weights(curve: SplineCurve, x, upstream):
    """Gradient of sum(upstream * f(x)) over (c0_raw, step_weights).

    Accepts matching scalars or arrays and accumulates through the
    cumulative softplus: dc_i/dw_j = sigmoid(w_j) for j <= i.
    """
    rows = control_design(curve.grid, x)
    up = np.atleast_1d(np.asarray(upstream, dtype=float))
    grad_c = up @ rows
    grad_c0 = float(np.sum(grad_c))
    # reverse cumulative sum picks up every control point at or past j
    tail = np.cumsum(grad_c[::-1])[::-1]
    grad_w = sigmoid(curve.params.step_weights) * tail[1:]
    return grad_c0, grad_w


def _knot_averages(grid: KnotGrid) -> np.ndarray:
    """Abscissae at which the control polygon reproduces linear functions."""
    k, t = grid.degree, grid.knots
    return np.array([t[i + 1:i + k + 1].mean() for i in range(grid.n_basis)])


def init_identity(grid: KnotGrid,
                  min_step: float = DEFAULT_MIN_STEP) -> MonotoneSplineParams:
    """Weights whose curve reproduces log(x) to floating point accuracy.

    Control points are placed at the knot averages, the unique polygon
    with exact linear precision, so the curve and both boundary slopes
    match the identity in the log domain.  Interior steps equal the grid
    spacing; the 2(degree-1) steps nearest the clamped ends are smaller.
    """
    xi = _knot_averages(grid)
    steps = np.diff(xi)
    if np.any(steps <= min_step):
        raise ValueError("grid spacing too small for min_step")
    return MonotoneSplineParams(grid.lo, softplus_inv(steps - min_step),
                                min_step)


def init_random(grid: KnotGrid, seed: int,
                min_step: float = DEFAULT_MIN_STEP) -> MonotoneSplineParams:
    """Standard normal step weights, anchored at the grid minimum."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(grid.n_basis - 1)
    return MonotoneSplineParams(grid.lo, w, min_step)


def fit_weights_lsq(grid: KnotGrid, x: np.ndarray, target: np.ndarray,
                    min_step: float = DEFAULT_MIN_STEP,
                    ridge: float = 1e-9,
                    step_ridge: float = 1e-2) -> MonotoneSplineParams:
    """Least squares control fit, then recover weights through softplus.

    A ridge on the polygon steps pulls them toward the identity steps so
    control points with little or no data support stay increasing instead
    of oscillating.  Raises if the fitted steps still fall at or below
    min_step, i.e. the target is not representable by a monotone curve on
    this grid.
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    a = control_design(grid, x)
    anchor = _knot_averages(grid)
    n = grid.n_basis
    d = np.diff(np.eye(n), axis=0)
    lhs = a.T @ a + ridge * np.eye(n) + step_ridge * d.T @ d
    rhs = a.T @ target + ridge * anchor + step_ridge * d.T @ (d @ anchor)
    c = np.linalg.solve(lhs, rhs)
    steps = np.diff(c)
    if np.any(steps <= min_step):
        raise ValueError("least squares fit violates monotone steps")
    return MonotoneSplineParams(float(c[0]), softplus_inv(steps - min_step),
                                min_step)
