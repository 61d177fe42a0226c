"""Self-contained verification suites behind the check command.

Each suite runs its oracle comparisons and returns one line per check:
name, measured value, threshold, pass flag.  The gradient suite compares
the analytical backward passes against finite differences of the plain
spectral map, the roundtrip suite exercises global bijectivity, and so
on.  Sizes are chosen to finish in seconds.
"""

from __future__ import annotations

import numpy as np

from . import geometry as geo
from . import metrics as mx
from .oracles import brute_frechet, finite_diff_grad, finite_diff_vec
from .spd import frob, random_spd, symmetrize
from .spline import (
    MonotoneSplineParams,
    build_grid,
    init_random,
    make_curve,
    spline_eval,
)

__all__ = ["SUITES", "run_suite"]


def _check(name: str, value: float, threshold: float,
           larger_is_fine: bool = False) -> dict:
    passed = value >= threshold if larger_is_fine else value <= threshold
    return {"name": name, "value": float(value),
            "threshold": float(threshold), "passed": bool(passed)}


def _spline_metrics(seed: int = 7):
    grid = build_grid(3, 10)
    curve = make_curve(grid, init_random(grid, seed))
    return mx.SplineSpectralMetric(curve), mx.SplineCholeskyMetric(curve)


def suite_gradcheck(trials: int = 12) -> list[dict]:
    sspm, cspm = _spline_metrics()
    curve = sspm.curve
    worst_in, worst_w, worst_deg = 0.0, 0.0, 0.0
    rng = np.random.default_rng(0)
    for t in range(trials):
        dim = int(rng.integers(2, 9))
        s = random_spd(dim, (0.5, 4.0), 1000 + t)
        up = symmetrize(rng.standard_normal((dim, dim)))

        def clean_loss(m):
            w, u = np.linalg.eigh(symmetrize(m))
            return float(np.sum(up * ((u * spline_eval(curve, w)) @ u.T)))

        g = mx.sspm_backward(sspm, s, up)
        fd = finite_diff_grad(clean_loss, s)
        worst_in = max(worst_in, frob(g.grad_input - fd) / frob(fd))

        def loss_w(wv):
            p2 = MonotoneSplineParams(curve.params.c0_raw, wv,
                                      curve.params.min_step)
            m2 = mx.SplineSpectralMetric(make_curve(curve.grid, p2))
            return float(np.sum(up * mx.sspm_forward(m2, s)))

        fd_w = finite_diff_vec(loss_w, curve.params.step_weights)
        worst_w = max(worst_w, np.max(np.abs(g.grad_spline.step_weights
                                             - fd_w))
                      / max(1e-12, np.max(np.abs(fd_w))))

        s_deg = symmetrize(np.eye(dim) * 2.0)
        g_deg = mx.sspm_backward(sspm, s_deg, up)
        fd_deg = finite_diff_grad(clean_loss, s_deg)
        worst_deg = max(worst_deg,
                        frob(g_deg.grad_input - fd_deg) / frob(fd_deg))
    lines = [
        _check("sspm grad_input vs fd (separated)", worst_in, 1e-6),
        _check("sspm grad_weights vs fd", worst_w, 1e-6),
        _check("sspm grad_input vs fd (degenerate)", worst_deg, 1e-4),
    ]
    worst_c = 0.0
    for t in range(trials):
        dim = int(rng.integers(2, 9))
        s = random_spd(dim, (0.5, 4.0), 2000 + t)
        up = np.tril(rng.standard_normal((dim, dim)))

        def loss_c(m):
            return float(np.sum(up * mx.cspm_forward(cspm, symmetrize(m))))

        g = mx.cspm_backward(cspm, s, up)
        fd = finite_diff_grad(loss_c, s)
        worst_c = max(worst_c, frob(g.grad_input - fd) / frob(fd))
    lines.append(_check("cspm grad_input vs fd", worst_c, 1e-6))
    return lines


def suite_roundtrip(count: int = 120) -> list[dict]:
    sspm, cspm = _spline_metrics()
    worst = {"sspm": 0.0, "cspm": 0.0, "le": 0.0, "lc": 0.0, "pcm": 0.0}
    fixed = {"le": mx.LogEuclideanMetric(), "lc": mx.LogCholeskyMetric(),
             "pcm": mx.PowerCholeskyMetric(0.5)}
    for i in range(count):
        dim = 2 + (i % 15)
        s_big = random_spd(dim, (20.0, 55.0), 3000 + i)
        s_med = random_spd(dim, (0.5, 4.0), 4000 + i)
        worst["sspm"] = max(worst["sspm"], frob(
            mx.sspm_inverse(sspm, mx.sspm_forward(sspm, s_big)) - s_big)
            / frob(s_big))
        worst["cspm"] = max(worst["cspm"], frob(
            mx.cspm_inverse(cspm, mx.cspm_forward(cspm, s_med)) - s_med)
            / frob(s_med))
        for name, metric in fixed.items():
            rt = mx.baseline_inverse(metric,
                                     mx.baseline_forward(metric, s_med))
            worst[name] = max(worst[name], frob(rt - s_med) / frob(s_med))
    return [_check(f"{k} roundtrip residual", v, 1e-8)
            for k, v in worst.items()]


def suite_frechet(sets: int = 3) -> list[dict]:
    sspm, cspm = _spline_metrics()
    lines = []
    for name, metric in (("sspm", sspm), ("cspm", cspm)):
        worst = 0.0
        for t in range(sets):
            pts = [random_spd(3, (0.5, 4.0), 5000 + 10 * t + i)
                   for i in range(5)]
            closed = geo.frechet_mean(metric, pts)
            brute = brute_frechet(metric, pts, np.full(5, 0.2))
            worst = max(worst, frob(closed - brute))
        lines.append(_check(f"{name} closed-form vs brute mean", worst, 1e-6))
    return lines


def suite_transport(trials: int = 40) -> list[dict]:
    sspm, cspm = _spline_metrics()
    rng = np.random.default_rng(1)
    lines = []
    for name, metric in (("sspm", sspm), ("cspm", cspm)):
        worst_hop, worst_norm = 0.0, 0.0
        for t in range(trials):
            dim = int(rng.integers(2, 7))
            a = random_spd(dim, (0.5, 4.0), 6000 + t)
            b = random_spd(dim, (0.5, 4.0), 6100 + t)
            c = random_spd(dim, (0.5, 4.0), 6200 + t)
            v = geo.TangentVector(a, symmetrize(
                rng.standard_normal((dim, dim))))
            direct = geo.parallel_transport(metric, v, b)
            hop = geo.parallel_transport(
                metric, geo.parallel_transport(metric, v, c), b)
            worst_hop = max(worst_hop, frob(direct.value - hop.value))
            worst_norm = max(worst_norm, abs(
                geo.tangent_norm(metric, v)
                - geo.tangent_norm(metric, direct)))
        lines.append(_check(f"{name} two-hop vs direct", worst_hop, 1e-8))
        lines.append(_check(f"{name} norm preservation", worst_norm, 1e-8))
    return lines


def suite_alem() -> list[dict]:
    demo = mx.alem_counterexample()
    y1_expect = np.diag([1.0, 2.0])
    y2_expect = np.array([[1.5, -0.5], [-0.5, 1.5]])
    return [
        _check("rank-dependent output Y1", frob(demo.y1 - y1_expect), 1e-12),
        _check("rank-dependent output Y2", frob(demo.y2 - y2_expect), 1e-12),
        _check("Y1 vs Y2 separation", frob(demo.y1 - demo.y2), 0.5,
               larger_is_fine=True),
        _check("spectral outputs agree across bases",
               frob(demo.spm_output - demo.spm_output_alt), 1e-12),
    ]


SUITES = {
    "gradcheck": suite_gradcheck,
    "roundtrip": suite_roundtrip,
    "frechet": suite_frechet,
    "transport": suite_transport,
    "alem": suite_alem,
}


def run_suite(name: str) -> list[dict]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; "
                       f"choose from {sorted(SUITES)}")
    return SUITES[name]()
