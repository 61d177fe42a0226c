import numpy as np
import pytest

from splinemetric import metrics as mx
from splinemetric.geometry import frechet_mean
from splinemetric.oracles import (
    FdConfig,
    brute_frechet,
    finite_diff_grad,
    finite_diff_vec,
    sample_sup_error,
)
from splinemetric.spd import frob, random_spd


def test_fd_grad_polynomial():
    s = np.diag([1.0, 2.0])
    grad = finite_diff_grad(lambda m: float(np.trace(m @ m)), s)
    assert frob(grad - 2 * s) < 1e-6


def test_fd_grad_trace_identity(rng):
    s = 0.5 * (lambda a: a + a.T)(rng.standard_normal((3, 3)))
    grad = finite_diff_grad(np.trace, s)
    assert frob(grad - np.eye(3)) < 1e-9


def test_fd_grad_offdiagonal_convention(rng):
    # d tr(S^2) = <2S, dS> including off-diagonal entries
    s = 0.5 * (lambda a: a + a.T)(rng.standard_normal((4, 4)))
    grad = finite_diff_grad(lambda m: float(np.trace(m @ m)), s)
    assert frob(grad - 2 * s) / frob(2 * s) < 1e-8


def test_fd_grad_second_order_convergence():
    s = np.diag([1.0, 1.5])

    def fn(m):
        return float(np.trace(m @ m @ m))

    exact = 3 * s @ s
    err_h = frob(finite_diff_grad(fn, s, FdConfig(1e-3)) - exact)
    err_h2 = frob(finite_diff_grad(fn, s, FdConfig(5e-4)) - exact)
    assert err_h2 < err_h / 3.0  # roughly quartered when h halves


def test_fd_grad_rejects_nonfinite():
    with pytest.raises(ValueError):
        finite_diff_grad(lambda m: float("nan"), np.eye(2))


def test_fd_config_validation():
    with pytest.raises(ValueError):
        FdConfig(0.0)


def test_fd_vec():
    grad = finite_diff_vec(lambda x: float(np.sum(x ** 2)),
                           np.array([1.0, -2.0]))
    assert grad == pytest.approx([2.0, -4.0], abs=1e-6)


def test_brute_frechet_single_point(random_curve):
    metric = mx.SplineSpectralMetric(random_curve)
    p = random_spd(3, (0.5, 4.0), 1)
    m = brute_frechet(metric, [p], [1.0])
    assert frob(m - p) < 1e-6


def test_brute_frechet_commuting_pair(identity_curve):
    metric = mx.SplineSpectralMetric(identity_curve)
    pts = [np.eye(2), np.e ** 2 * np.eye(2)]
    m = brute_frechet(metric, pts, [0.5, 0.5])
    assert frob(m - np.e * np.eye(2)) < 1e-6


def test_brute_frechet_agrees_with_closed_form(random_curve):
    metric = mx.SplineCholeskyMetric(random_curve)
    pts = [random_spd(3, (0.5, 4.0), 30 + i) for i in range(5)]
    w = np.full(5, 0.2)
    assert frob(brute_frechet(metric, pts, w)
                - frechet_mean(metric, pts, w)) < 1e-6


def test_sample_sup_error():
    assert sample_sup_error(np.log, np.log, (0.1, 10.0)) == 0.0
    sup = sample_sup_error(np.log, lambda x: np.log(x) + 1e-3 * np.sin(x),
                           (0.1, 10.0), 500)
    assert sup == pytest.approx(1e-3, rel=0.05)
    with pytest.raises(ValueError):
        sample_sup_error(np.log, np.log, (-1.0, 1.0))
