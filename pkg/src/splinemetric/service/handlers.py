"""Service-layer entry points behind the HTTP endpoints.

The CLI calls these same functions in process, so both surfaces share
one implementation and one set of request/response shapes.
"""

from __future__ import annotations

import numpy as np

from .. import checks
from ..bench import make_metric, run_adversarial_bench, run_probe
from ..io import loads_spd_dataset, probe_model_to_dict
from ..spline import (
    MonotoneSplineParams,
    build_grid,
    make_curve,
    spline_deriv,
    spline_eval,
)
from ..synthetic import TARGET_KINDS, fit_spline_1d, gen_target_1d
from ..training import TrainConfig
from . import schemas as sc


def _train_config(settings: sc.TrainSettings, seed: int,
                  max_epochs: int | None = None) -> TrainConfig:
    return TrainConfig(
        learning_rate=settings.learning_rate,
        weight_decay=settings.weight_decay,
        batch_size=settings.batch_size,
        max_epochs=max_epochs or settings.max_epochs,
        patience=settings.patience,
        clip_norm=settings.clip_norm,
        seed=seed,
        val_fraction=settings.val_fraction,
        metric_lr_scale=settings.metric_lr_scale,
    )


def do_bench(req: sc.BenchRequest) -> sc.BenchResponse:
    config = None
    if req.max_epochs is not None:
        config = TrainConfig(seed=req.seed, max_epochs=req.max_epochs,
                             metric_lr_scale=10.0)
    raw = run_adversarial_bench(metric_tokens=tuple(req.metrics),
                                seed=req.seed, count=req.count, dim=req.dim,
                                config=config)
    return sc.BenchResponse(**raw)


def _curve_samples(curve, samples: int, pad: float) -> list[sc.CurveSample]:
    lo = curve.grid.lo - pad
    hi = curve.grid.hi + pad
    log_lam = np.linspace(lo, hi, samples)
    x = np.exp(log_lam)
    values = spline_eval(curve, x)
    derivs = spline_deriv(curve, x)
    return [sc.CurveSample(log_lambda=float(a), f_value=float(b),
                           f_derivative=float(c))
            for a, b, c in zip(log_lam, values, derivs)]


def _spline_payload(curve) -> sc.SplineModelPayload:
    grid, params = curve.grid, curve.params
    return sc.SplineModelPayload(
        degree=grid.degree, interior_intervals=grid.interior_intervals,
        range=(grid.lo, grid.hi), c0_raw=params.c0_raw,
        step_weights=params.step_weights.tolist(),
        min_step=params.min_step)


def do_fit1d(req: sc.Fit1dRequest) -> sc.Fit1dResponse:
    if req.kind not in TARGET_KINDS:
        raise ValueError(f"unknown target kind {req.kind!r}; "
                         f"choose from {TARGET_KINDS}")
    target = gen_target_1d(req.kind, req.points)
    grid = build_grid(req.grid.degree, req.grid.interior_intervals,
                      (req.grid.lo, req.grid.hi))
    config = TrainConfig(learning_rate=req.learning_rate,
                         max_epochs=req.steps)
    curve, sup_error, min_derivative = fit_spline_1d(target, grid, config)
    ratio = None
    if target.cap_logrange is not None:
        y = np.log(target.xs)
        sl, sh = target.signal_logrange
        cl, ch = target.cap_logrange
        sig = (y >= sl) & (y <= sh)
        cap = (y >= cl) & (y <= ch)
        # slope in the log domain: f'(x) * x
        d_sig = float(np.mean(spline_deriv(curve, target.xs[sig])
                              * target.xs[sig]))
        d_cap = float(np.mean(spline_deriv(curve, target.xs[cap])
                              * target.xs[cap]))
        ratio = d_cap / d_sig
    return sc.Fit1dResponse(kind=req.kind, sup_error=sup_error,
                            min_derivative=min_derivative,
                            derivative_ratio=ratio,
                            model=_spline_payload(curve),
                            samples=_curve_samples(curve, req.samples,
                                                   pad=np.log(10.0)))


def do_export_spline(req: sc.ExportSplineRequest) -> sc.ExportSplineResponse:
    m = req.model
    grid = build_grid(m.degree, m.interior_intervals, m.range)
    params = MonotoneSplineParams(m.c0_raw,
                                  np.asarray(m.step_weights, dtype=float),
                                  m.min_step)
    curve = make_curve(grid, params)
    return sc.ExportSplineResponse(
        rows=_curve_samples(curve, req.samples, pad=np.log(10.0)))


def do_check(req: sc.CheckRequest) -> sc.CheckResponse:
    lines = checks.run_suite(req.suite)
    return sc.CheckResponse(suite=req.suite,
                            passed=all(l["passed"] for l in lines),
                            checks=[sc.CheckLine(**l) for l in lines])


def do_probe(req: sc.ProbeRequest) -> sc.ProbeResponse:
    train_ds = loads_spd_dataset(req.train_text, project=req.project)
    test_ds = loads_spd_dataset(req.test_text, project=req.project)
    metric = make_metric(req.metric, theta=req.theta,
                         allow_nonpositive_theta=req.allow_negative_theta)
    config = _train_config(req.config, req.seed)
    model, results, history = run_probe(train_ds, test_ds, metric, config)
    return sc.ProbeResponse(**results, history=history,
                            model=probe_model_to_dict(model))
