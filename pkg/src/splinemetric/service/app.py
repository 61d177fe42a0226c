"""FastAPI application exposing the benchmark, fits, checks, and probes."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from . import handlers
from . import schemas as sc

app = FastAPI(title="splinemetric",
              description="Learnable spline-pullback metrics on SPD "
                          "matrices: benchmarks, curve fits, verification "
                          "suites, and linear probes.",
              version=__version__)


@app.get("/health", response_model=sc.HealthResponse)
def health():
    return sc.HealthResponse(status="ok", version=__version__)


@app.post("/bench/adversarial", response_model=sc.BenchResponse)
def bench_adversarial(req: sc.BenchRequest):
    try:
        return handlers.do_bench(req)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/fit1d", response_model=sc.Fit1dResponse)
def fit1d(req: sc.Fit1dRequest):
    try:
        return handlers.do_fit1d(req)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/spline/export", response_model=sc.ExportSplineResponse)
def export_spline(req: sc.ExportSplineRequest):
    try:
        return handlers.do_export_spline(req)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/check", response_model=sc.CheckResponse)
def check(req: sc.CheckRequest):
    try:
        return handlers.do_check(req)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc))


@app.post("/probe", response_model=sc.ProbeResponse)
def probe(req: sc.ProbeRequest):
    try:
        return handlers.do_probe(req)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
