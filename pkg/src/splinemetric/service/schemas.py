"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..bench import BENCH_METRICS


class HealthResponse(BaseModel):
    status: str
    version: str


class TrainSettings(BaseModel):
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 15
    clip_norm: float = 2.0
    val_fraction: float = 0.2
    metric_lr_scale: float = 1.0


class MetricScore(BaseModel):
    train_acc: float
    test_acc: float
    epochs: int


class BenchRequest(BaseModel):
    metrics: list[str] = Field(default=list(BENCH_METRICS))
    seed: int = 42
    count: int = 1000
    dim: int = 4
    max_epochs: int | None = None


class BenchResponse(BaseModel):
    command: str
    config: dict
    seed: int
    metrics: dict[str, MetricScore]
    timings: dict[str, float]


class GridSettings(BaseModel):
    degree: int = 3
    interior_intervals: int = 10
    lo: float = -15.0
    hi: float = 15.0


class Fit1dRequest(BaseModel):
    kind: str
    points: int = 256
    learning_rate: float = 0.1
    steps: int = 2000
    grid: GridSettings = Field(default_factory=GridSettings)
    samples: int = 200


class CurveSample(BaseModel):
    log_lambda: float
    f_value: float
    f_derivative: float


class SplineModelPayload(BaseModel):
    degree: int
    interior_intervals: int
    range: tuple[float, float]
    c0_raw: float
    step_weights: list[float]
    min_step: float


class Fit1dResponse(BaseModel):
    kind: str
    sup_error: float
    min_derivative: float
    derivative_ratio: float | None = None
    model: SplineModelPayload
    samples: list[CurveSample]


class ExportSplineRequest(BaseModel):
    model: SplineModelPayload
    samples: int = 200


class ExportSplineResponse(BaseModel):
    rows: list[CurveSample]


class CheckRequest(BaseModel):
    suite: str


class CheckLine(BaseModel):
    name: str
    value: float
    threshold: float
    passed: bool


class CheckResponse(BaseModel):
    suite: str
    passed: bool
    checks: list[CheckLine]


class ProbeRequest(BaseModel):
    train_text: str
    test_text: str
    metric: str = "sspm"
    theta: float | None = None
    allow_negative_theta: bool = False
    project: bool = False
    seed: int = 42
    config: TrainSettings = Field(default_factory=TrainSettings)


class ProbeResponse(BaseModel):
    command: str
    config: dict
    seed: int
    metrics: dict[str, MetricScore]
    timings: dict[str, float]
    history: list[dict]
    model: dict
