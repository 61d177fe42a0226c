"""Learnable spline-pullback Riemannian metrics on SPD matrices.

The package builds a strictly monotone B-spline map in the log domain,
lifts it to SPD matrices along a spectral or a Cholesky route, and
provides the closed-form Riemannian operators, analytical gradients,
fixed baseline metrics, training utilities, and the synthetic
experiments that exercise them.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    MlrHead,
    TangentVector,
    distance,
    exp_map,
    frechet_mean,
    geodesic,
    log_map,
    mlr_logits,
    parallel_transport,
)
from .metrics import (  # noqa: F401
    LogCholeskyMetric,
    LogEuclideanMetric,
    PowerCholeskyMetric,
    SplineCholeskyMetric,
    SplineSpectralMetric,
    airm_distance,
    metric_forward,
    metric_inverse,
)
from .spline import (  # noqa: F401
    KnotGrid,
    MonotoneSplineParams,
    SplineCurve,
    build_grid,
    init_identity,
    init_random,
    make_curve,
    spline_deriv,
    spline_eval,
    spline_invert,
)
from .training import LabeledSpdDataset, TrainConfig, evaluate, train_probe  # noqa: F401
