"""Direct visual odometry by compositional re-estimation of SE(3) increments."""

from .camera import CoordField, Intrinsics, InvalidDepthError, backproject, project, warp_coordinates
from .estimator import (
    EstimationError,
    EstimateResult,
    EstimatorConfig,
    GaussNewtonEstimator,
    StepRecord,
    StepTrace,
    compositional_estimate,
    evaluate_losses,
    gauss_newton_increment,
    run_sequence,
)
from .losses import (
    LossReport,
    LossWeights,
    dssim_multiscale,
    mask_regularization,
    masked_photometric,
    photometric_l1,
    smoothness,
    total_loss,
)
from .metrics import (
    AteResult,
    DepthMetrics,
    Trajectory,
    ate_full,
    ate_snippet,
    depth_metrics,
    median_scale,
)
from .planes import DepthMap, GrayImage, Pyramid, ValidityMask
from .se3 import SE3, Twist, apply, compose, from_twist, identity, inverse, to_twist
from .warp import bilinear_sample, build_pyramid, inverse_warp

__version__ = "0.1.0"

__all__ = [
    "SE3",
    "Twist",
    "identity",
    "from_twist",
    "compose",
    "inverse",
    "apply",
    "to_twist",
    "Intrinsics",
    "CoordField",
    "InvalidDepthError",
    "backproject",
    "project",
    "warp_coordinates",
    "GrayImage",
    "DepthMap",
    "ValidityMask",
    "Pyramid",
    "bilinear_sample",
    "inverse_warp",
    "build_pyramid",
    "LossWeights",
    "LossReport",
    "photometric_l1",
    "masked_photometric",
    "dssim_multiscale",
    "smoothness",
    "mask_regularization",
    "total_loss",
    "EstimatorConfig",
    "EstimationError",
    "EstimateResult",
    "GaussNewtonEstimator",
    "StepRecord",
    "StepTrace",
    "compositional_estimate",
    "gauss_newton_increment",
    "evaluate_losses",
    "run_sequence",
    "Trajectory",
    "AteResult",
    "DepthMetrics",
    "ate_snippet",
    "ate_full",
    "median_scale",
    "depth_metrics",
]
