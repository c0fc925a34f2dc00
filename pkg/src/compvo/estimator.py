"""Compositional pose re-estimation.

The engine estimates the target-to-source transform as a product of r small
increments. Each step asks an increment estimator for a 6-DoF correction
given the target and the current warped source, composes it onto the running
transform (increment applied last), and re-warps the ORIGINAL source with
the composed transform. The default increment estimator is damped
Gauss-Newton photometric alignment, solved coarse-to-fine with analytic
Jacobians (sampler gradient x projection Jacobian x point-action Jacobian).

One estimation is single-threaded and deterministic; distinct windows of a
sequence share only immutable inputs and may run in parallel.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .camera import BEHIND_CAMERA_EPS, Intrinsics
from .losses import (
    LossReport,
    LossWeights,
    dssim_by_scale,
    mask_regularization,
    masked_photometric,
    smoothness,
    total_loss,
)
from .metrics import Trajectory
from .planes import DepthMap, GrayImage, ValidityMask
from .se3 import SE3, Twist, compose, euler_rotation_derivatives, inverse
from .warp import (
    BOUNDS_EPS,
    build_pyramid,
    downsample_depth,
    inverse_warp,
    max_pyramid_levels,
    sample_with_gradient,
)

# A least-squares step needs at least this many constrained pixels.
MIN_CONSTRAINED_PIXELS = 6

# Damping growth/shrink factors and ceiling for the inner solver.
_DAMPING_UP = 4.0
_DAMPING_DOWN = 0.3
_DAMPING_MAX = 1e12


class EstimationError(RuntimeError):
    """Raised when a window cannot be estimated; carries the partial trace."""

    def __init__(self, message: str, trace: "StepTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class EstimatorConfig:
    """Loop and solver parameters.

    ``steps`` is the number of compositional re-estimation steps r;
    ``pyramid_levels`` drives both the coarse-to-fine solver and the
    multi-scale dissimilarity loss. The trust region bounds each per-step
    increment so every step stays in the small-motion regime.
    """

    steps: int = 2
    pyramid_levels: int = 4
    max_inner_iterations: int = 20
    damping_init: float = 1e-3
    convergence_tol: float = 1e-10
    max_step_rotation: float = 0.3
    max_step_translation: float = 0.5
    weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self) -> None:
        if self.steps < 1 or self.pyramid_levels < 1 or self.max_inner_iterations < 1:
            raise ValueError("steps, pyramid_levels and inner iterations must be >= 1")
        for name in ("damping_init", "convergence_tol", "max_step_rotation",
                     "max_step_translation"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class StepRecord:
    """One re-estimation step: increment, running pose, diagnostics.

    ``inner_iterations`` counts the solver iterations the increment
    estimator spent on this step (0 when the estimator does not report it).
    """

    increment: Twist
    accumulated: SE3
    photometric: float
    warped: GrayImage
    inner_iterations: int = 0


@dataclass(frozen=True)
class StepTrace:
    """Per-source step records, in estimation order."""

    records: tuple[tuple[StepRecord, ...], ...]

    def to_json_lines(self) -> str:
        lines = []
        for source_idx, steps in enumerate(self.records):
            for step_idx, rec in enumerate(steps):
                pose = rec.accumulated.matrix()[:3].reshape(-1)
                lines.append(json.dumps({
                    "source": source_idx,
                    "step": step_idx + 1,
                    "increment": list(rec.increment.as_array()),
                    "pose": [float(v) for v in pose],
                    "photometric": rec.photometric,
                    "inner_iterations": rec.inner_iterations,
                }))
        return "\n".join(lines)

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_json_lines() + "\n")


# An increment estimator maps (target, current warped source, depth,
# intrinsics, validity of the warped source) to a small twist; any callable
# with this shape plugs in. The mask marks which warped pixels carry real
# content, so a step never chases the zero fill of the previous warp.
IncrementEstimator = Callable[
    [GrayImage, GrayImage, DepthMap, Intrinsics, ValidityMask], Twist
]


@dataclass(frozen=True)
class IncrementDiagnostics:
    degenerate: bool
    iterations: int
    # Accepted costs per pyramid level, coarsest first; each run decreases
    # strictly after its initial entry.
    cost_history: tuple[tuple[float, ...], ...]


def _residual_system(
    target_px: np.ndarray,
    source_px: np.ndarray,
    source_valid: np.ndarray | None,
    depth: DepthMap,
    k: Intrinsics,
    xi: np.ndarray,
    with_jacobian: bool,
):
    """Masked residuals (and model Jacobian) of the photometric objective.

    ``source_valid`` flags which pixels of ``source_px`` carry real content;
    it is evaluated at the warped sampling locations, so a pixel only counts
    when its whole bilinear support holds content. Returns (valid_mask,
    residual_plane, jacobian_over_valid, mean_sq_cost, valid_count); the
    Jacobian holds d(sampled intensity)/d(twist) rows for the pixels
    selected by the mask, in row-major pixel order.
    """
    rot, d_rx, d_ry, d_rz = euler_rotation_derivatives(xi[0], xi[1], xi[2])
    h, w = depth.shape
    u_grid, v_grid = np.meshgrid(
        np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64)
    )
    d = depth.depth
    px = (u_grid - k.cx) / k.fx * d
    py = (v_grid - k.cy) / k.fy * d

    xs = rot[0, 0] * px + rot[0, 1] * py + rot[0, 2] * d + xi[3]
    ys = rot[1, 0] * px + rot[1, 1] * py + rot[1, 2] * d + xi[4]
    zs = rot[2, 0] * px + rot[2, 1] * py + rot[2, 2] * d + xi[5]

    ok = depth.valid & (zs > BEHIND_CAMERA_EPS)
    safe_z = np.where(ok, zs, 1.0)
    us = k.fx * xs / safe_z + k.cx
    vs = k.fy * ys / safe_z + k.cy
    ok &= (
        (us >= -BOUNDS_EPS) & (us <= w - 1.0 + BOUNDS_EPS)
        & (vs >= -BOUNDS_EPS) & (vs <= h - 1.0 + BOUNDS_EPS)
    )
    us = np.clip(us, 0.0, w - 1.0)
    vs = np.clip(vs, 0.0, h - 1.0)

    if source_valid is not None:
        support, _, _ = sample_with_gradient(
            source_valid.astype(np.float64), us, vs, ok
        )
        ok &= support >= 1.0 - 1e-9

    value, grad_u, grad_v = sample_with_gradient(source_px, us, vs, ok)
    residual = np.where(ok, target_px - value, 0.0)
    count = int(ok.sum())
    if count == 0:
        return ok, residual, None, np.inf, 0

    cost = float((residual[ok] ** 2).mean())
    if not with_jacobian:
        return ok, residual, None, cost, count

    inv_z = 1.0 / safe_z[ok]
    x_s, y_s = xs[ok], ys[ok]
    gu, gv = grad_u[ok], grad_v[ok]
    # Projection Jacobian rows for u and v w.r.t. the transformed point.
    ju = np.stack(
        [k.fx * inv_z, np.zeros_like(inv_z), -k.fx * x_s * inv_z ** 2], axis=1
    )
    jv = np.stack(
        [np.zeros_like(inv_z), k.fy * inv_z, -k.fy * y_s * inv_z ** 2], axis=1
    )
    # Point-action Jacobian columns: angle derivatives, then identity for t.
    p0 = np.stack([px[ok], py[ok], d[ok]], axis=1)
    cols = np.empty((count, 3, 6))
    cols[:, :, 0] = p0 @ d_rx.T
    cols[:, :, 1] = p0 @ d_ry.T
    cols[:, :, 2] = p0 @ d_rz.T
    cols[:, :, 3:] = np.broadcast_to(np.eye(3), (count, 3, 3))
    jac_u = np.einsum("nk,nkj->nj", ju, cols)
    jac_v = np.einsum("nk,nkj->nj", jv, cols)
    jacobian = gu[:, None] * jac_u + gv[:, None] * jac_v
    return ok, residual, jacobian, cost, count


def _content_plane(mask: ValidityMask | None, shape) -> np.ndarray | None:
    """Boolean content flags from a validity mask, if one is given."""
    if mask is None:
        return None
    if mask.shape != shape:
        raise ValueError("mask shape must match the image grid")
    return mask.weights > 0.5


def _downsample_valid(valid: np.ndarray) -> np.ndarray:
    """Halve a boolean plane; a coarse pixel is set only if all children are."""
    h2, w2 = valid.shape[0] // 2, valid.shape[1] // 2
    return valid[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).all(axis=(1, 3))


def photometric_jacobian(
    target: GrayImage,
    warped: GrayImage,
    depth: DepthMap,
    intrinsics: Intrinsics,
    twist: Twist,
    mask: ValidityMask | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residuals, analytic model Jacobian, and the valid-pixel mask at a twist.

    Exposed for derivative checking: the Jacobian rows are exact derivatives
    of the warped-and-sampled intensity w.r.t. the six twist components.
    """
    ok, residual, jacobian, _, count = _residual_system(
        target.pixels, warped.pixels, _content_plane(mask, warped.shape),
        depth, intrinsics, twist.as_array(), True,
    )
    if count == 0:
        raise EstimationError("no valid pixels for the photometric system")
    return residual[ok], jacobian, ok


def photometric_cost(
    target: GrayImage,
    warped: GrayImage,
    depth: DepthMap,
    intrinsics: Intrinsics,
    twist: Twist,
    mask: ValidityMask | None = None,
) -> float:
    """Mean squared masked residual of warping ``warped`` by ``twist``."""
    _, _, _, cost, _ = _residual_system(
        target.pixels, warped.pixels, _content_plane(mask, warped.shape),
        depth, intrinsics, twist.as_array(), False,
    )
    return cost


def _solve_level(
    target_px: np.ndarray,
    source_px: np.ndarray,
    source_valid: np.ndarray | None,
    depth: DepthMap,
    k: Intrinsics,
    xi: np.ndarray,
    cfg: EstimatorConfig,
) -> tuple[np.ndarray, bool, list[float], int]:
    """Damped Gauss-Newton at one pyramid level.

    Steps are accepted only on a strict decrease of the mean squared
    residual; rejected proposals raise the damping. Returns the refined
    twist, a degeneracy flag, the accepted-cost history, and the iteration
    count.
    """
    ok, residual, jacobian, cost, count = _residual_system(
        target_px, source_px, source_valid, depth, k, xi, True
    )
    if count < MIN_CONSTRAINED_PIXELS:
        return xi, True, [], 0
    if int(np.count_nonzero(np.abs(jacobian).sum(axis=1))) < MIN_CONSTRAINED_PIXELS:
        return xi, True, [cost], 0

    damping = cfg.damping_init
    history = [cost]
    iterations = 0
    accepted_any = False
    while iterations < cfg.max_inner_iterations:
        iterations += 1
        res = residual[ok]
        hess = jacobian.T @ jacobian
        grad = jacobian.T @ res
        diag = np.diag(hess).copy()
        if not np.all(np.isfinite(hess)) or np.max(diag) <= 0.0:
            # Degenerate only if the level never moved at all.
            return xi, not accepted_any, history, iterations
        # Scale-invariant Marquardt damping; floor keeps zero-curvature
        # directions solvable.
        diag = np.maximum(diag, 1e-12 * np.max(diag))

        accepted = False
        while damping <= _DAMPING_MAX:
            try:
                step = np.linalg.solve(hess + damping * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                return xi, not accepted_any, history, iterations
            candidate = xi + step
            ok_c, res_c, jac_c, cost_c, count_c = _residual_system(
                target_px, source_px, source_valid, depth, k, candidate, True
            )
            if count_c >= MIN_CONSTRAINED_PIXELS and cost_c < cost:
                xi = candidate
                ok, residual, jacobian, cost = ok_c, res_c, jac_c, cost_c
                history.append(cost)
                damping = max(damping * _DAMPING_DOWN, 1e-12)
                accepted = True
                accepted_any = True
                break
            damping *= _DAMPING_UP
        if not accepted:
            break
        if float(np.linalg.norm(step)) < cfg.convergence_tol:
            break
    return xi, False, history, iterations


def _clamp_step(xi: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
    """Scale the twist into the per-step trust region."""
    out = xi.copy()
    rot_norm = float(np.linalg.norm(out[:3]))
    if rot_norm > cfg.max_step_rotation:
        out[:3] *= cfg.max_step_rotation / rot_norm
    trans_norm = float(np.linalg.norm(out[3:]))
    if trans_norm > cfg.max_step_translation:
        out[3:] *= cfg.max_step_translation / trans_norm
    return out


def gauss_newton_align(
    target: GrayImage,
    warped: GrayImage,
    depth: DepthMap,
    intrinsics: Intrinsics,
    cfg: EstimatorConfig,
    mask: ValidityMask | None = None,
) -> tuple[Twist, IncrementDiagnostics]:
    """Coarse-to-fine damped Gauss-Newton alignment, initialized at zero.

    ``mask`` flags which pixels of ``warped`` hold real content; the solver
    only counts residuals whose whole bilinear support is real content, and
    downsamples the mask conservatively (a coarse pixel survives only if all
    children do) so zero fill never leaks into coarse levels either.
    Rank-deficient or gradient-free systems do not raise; they yield a zero
    twist with the degeneracy flag set so the outer loop can continue.
    """
    if target.shape != warped.shape or target.shape != depth.shape:
        raise ValueError("target, warped and depth grids must agree")
    if (intrinsics.height, intrinsics.width) != target.shape:
        raise ValueError("intrinsics grid must match the images")

    content = _content_plane(mask, warped.shape)
    n_levels = max_pyramid_levels(target.height, target.width, cfg.pyramid_levels)
    target_pyr = build_pyramid(target, n_levels)
    warped_pyr = build_pyramid(warped, n_levels)
    depth_levels = [depth]
    content_levels: list[np.ndarray | None] = [content]
    for _ in range(n_levels - 1):
        depth_levels.append(downsample_depth(depth_levels[-1]))
        prev = content_levels[-1]
        content_levels.append(None if prev is None else _downsample_valid(prev))

    xi = np.zeros(6)
    histories: list[tuple[float, ...]] = []
    total_iterations = 0
    any_progress = False
    for level in range(n_levels - 1, -1, -1):
        xi, degenerate, history, iters = _solve_level(
            target_pyr[level].pixels,
            warped_pyr[level].pixels,
            content_levels[level],
            depth_levels[level],
            intrinsics.for_level(level),
            xi,
            cfg,
        )
        histories.append(tuple(history))
        total_iterations += iters
        if not degenerate:
            any_progress = True

    if not any_progress:
        return Twist(), IncrementDiagnostics(True, total_iterations, tuple(histories))
    xi = _clamp_step(xi, cfg)
    return (
        Twist.from_array(xi),
        IncrementDiagnostics(False, total_iterations, tuple(histories)),
    )


def gauss_newton_increment(
    target: GrayImage,
    warped: GrayImage,
    depth: DepthMap,
    intrinsics: Intrinsics,
    cfg: EstimatorConfig,
    mask: ValidityMask | None = None,
) -> Twist:
    """Twist increment aligning ``warped`` toward ``target`` (default estimator)."""
    twist, _ = gauss_newton_align(target, warped, depth, intrinsics, cfg, mask)
    return twist


class GaussNewtonEstimator:
    """Default increment estimator; callable per the estimator interface.

    Remembers the diagnostics of the most recent call so callers can inspect
    degeneracy and inner-iteration behaviour.
    """

    def __init__(self, cfg: EstimatorConfig | None = None):
        self.cfg = cfg if cfg is not None else EstimatorConfig()
        self.last_diagnostics: IncrementDiagnostics | None = None

    def __call__(
        self,
        target: GrayImage,
        warped: GrayImage,
        depth: DepthMap,
        intrinsics: Intrinsics,
        mask: ValidityMask | None = None,
    ) -> Twist:
        twist, diag = gauss_newton_align(
            target, warped, depth, intrinsics, self.cfg, mask
        )
        self.last_diagnostics = diag
        return twist


class EstimateResult(NamedTuple):
    poses: tuple[SE3, ...]
    masks: tuple[ValidityMask, ...]
    trace: StepTrace


def compositional_estimate(
    target: GrayImage,
    sources: Sequence[GrayImage],
    depth: DepthMap,
    intrinsics: Intrinsics,
    cfg: EstimatorConfig | None = None,
    inc: IncrementEstimator | None = None,
) -> EstimateResult:
    """Run r re-estimation steps per source.

    Every step warps the ORIGINAL source with the composed transform, so the
    final pose fully describes the final warped image. The returned masks
    are the geometric validity masks of the final warp, which stand in for a
    learned out-of-view mask.
    """
    cfg = cfg if cfg is not None else EstimatorConfig()
    if not sources:
        raise ValueError("need at least one source image")
    for src in sources:
        if src.shape != target.shape:
            raise ValueError("source and target shapes must agree")
    if depth.shape != target.shape:
        raise ValueError("depth and target shapes must agree")
    if (intrinsics.height, intrinsics.width) != target.shape:
        raise ValueError("intrinsics grid must match the images")
    if not depth.valid.any():
        raise EstimationError("depth map has no valid pixels")
    estimator: IncrementEstimator = (
        inc if inc is not None else GaussNewtonEstimator(cfg)
    )

    poses: list[SE3] = []
    masks: list[ValidityMask] = []
    all_records: list[tuple[StepRecord, ...]] = []
    for source in sources:
        accumulated = SE3.identity()
        warped, mask = inverse_warp(source, depth, accumulated, intrinsics)
        records: list[StepRecord] = []
        for _ in range(cfg.steps):
            increment = estimator(target, warped, depth, intrinsics, mask)
            if not np.all(np.isfinite(increment.as_array())):
                raise EstimationError(
                    "increment estimator returned a non-finite twist",
                    trace=StepTrace(tuple(all_records) + (tuple(records),)),
                )
            accumulated = compose(SE3.from_twist(increment), accumulated)
            warped, mask = inverse_warp(source, depth, accumulated, intrinsics)
            step_phot = masked_photometric(target, [warped], mask)
            diag = getattr(estimator, "last_diagnostics", None)
            records.append(StepRecord(
                increment, accumulated, step_phot, warped,
                inner_iterations=diag.iterations if diag is not None else 0,
            ))
        poses.append(accumulated)
        masks.append(mask)
        all_records.append(tuple(records))
    return EstimateResult(tuple(poses), tuple(masks), StepTrace(tuple(all_records)))


def evaluate_losses(
    target: GrayImage,
    warped: Sequence[GrayImage],
    masks: Sequence[ValidityMask],
    depth: DepthMap,
    cfg: EstimatorConfig | None = None,
    include_mask_weight: bool = False,
) -> LossReport:
    """Full objective on final-step warped images.

    The photometric term averages the per-source masked losses; the
    dissimilarity term sums over pyramid scales and sources; smoothness is
    evaluated on inverse depth against the target as the edge guide. The
    mask regularizer is always reported, but with geometric masks it is only
    weighted into the total when ``include_mask_weight`` is set.
    """
    cfg = cfg if cfg is not None else EstimatorConfig()
    if len(warped) != len(masks) or not warped:
        raise ValueError("need matching, non-empty warped images and masks")
    phot = float(np.mean([
        masked_photometric(target, [img], mask) for img, mask in zip(warped, masks)
    ]))
    n_levels = max_pyramid_levels(target.height, target.width, cfg.pyramid_levels)
    target_pyr = build_pyramid(target, n_levels)
    warped_pyrs = [build_pyramid(img, n_levels) for img in warped]
    per_scale = dssim_by_scale(target_pyr, warped_pyrs)
    dssim_value = float(sum(per_scale))
    disparity = np.where(depth.valid, 1.0 / np.where(depth.valid, depth.depth, 1.0), 0.0)
    smooth_value = smoothness(disparity, target)
    mask_reg = float(sum(mask_regularization(mask) for mask in masks))
    weights = cfg.weights if include_mask_weight else cfg.weights.without_mask_term()
    return total_loss(phot, dssim_value, smooth_value, mask_reg, weights, per_scale)


@dataclass(frozen=True)
class WindowEstimate:
    """Estimation output for one sliding window of a sequence."""

    center: int
    source_frames: tuple[int, ...]
    poses: tuple[SE3, ...]
    masks: tuple[ValidityMask, ...]
    trace: StepTrace | None
    report: LossReport | None
    failed: bool

    def pose_to_source(self, frame: int) -> SE3:
        """Transform from the window's target frame to ``frame`` coordinates."""
        if frame == self.center:
            return SE3.identity()
        return self.poses[self.source_frames.index(frame)]


def estimate_windows(
    frames: Sequence[GrayImage],
    depths: Sequence[DepthMap],
    intrinsics: Intrinsics,
    cfg: EstimatorConfig | None = None,
    snippet_len: int = 3,
    inc: IncrementEstimator | None = None,
    jobs: int = 1,
    with_losses: bool = True,
) -> list[WindowEstimate]:
    """Estimate every sliding window; windows are independent of each other.

    With ``jobs`` > 1 windows run on a thread pool; results keep window
    order. The default increment estimator is constructed per window, so
    parallel runs stay deterministic; a custom ``inc`` must be thread-safe.
    """
    cfg = cfg if cfg is not None else EstimatorConfig()
    if snippet_len < 3 or snippet_len % 2 == 0:
        raise ValueError("snippet length must be odd and >= 3")
    n = len(frames)
    if n < snippet_len:
        raise ValueError(f"{n} frames cannot form snippets of {snippet_len}")
    if len(depths) != n:
        raise ValueError("need one depth map per frame")
    half = snippet_len // 2

    def run_window(center: int) -> WindowEstimate:
        source_frames = tuple(
            center + off for off in range(-half, half + 1) if off != 0
        )
        sources = [frames[i] for i in source_frames]
        try:
            poses, masks, trace = compositional_estimate(
                frames[center], sources, depths[center], intrinsics, cfg, inc
            )
        except EstimationError as err:
            return WindowEstimate(
                center, source_frames, (), (), err.trace, None, True
            )
        report = None
        if with_losses:
            final_warped = [steps[-1].warped for steps in trace.records]
            report = evaluate_losses(
                frames[center], final_warped, masks, depths[center], cfg
            )
        return WindowEstimate(
            center, source_frames, poses, masks, trace, report, False
        )

    centers = range(half, n - half)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_window, centers))
    return [run_window(c) for c in centers]


def chain_windows(windows: Sequence[WindowEstimate], n_frames: int) -> Trajectory:
    """Chain window estimates into a camera-to-world trajectory.

    For each consecutive pair (k, k+1) the window whose center is nearest to
    k+1 supplies the relative motion; a failed window contributes identity
    and flags the destination frame.
    """
    if not windows:
        raise ValueError("no windows to chain")
    by_center = {w.center: w for w in windows}
    centers = sorted(by_center)
    lo, hi = centers[0], centers[-1]
    poses = [SE3.identity()]
    failed_frames: list[int] = []
    for k in range(n_frames - 1):
        center = min(max(k + 1, lo), hi)
        window = by_center[center]
        if window.failed:
            rel = SE3.identity()
            failed_frames.append(k + 1)
        else:
            # Transform from frame k+1 coordinates to frame k coordinates.
            rel = compose(
                window.pose_to_source(k), inverse(window.pose_to_source(k + 1))
            )
        poses.append(compose(poses[-1], rel))
    return Trajectory(tuple(poses), failed=tuple(failed_frames))


def run_sequence(
    frames: Sequence[GrayImage],
    depths: Sequence[DepthMap],
    intrinsics: Intrinsics,
    cfg: EstimatorConfig | None = None,
    snippet_len: int = 3,
    inc: IncrementEstimator | None = None,
    jobs: int = 1,
) -> Trajectory:
    """Estimate a full trajectory by sliding a snippet window over a video.

    The middle frame of each window is the target; its depth map drives the
    warping. The chained trajectory is anchored at identity for frame 0, and
    windows that fail to estimate contribute identity relative motion with
    the destination frame flagged.
    """
    windows = estimate_windows(
        frames, depths, intrinsics, cfg, snippet_len, inc, jobs, with_losses=False
    )
    return chain_windows(windows, len(frames))
