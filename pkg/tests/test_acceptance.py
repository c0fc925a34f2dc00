"""Acceptance suite: one test per release criterion, stated tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
per-criterion PASS lines). Criterion 10 needs real odometry ground-truth
files and is skipped unless COMPVO_KITTI_GT_DIR is set.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from compvo.camera import Intrinsics, backproject, project, warp_coordinates
from compvo.cli import main
from compvo.estimator import (
    EstimatorConfig,
    compositional_estimate,
    photometric_jacobian,
    _residual_system,
)
from compvo.kitti_io import load_poses
from compvo.losses import (
    LossWeights,
    dssim_multiscale,
    mask_regularization,
    masked_photometric,
    photometric_l1,
    smoothness,
    total_loss,
)
from compvo.metrics import Trajectory, ate_full, ate_snippet, depth_metrics, median_scale
from compvo.planes import DepthMap, GrayImage, ValidityMask
from compvo.se3 import SE3, Twist, apply, compose, from_twist, identity, inverse, to_twist
from compvo.synth import make_scene, render
from compvo.warp import bilinear_sample, build_pyramid, inverse_warp

from test_losses import scalar_photometric, scalar_smoothness, scalar_ssim_mean
from test_metrics import oracle_snippet_ate, straight_line
from test_warp import scalar_bilinear


def report(number: int, text: str) -> None:
    print(f"ACCEPTANCE {number:02d}: PASS - {text}")


def test_criterion_01_se3_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    angles = rng.uniform(-0.5, 0.5, size=(1000, 3))
    trans = rng.uniform(-2.0, 2.0, size=(1000, 3))
    twists = [Twist(*a, *t) for a, t in zip(angles, trans)]
    poses = [from_twist(tw) for tw in twists]
    for tw, t in zip(twists, poses):
        # Composition order: the increment multiplies from the left.
        want = t.matrix() @ poses[0].matrix()
        got = compose(t, poses[0]).matrix()
        assert np.max(np.abs(got - want)) <= 1e-10
        # Identity and inverse laws.
        assert np.max(np.abs(compose(identity(), t).matrix() - t.matrix())) <= 1e-10
        gap = compose(inverse(t), t).matrix() - np.eye(4)
        assert np.max(np.abs(gap)) <= 1e-10
        # Twist round trip.
        back = to_twist(t)
        assert np.max(np.abs(back.as_array() - tw.as_array())) <= 1e-10
    for a, b, c in zip(poses[0::3], poses[1::3], poses[2::3]):
        gap = compose(a, compose(b, c)).matrix() - compose(compose(a, b), c).matrix()
        assert np.max(np.abs(gap)) <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(1, f"SE(3) group laws on 1000 twists in {elapsed:.3f}s")


def test_criterion_02_warp_identity():
    scene = make_scene(seed=1002)
    src, depth = render(scene, SE3.identity())
    assert src.shape == (64, 192)
    start = time.perf_counter()
    out, mask = inverse_warp(src, depth, SE3.identity(), scene.intrinsics)
    elapsed = time.perf_counter() - start
    valid = mask.weights > 0
    assert np.max(np.abs(out.pixels[valid] - src.pixels[valid])) <= 1e-9
    assert elapsed < 0.1
    report(2, f"identity warp reproduces the source in {elapsed*1e3:.1f}ms")


def test_criterion_03_warp_chain_oracle_equivalence():
    rng = np.random.default_rng(1003)
    for _ in range(5):
        k = Intrinsics(
            rng.uniform(40, 200), rng.uniform(40, 200),
            rng.uniform(3, 12), rng.uniform(3, 12), 16, 16,
        )
        depth = DepthMap(rng.uniform(2.0, 9.0, size=(16, 16)))
        tw = Twist(*rng.uniform(-0.04, 0.04, 3), *rng.uniform(-0.15, 0.15, 3))
        t = from_twist(tw)
        img = GrayImage(rng.uniform(0, 1, size=(16, 16)))
        field = warp_coordinates(k, t, depth)
        sampled, mask = bilinear_sample(img, field)
        for v in range(16):
            for u in range(16):
                moved = apply(t, backproject(k, (u, v), float(depth.depth[v, u])))
                pixel = project(k, moved)
                if not np.all(np.isfinite(pixel)):
                    assert not field.finite[v, u]
                    continue
                assert abs(field.u[v, u] - pixel[0]) <= 1e-10
                assert abs(field.v[v, u] - pixel[1]) <= 1e-10
                want = scalar_bilinear(img.pixels, pixel[0], pixel[1])
                if want is None:
                    assert mask.weights[v, u] == 0.0
                else:
                    assert abs(sampled.pixels[v, u] - want) <= 1e-10
    report(3, "dense warp+sample matches the scalar chain on 5 random 16x16 grids")


def test_criterion_04_loss_oracles():
    rng = np.random.default_rng(1004)
    target = GrayImage(rng.uniform(0, 1, (8, 8)))
    warped = [GrayImage(rng.uniform(0, 1, (8, 8))) for _ in range(2)]
    mask = ValidityMask(rng.uniform(0, 1, (8, 8)))

    got = photometric_l1(target, warped)
    want = scalar_photometric(target.pixels, [w.pixels for w in warped])
    assert abs(got - want) <= 1e-10

    got = masked_photometric(target, warped, mask)
    want = scalar_photometric(target.pixels, [w.pixels for w in warped], mask.weights)
    assert abs(got - want) <= 1e-10

    got = dssim_multiscale(build_pyramid(target, 1), [build_pyramid(warped[0], 1)])
    want = (1.0 - scalar_ssim_mean(warped[0].pixels, target.pixels)) / 2.0
    assert abs(got - want) <= 1e-10

    disp = rng.uniform(0, 2, (8, 8))
    assert abs(smoothness(disp, target) - scalar_smoothness(disp, target.pixels)) <= 1e-10

    want = float(np.mean([-math.log(max(v, 1e-7)) for v in mask.weights.ravel()]))
    assert abs(mask_regularization(mask) - want) <= 1e-10

    components = (0.37, 1.25, 0.6, 2.0)
    weights = LossWeights(0.15, 0.85, 0.1, 0.1)
    report_obj = total_loss(*components, weights)
    exact = 0.15 * components[0] + 0.85 * components[1] + 0.1 * components[2] + 0.1 * components[3]
    assert report_obj.total == exact
    report(4, "all five losses match scalar oracles; weighted sum identity exact")


def test_criterion_05_jacobian_check():
    h_fd = 1e-5
    rng = np.random.default_rng(1005)
    worst = 0.0
    for trial in range(20):
        scene = make_scene(seed=2000 + trial)
        k = scene.intrinsics
        target, depth = render(scene, SE3.identity())
        b = rng.uniform(0.5, 2.0) * scene.d0 / k.fx
        source, _ = render(scene, SE3(np.eye(3), np.array([b, 0.0, 0.0])))
        xi0 = np.concatenate([
            rng.uniform(-1e-3, 1e-3, 3), rng.uniform(-0.01, 0.01, 3)
        ])
        _, jac, ok = photometric_jacobian(
            target, source, depth, k, Twist.from_array(xi0)
        )
        jac_fd = np.zeros_like(jac)
        for comp in range(6):
            delta = np.zeros(6)
            delta[comp] = h_fd
            _, rp, _, _, _ = _residual_system(
                target.pixels, source.pixels, None, depth, k, xi0 + delta, False
            )
            _, rm, _, _, _ = _residual_system(
                target.pixels, source.pixels, None, depth, k, xi0 - delta, False
            )
            jac_fd[:, comp] = -(rp[ok] - rm[ok]) / (2.0 * h_fd)
        # Exclude pixels whose +-h probes straddle a bilinear cell edge,
        # where the sampled surface is not differentiable.
        from test_estimator import _sample_coords

        us, vs = _sample_coords(depth, k, xi0)
        fu, fv = us - np.floor(us), vs - np.floor(vs)
        interior = ((fu > 0.01) & (fu < 0.99) & (fv > 0.01) & (fv < 0.99))[ok]
        scale = np.abs(jac).max(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        rel = (np.abs(jac - jac_fd) / scale[None, :])[interior]
        worst = max(worst, float(rel.max()))
        assert rel.max() <= 1e-3
    report(5, f"analytic Jacobians match central differences (worst rel {worst:.2e})")


def test_criterion_06_synthetic_pose_recovery():
    scene = make_scene(seed=1006)
    k = scene.intrinsics
    b = 2.0 * scene.d0 / k.fx
    target, depth = render(scene, SE3.identity())
    assert target.shape == (64, 192)
    source, _ = render(scene, SE3(np.eye(3), np.array([b, 0.0, 0.0])))
    start = time.perf_counter()
    poses, _, _ = compositional_estimate(
        target, [source], depth, k, EstimatorConfig(steps=2)
    )
    elapsed = time.perf_counter() - start
    got = poses[0].translation
    want = np.array([-b, 0.0, 0.0])
    rel = np.linalg.norm(got - want) / np.linalg.norm(want)
    tw = to_twist(poses[0])
    rot = np.linalg.norm([tw.rx, tw.ry, tw.rz])
    assert rel <= 0.02
    assert rot <= 1e-3
    assert elapsed < 5.0
    report(6, f"2px translation recovered to {rel:.2e} rel, rot {rot:.2e} rad, {elapsed:.2f}s")


def _final_photometric(scene, shift_px, steps, cap):
    k = scene.intrinsics
    b = shift_px * scene.d0 / k.fx
    target, depth = render(scene, SE3.identity())
    source, _ = render(scene, SE3(np.eye(3), np.array([b, 0.0, 0.0])))
    cfg = EstimatorConfig(steps=steps, max_step_translation=cap)
    _, _, trace = compositional_estimate(target, [source], depth, k, cfg)
    return trace.records[0][-1].photometric


def test_criterion_07_compositional_advantage():
    # Per-step motion is capped below the true displacement, mirroring the
    # bounded per-step estimates the loop is designed around.
    wins_2v1 = 0
    for seed in range(3000, 3010):
        scene = make_scene(seed=seed)
        one = _final_photometric(scene, 8.0, 1, cap=0.1)
        two = _final_photometric(scene, 8.0, 2, cap=0.1)
        wins_2v1 += two <= one
    assert wins_2v1 >= 9

    wins_3v2 = 0
    for seed in range(4000, 4010):
        scene = make_scene(seed=seed)
        two = _final_photometric(scene, 16.0, 2, cap=0.13)
        three = _final_photometric(scene, 16.0, 3, cap=0.13)
        wins_3v2 += three <= two
    assert wins_3v2 >= 9
    report(7, f"r=2<=r=1 on {wins_2v1}/10 scenes; r=3<=r=2 on {wins_3v2}/10 scenes")


def test_criterion_08_metrics_oracles():
    # Snippet ATE: 3-frame hand fixture plus the spelled-out oracle loop.
    pred = straight_line([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
    gt = straight_line([(0, 0, 0), (1, 0.1, 0), (2, 0, 0)])
    got = ate_snippet(pred, gt, 3)
    assert abs(got.mean - math.sqrt(0.01 / 3.0)) <= 1e-10
    oracle = oracle_snippet_ate(pred, gt, 3)
    assert abs(got.mean - float(np.mean(oracle))) <= 1e-10

    # Exact zeros on identical trajectories.
    square = straight_line([(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)])
    assert ate_snippet(square, square, 3).mean == 0.0
    assert ate_full(square, square) == 0.0

    # Similarity-transformed copies align back to (near) zero.
    rng = np.random.default_rng(1008)
    rot = from_twist(Twist(0.2, -0.1, 0.3)).rotation
    scale, offset = 1.7, np.array([5.0, -2.0, 1.0])
    base = straight_line(rng.uniform(-3, 3, size=(6, 3)))
    moved = Trajectory(tuple(
        SE3(rot @ p.rotation, scale * rot @ p.translation + offset)
        for p in base.poses
    ))
    assert ate_full(moved, base) <= 1e-9
    assert ate_snippet(moved, base, 3).mean <= 1e-9

    # Depth metrics on hand fixtures (medians first).
    p2 = DepthMap(np.array([[2.0, 5.0]]))
    g2 = DepthMap(np.array([[2.0, 4.0]]))
    assert abs(median_scale(p2, g2) - 6.0 / 7.0) <= 1e-10
    m = depth_metrics(p2, g2)
    assert abs(m.abs_rel - 3.0 / 28.0) <= 1e-10
    assert abs(m.sq_rel - 3.0 / 98.0) <= 1e-10
    assert abs(m.rmse - 2.0 / 7.0) <= 1e-10
    want_log = math.sqrt((math.log(6.0 / 7.0) ** 2 + math.log(15.0 / 14.0) ** 2) / 2)
    assert abs(m.rmse_log - want_log) <= 1e-10

    ratio = DepthMap(np.array([[1.0, 1.0, 1.0 / 1.3]]))
    ones = DepthMap(np.array([[1.0, 1.0, 1.0]]))
    m = depth_metrics(ratio, ones)
    assert abs(m.delta1 - 2.0 / 3.0) <= 1e-10
    assert m.delta2 == 1.0
    report(8, "ATE and depth metrics match hand oracles; similarity absorbed")


def test_criterion_09_end_to_end(tmp_path):
    start = time.perf_counter()
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert main([
        "synth-gen", "--out-dir", str(data), "--frames", "10", "--seed", "9",
    ]) == 0
    assert main(["run", str(data), "--out-dir", str(run)]) == 0
    pred = load_poses(run / "trajectory.txt")
    gt = load_poses(data / "poses" / "00.txt")
    result = ate_snippet(pred, gt, 3)
    elapsed = time.perf_counter() - start
    scene = json.loads((data / "scene.json").read_text())
    per_frame = 2.0 * scene["plane_depth"] / scene["fx"]
    assert result.mean <= 0.01 * per_frame
    assert elapsed < 60.0
    report(9, f"10-frame pipeline in {elapsed:.1f}s; snippet ATE {result.mean:.2e} "
              f"vs 1% bound {0.01 * per_frame:.2e}")


KITTI_GT_DIR = os.environ.get("COMPVO_KITTI_GT_DIR")
SFMLEARNER_TRAJ = os.environ.get("COMPVO_SFMLEARNER_TRAJ")


@pytest.mark.skipif(
    KITTI_GT_DIR is None,
    reason="set COMPVO_KITTI_GT_DIR to a directory with 09.txt/10.txt to enable",
)
def test_criterion_10_real_ground_truth():
    for seq in ("09", "10"):
        path = os.path.join(KITTI_GT_DIR, f"{seq}.txt")
        gt = load_poses(path)
        assert ate_full(gt, gt) == 0.0
        assert ate_snippet(gt, gt, 3).mean == 0.0
    if SFMLEARNER_TRAJ is not None:
        pred = load_poses(SFMLEARNER_TRAJ)
        gt = load_poses(os.path.join(KITTI_GT_DIR, "09.txt"))
        value = ate_full(pred, gt)
        assert abs(value - 31.21) <= 0.05 * 31.21
    report(10, "ground-truth self-evaluation is exactly zero")
