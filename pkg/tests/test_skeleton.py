import math

import numpy as np
import pytest

from hoiscene.geometry import Pose, Rot3
from hoiscene.sdf import Capsule, bake
from hoiscene.skeleton import (
    BodyPose,
    Bone,
    NoConvergence,
    Skeleton,
    bone_transforms,
    lbs_forward,
    lbs_inverse,
    lbs_inverse_batch,
    load_body_poses,
    load_skeleton,
    point_jacobian,
    save_body_poses,
    save_skeleton,
    skin_weights,
)


def three_link_arm(sigma_skin=0.05, with_sdf=True):
    """Chain hanging along -z from the origin: three 0.25 m links."""
    bones = [
        Bone(None, Pose.identity(), Capsule(np.array([0, 0, 0.0]), np.array([0, 0, -0.25]), 0.06)),
        Bone(
            0,
            Pose(Rot3.identity(), np.array([0, 0, -0.25])),
            Capsule(np.array([0, 0, -0.25]), np.array([0, 0, -0.5]), 0.05),
        ),
        Bone(
            1,
            Pose(Rot3.identity(), np.array([0, 0, -0.5])),
            Capsule(np.array([0, 0, -0.5]), np.array([0, 0, -0.72]), 0.05),
        ),
    ]
    skel = Skeleton(bones, sigma_skin=sigma_skin, hand_bones=(2,))
    if with_sdf:
        skel.canonical_sdf = bake(
            skel.capsule_proxy, [-0.25, -0.25, -0.95], [0.02, 0.02, 0.02], (26, 26, 55)
        )
    return skel


def single_bone():
    return Skeleton(
        [Bone(None, Pose.identity(), Capsule(np.zeros(3), np.array([0, 0, -0.3]), 0.05))]
    )


def test_tree_validation():
    with pytest.raises(ValueError):
        Skeleton([])
    with pytest.raises(ValueError):
        Skeleton(
            [
                Bone(None, Pose.identity(), Capsule(np.zeros(3), np.ones(3), 0.1)),
                Bone(5, Pose.identity(), Capsule(np.zeros(3), np.ones(3), 0.1)),
            ]
        )


def test_rest_pose_gives_identity_transforms():
    skel = three_link_arm(with_sdf=False)
    for t in bone_transforms(skel, BodyPose.rest(3)):
        assert t.allclose(Pose.identity(), tol=1e-12)


def test_single_bone_root_pose_passthrough():
    skel = single_bone()
    root = Pose(Rot3.rot_y(0.4), np.array([1.0, 2.0, 3.0]))
    pose = BodyPose([Rot3.identity()], root.rotation, root.translation)
    (t,) = bone_transforms(skel, pose)
    assert t.allclose(root, tol=1e-12)


def test_three_link_fk_against_hand_computation():
    # bend the middle joint 90 deg about +y; the end bone origin swings forward
    skel = three_link_arm(with_sdf=False)
    pose = BodyPose([Rot3.identity(), Rot3.rot_y(math.pi / 2), Rot3.identity()])
    transforms = bone_transforms(skel, pose)
    # end bone rest origin is (0,0,-0.5); joint 1 sits at (0,0,-0.25).
    # Ry(90) maps the (0,0,-0.25) offset from joint 1 to (-0.25, 0, 0)... with
    # Ry(+90): (x,z)->(z,-x): (0,0,-0.25) -> (-0.25,0,0). Hand FK: origin =
    # joint1 + R*(offset) = (0,0,-0.25) + (-0.25,0,0) = (-0.25,0,-0.25).
    end_origin = transforms[2].apply(np.array([0.0, 0.0, -0.5]))
    np.testing.assert_allclose(end_origin, [-0.25, 0.0, -0.25], atol=1e-12)


def test_skin_weights_normalized_and_positive():
    skel = three_link_arm(with_sdf=False)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.4, 0.4, size=(500, 3)) + np.array([0, 0, -0.4])
    w = skin_weights(skel, pts)
    assert (w >= 0).all()
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)


def test_skin_weights_continuous():
    skel = three_link_arm(with_sdf=False)
    rng = np.random.default_rng(4)
    pts = rng.uniform(-0.2, 0.2, size=(200, 3)) + np.array([0, 0, -0.4])
    step = 1e-4
    d = rng.standard_normal((200, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    w0 = skin_weights(skel, pts)
    w1 = skin_weights(skel, pts + step * d)
    rate = np.abs(w1 - w0).max(axis=1) / step
    assert rate.max() < 10.0 / skel.sigma_skin


def test_lbs_forward_is_identity_at_rest():
    skel = three_link_arm(with_sdf=False)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.5, 0.5, size=(100, 3))
    out = lbs_forward(skel, BodyPose.rest(3), pts)
    np.testing.assert_allclose(out, pts, atol=1e-12)


def test_lbs_weight_saturation_is_rigid():
    # deep inside one capsule with tiny sigma -> transforms rigidly with that bone
    skel = three_link_arm(sigma_skin=0.005, with_sdf=False)
    pose = BodyPose([Rot3.identity(), Rot3.rot_y(0.8), Rot3.identity()])
    x = np.array([0.0, 0.0, -0.125])  # mid bone 0, far from others
    out = lbs_forward(skel, pose, x)
    rigid = bone_transforms(skel, pose)[0].apply(x)
    np.testing.assert_allclose(out, rigid, atol=1e-6)


def test_lbs_blend_matches_direct_formula():
    skel = three_link_arm(with_sdf=False)
    pose = BodyPose([Rot3.rot_x(0.3), Rot3.rot_y(-0.5), Rot3.rot_z(0.2)])
    rng = np.random.default_rng(6)
    pts = rng.uniform(-0.2, 0.2, size=(50, 3)) + np.array([0, 0, -0.35])
    w = skin_weights(skel, pts)
    transforms = bone_transforms(skel, pose)
    expected = np.zeros_like(pts)
    for b, t in enumerate(transforms):
        expected += w[:, b : b + 1] * t.apply(pts)
    np.testing.assert_allclose(lbs_forward(skel, pose, pts), expected, atol=1e-12)


def test_lbs_inverse_identity_at_rest():
    skel = three_link_arm()
    x = np.array([0.05, -0.02, -0.4])
    back = lbs_inverse(skel, BodyPose.rest(3), x)
    np.testing.assert_allclose(back, x, atol=1e-9)


def test_lbs_inverse_roundtrip_inside_body():
    skel = three_link_arm()
    rng = np.random.default_rng(7)
    pose = BodyPose(
        [Rot3.rot_x(0.5), Rot3.rot_y(0.9), Rot3.rot_z(-0.6)],
        Rot3.rot_z(0.3),
        np.array([0.2, -0.1, 1.0]),
    )
    # sample canonical points inside the capsules
    pts = []
    while len(pts) < 1000:
        cand = rng.uniform([-0.15, -0.15, -0.9], [0.15, 0.15, 0.1], size=(4000, 3))
        inside = skel.capsule_proxy.values(cand) < -0.005
        pts.extend(cand[inside].tolist())
    pts = np.array(pts[:1000])
    world = lbs_forward(skel, pose, pts)
    back, ok = lbs_inverse_batch(skel, pose, world)
    assert ok.all()
    err = np.linalg.norm(back - pts, axis=1)
    assert err.max() < 1e-6


def test_lbs_inverse_far_point_lands_outside():
    skel = three_link_arm()
    pose = BodyPose([Rot3.rot_x(0.2), Rot3.rot_y(0.3), Rot3.identity()])
    far = np.array([1.0, 0.0, -0.3])
    canon, ok = lbs_inverse_batch(skel, pose, far[None, :])
    if ok[0]:
        assert skel.capsule_proxy.values(canon)[0] > 0.0


def test_lbs_inverse_raises_when_unconverged():
    # a skeleton whose blended map cannot reach the query within tolerance is
    # hard to build; instead starve the iteration budget
    skel = three_link_arm()
    pose = BodyPose([Rot3.rot_x(0.7), Rot3.rot_y(0.9), Rot3.rot_z(0.8)])
    x = lbs_forward(skel, pose, np.array([0.03, 0.02, -0.45]))
    with pytest.raises(NoConvergence):
        lbs_inverse(skel, pose, x, max_iter=0)


def test_point_jacobian_matches_finite_differences():
    skel = three_link_arm(with_sdf=False)
    rng = np.random.default_rng(9)
    from hoiscene.geometry import exp_se3

    for trial in range(5):
        pose = BodyPose(
            [Rot3.from_rotvec(0.4 * rng.standard_normal(3)) for _ in range(3)],
            Rot3.from_rotvec(0.3 * rng.standard_normal(3)),
            rng.standard_normal(3),
        )
        pts = rng.uniform(-0.1, 0.1, size=(4, 3)) + np.array([0, 0, -0.4])
        J = point_jacobian(skel, pose, pts)
        h = 1e-6

        def warped(dq):
            # dq: 6 + 3B perturbation applied as right increments
            root = pose.root_pose @ exp_se3(dq[:6])
            rots = [
                q @ Rot3.from_rotvec(dq[6 + 3 * j : 9 + 3 * j])
                for j, q in enumerate(pose.local_rotations)
            ]
            p2 = BodyPose(rots, root.rotation, root.translation)
            return lbs_forward(skel, p2, pts)

        for col in range(6 + 9):
            dq = np.zeros(15)
            dq[col] = h
            fd = (warped(dq) - warped(-dq)) / (2 * h)
            np.testing.assert_allclose(J[:, :, col], fd, atol=2e-5)


def test_skeleton_io_roundtrip(tmp_path):
    skel = three_link_arm()
    path = tmp_path / "skel.json"
    save_skeleton(skel, path, tmp_path / "canon.sdfg")
    again = load_skeleton(path)
    assert again.n_bones == 3
    assert again.hand_bones == (2,)
    assert again.sigma_skin == skel.sigma_skin
    np.testing.assert_array_equal(again.canonical_sdf.values, skel.canonical_sdf.values)
    for a, b in zip(again.bones, skel.bones):
        assert a.parent == b.parent
        assert a.rest.allclose(b.rest, tol=1e-12)
        assert a.capsule.radius == b.capsule.radius


def test_body_pose_io_roundtrip(tmp_path):
    poses = {
        0: BodyPose.rest(3),
        5: BodyPose(
            [Rot3.rot_x(0.1), Rot3.rot_y(0.2), Rot3.rot_z(0.3)],
            Rot3.rot_z(0.5),
            np.array([1.0, 2.0, 3.0]),
        ),
    }
    path = tmp_path / "poses.json"
    save_body_poses(poses, path)
    again = load_body_poses(path)
    assert set(again) == {0, 5}
    assert again[5].root_rotation.angle_to(poses[5].root_rotation) < 1e-12
    np.testing.assert_allclose(again[5].root_translation, poses[5].root_translation)
