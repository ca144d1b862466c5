"""Articulated capsule-proxy body with linear blend skinning and its inverse.

Skin weights are computed on the fly from canonical-space capsule distances,
w_b(x) proportional to exp(-max(d_b, 0)^2 / sigma^2), so they are closed-form,
differentiable, and constant under pose changes. The inverse warp runs a
multi-candidate Newton search (one candidate per bone's rigid inverse) and
keeps the converged candidate with the smallest canonical |distance|.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, Rot3, skew
from .sdf import Capsule, SdfGrid, Union, load_sdfg, save_sdfg

__all__ = [
    "NoConvergence",
    "Bone",
    "Skeleton",
    "BodyPose",
    "bone_transforms",
    "posed_bone_frames",
    "skin_weights",
    "lbs_forward",
    "lbs_inverse",
    "lbs_inverse_batch",
    "point_jacobian",
    "save_skeleton",
    "load_skeleton",
    "save_body_poses",
    "load_body_poses",
]

_CONVERGED_TOL = 1e-9
_ACCEPT_TOL = 1e-6


class NoConvergence(RuntimeError):
    """Inverse skinning failed to converge from every bone candidate."""


@dataclass(frozen=True)
class Bone:
    parent: int | None
    rest: Pose  # canonical bone frame -> canonical world
    capsule: Capsule  # canonical-space proxy volume


@dataclass
class Skeleton:
    bones: list
    canonical_sdf: SdfGrid | None = None
    sigma_skin: float = 0.05
    hand_bones: tuple = ()

    def __post_init__(self):
        if not self.bones:
            raise ValueError("skeleton needs at least one bone")
        if self.bones[0].parent is not None:
            raise ValueError("bone 0 must be the root (parent None)")
        for i, b in enumerate(self.bones[1:], start=1):
            if b.parent is None or not 0 <= b.parent < i:
                raise ValueError(
                    f"bone {i} parent {b.parent} must reference an earlier bone"
                )
        if self.sigma_skin <= 0.0:
            raise ValueError("sigma_skin must be positive")
        self.hand_bones = tuple(int(b) for b in self.hand_bones)

    @property
    def n_bones(self):
        return len(self.bones)

    @property
    def capsule_proxy(self):
        return Union(tuple(b.capsule for b in self.bones))

    def descendants(self):
        """Boolean (B, B) table: desc[j, b] iff b is j or below j."""
        n = self.n_bones
        table = np.eye(n, dtype=bool)
        for b in range(1, n):
            p = self.bones[b].parent
            table[:, b] |= table[:, p]
        return table

    def capsule_bounds(self, pad=0.0):
        pts = np.array(
            [p for b in self.bones for p in (b.capsule.a, b.capsule.b)], dtype=float
        )
        r = max(b.capsule.radius for b in self.bones)
        return pts.min(axis=0) - r - pad, pts.max(axis=0) + r + pad


@dataclass
class BodyPose:
    """Per-bone local rotations plus a root rigid transform."""

    local_rotations: list
    root_rotation: Rot3 = field(default_factory=Rot3.identity)
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.local_rotations = list(self.local_rotations)
        self.root_translation = np.asarray(self.root_translation, dtype=np.float64)

    @classmethod
    def rest(cls, n_bones):
        return cls([Rot3.identity() for _ in range(n_bones)])

    @property
    def root_pose(self):
        return Pose(self.root_rotation, self.root_translation)

    def copy(self):
        return BodyPose(
            list(self.local_rotations), self.root_rotation, self.root_translation.copy()
        )


def _check_pose(skel, pose):
    if len(pose.local_rotations) != skel.n_bones:
        raise ValueError(
            f"pose has {len(pose.local_rotations)} joint rotations, "
            f"skeleton has {skel.n_bones} bones"
        )


def posed_bone_frames(skel, pose):
    """Forward kinematics: world frame of each bone (including its own joint)."""
    _check_pose(skel, pose)
    frames = []
    for b, bone in enumerate(skel.bones):
        local_rot = Pose(pose.local_rotations[b], np.zeros(3))
        if bone.parent is None:
            g = pose.root_pose @ bone.rest @ local_rot
        else:
            offset = skel.bones[bone.parent].rest.inverse() @ bone.rest
            g = frames[bone.parent] @ offset @ local_rot
        frames.append(g)
    return frames


def bone_transforms(skel, pose):
    """Skinning matrices: posed bone frame composed with the rest inverse."""
    return [g @ bone.rest.inverse() for g, bone in zip(posed_bone_frames(skel, pose), skel.bones)]


def skin_weights(skel, pts):
    """Normalized Gaussian-of-capsule-distance weights, (n, B)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    d = np.stack(
        [np.maximum(b.capsule.value_grad(pts)[0], 0.0) for b in skel.bones], axis=1
    )
    d2 = d * d
    # subtract the per-point minimum so the dominant bone never underflows
    e = np.exp(-(d2 - d2.min(axis=1, keepdims=True)) / skel.sigma_skin**2)
    return e / e.sum(axis=1, keepdims=True)


def _transform_stack(transforms):
    R = np.stack([t.rotation.matrix() for t in transforms])
    t = np.stack([t.translation for t in transforms])
    return R, t


def lbs_forward(skel, pose, pts):
    """Warp canonical points to the world: x' = sum_b w_b(x) T_b x."""
    pts = np.asarray(pts, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    w = skin_weights(skel, pts)
    R, t = _transform_stack(bone_transforms(skel, pose))
    per_bone = np.einsum("bij,nj->nbi", R, pts) + t[None, :, :]
    out = np.einsum("nb,nbi->ni", w, per_bone)
    return out[0] if single else out


def blended_rotation(skel, pose, pts_canonical):
    """Weight-blended bone rotation matrices at canonical points, (n, 3, 3)."""
    w = skin_weights(skel, np.atleast_2d(pts_canonical))
    R, _ = _transform_stack(bone_transforms(skel, pose))
    return np.einsum("nb,bij->nij", w, R)


def lbs_inverse_batch(skel, pose, pts_world, max_iter=20, canonical_field=None):
    """Invert the forward warp for a batch of world points.

    Returns (canonical points (n, 3), converged mask (n,)). Non-converged
    entries keep their best candidate but are flagged; callers treat them as
    empty space. Candidates start from every bone's rigid inverse and are
    refined by Newton steps on the forward map with the blended rotation as
    the Jacobian; ties resolve to the smallest canonical |distance|.
    """
    pts_world = np.atleast_2d(np.asarray(pts_world, dtype=np.float64))
    n = len(pts_world)
    nb = skel.n_bones
    transforms = bone_transforms(skel, pose)
    R, t = _transform_stack(transforms)

    # candidate seeds: x0 = T_b^-1 x_world
    Rt = R.transpose(0, 2, 1)
    cand = np.einsum("bij,nbj->nbi", Rt, pts_world[:, None, :] - t[None, :, :])
    cand = cand.reshape(n * nb, 3)
    target = np.repeat(pts_world, nb, axis=0)

    for _ in range(max_iter):
        w = skin_weights(skel, cand)
        per_bone = np.einsum("bij,nj->nbi", R, cand) + t[None, :, :]
        fwd = np.einsum("nb,nbi->ni", w, per_bone)
        resid = fwd - target
        if float(np.abs(resid).max()) < _CONVERGED_TOL:
            break
        J = np.einsum("nb,bij->nij", w, R)
        det = np.linalg.det(J)
        bad = np.abs(det) < 1e-8
        if bad.any():
            J[bad] = np.eye(3)
        step = np.linalg.solve(J, resid[:, :, None])[:, :, 0]
        cand = cand - step

    w = skin_weights(skel, cand)
    per_bone = np.einsum("bij,nj->nbi", R, cand) + t[None, :, :]
    fwd = np.einsum("nb,nbi->ni", w, per_bone)
    resid = np.linalg.norm(fwd - target, axis=1).reshape(n, nb)
    ok_cand = resid < _ACCEPT_TOL

    field_ = canonical_field
    if field_ is None:
        field_ = skel.canonical_sdf if skel.canonical_sdf is not None else skel.capsule_proxy
    xi = np.abs(field_.value_grad(cand)[0]).reshape(n, nb)
    score = np.where(ok_cand, xi, np.inf)
    pick = score.argmin(axis=1)
    rows = np.arange(n)
    out = cand.reshape(n, nb, 3)[rows, pick]
    converged = ok_cand[rows, pick]
    return out, converged


def lbs_inverse(skel, pose, x_world, max_iter=20):
    """Single-point inverse warp; raises NoConvergence if no candidate lands."""
    pts, ok = lbs_inverse_batch(skel, pose, np.asarray(x_world, dtype=np.float64)[None, :], max_iter)
    if not ok[0]:
        raise NoConvergence(
            f"inverse skinning did not converge for point {np.asarray(x_world)}"
        )
    return pts[0]


def point_jacobian(skel, pose, pts_canonical):
    """d(world point)/d(pose DOF) for canonical points, shape (n, 3, 6 + 3B).

    Column layout: root twist (omega, v) applied as a right increment on the
    root pose, then 3 columns per joint for right increments of each local
    rotation. Skin weights live in canonical space, so they are exact
    constants under pose perturbations and the Jacobian is exact.
    """
    pts = np.atleast_2d(np.asarray(pts_canonical, dtype=np.float64))
    n = len(pts)
    nb = skel.n_bones
    frames = posed_bone_frames(skel, pose)
    transforms = [g @ bone.rest.inverse() for g, bone in zip(frames, skel.bones)]
    R, t = _transform_stack(transforms)
    w = skin_weights(skel, pts)
    xb = np.einsum("bij,nj->nbi", R, pts) + t[None, :, :]  # per-bone world points

    J = np.zeros((n, 3, 6 + 3 * nb))
    root = pose.root_pose
    R_root = root.rotation.matrix()
    root_inv = root.inverse()

    # root rotation (right increment): dx = R_root (omega x y_b), y_b in root frame
    y = np.einsum("ij,nbj->nbi", root_inv.rotation.matrix(), xb) + root_inv.translation
    for b in range(nb):
        for k, yb in enumerate(y[:, b, :]):
            J[k, :, 0:3] += -w[k, b] * (R_root @ skew(yb))
    # root translation (right increment): dx = R_root v
    J[:, :, 3:6] = R_root[None, :, :]

    desc = skel.descendants()
    for j in range(nb):
        Rj = frames[j].rotation.matrix()
        oj = frames[j].translation
        col = slice(6 + 3 * j, 9 + 3 * j)
        for b in range(nb):
            if not desc[j, b]:
                continue
            lever = xb[:, b, :] - oj
            for k in range(n):
                J[k, :, col] += -w[k, b] * (skew(lever[k]) @ Rj)
    return J


def save_skeleton(skel, path, sdf_path=None):
    """Skeleton JSON plus a companion SDFG file for the canonical shape."""
    doc = {
        "sigma_skin": skel.sigma_skin,
        "hand_bones": list(skel.hand_bones),
        "bones": [
            {
                "parent": b.parent,
                "rest_T": [float(v) for v in b.rest.matrix().reshape(-1)],
                "capsule": {
                    "a": [float(v) for v in np.asarray(b.capsule.a)],
                    "b": [float(v) for v in np.asarray(b.capsule.b)],
                    "radius": float(b.capsule.radius),
                },
            }
            for b in skel.bones
        ],
    }
    if skel.canonical_sdf is not None and sdf_path is not None:
        save_sdfg(skel.canonical_sdf, sdf_path)
        doc["canonical_sdf"] = str(sdf_path)
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_skeleton(path):
    with open(path) as fh:
        doc = json.load(fh)
    bones = [
        Bone(
            parent=b["parent"],
            rest=Pose.from_matrix(np.array(b["rest_T"]).reshape(4, 4)),
            capsule=Capsule(
                np.array(b["capsule"]["a"]),
                np.array(b["capsule"]["b"]),
                b["capsule"]["radius"],
            ),
        )
        for b in doc["bones"]
    ]
    sdf = load_sdfg(doc["canonical_sdf"]) if "canonical_sdf" in doc else None
    return Skeleton(
        bones,
        canonical_sdf=sdf,
        sigma_skin=doc["sigma_skin"],
        hand_bones=tuple(doc.get("hand_bones", ())),
    )


def save_body_poses(poses, path):
    """poses: dict frame -> BodyPose."""
    doc = {
        "frames": [
            {
                "i": int(i),
                "root_quat_wxyz": [float(v) for v in p.root_rotation.q],
                "root_t": [float(v) for v in p.root_translation],
                "joint_quats_wxyz": [[float(v) for v in q.q] for q in p.local_rotations],
            }
            for i, p in sorted(poses.items())
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_body_poses(path):
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    for f in doc["frames"]:
        out[f["i"]] = BodyPose(
            [Rot3(np.array(q)) for q in f["joint_quats_wxyz"]],
            Rot3(np.array(f["root_quat_wxyz"])),
            np.array(f["root_t"]),
        )
    return out
