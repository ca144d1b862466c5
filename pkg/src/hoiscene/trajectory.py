"""Camera trajectories, static-frame detection, and object-motion disentanglement.

Two trajectories of the same physical camera exist: one reconstructed against
the static scene (world frame) and one against the manipulated object as if it
were static (object frame, arbitrary similarity gauge). A RANSAC-fitted Sim(3)
aligns them on frames where the object did not move; removing the real camera
motion from the aligned apparent motion yields the object's world-frame poses.

Poses are stored camera-to-world (the serialized 4x4 is T_world_cam), so a
pose's translation is the camera center and the gauge acts on centers exactly
as in the Umeyama objective.
"""

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, Rot3, Sim3, umeyama

__all__ = [
    "FrameTag",
    "CameraTrajectory",
    "ObjectMotion",
    "RansacConfig",
    "StaticFrameReport",
    "NoConsensus",
    "FrameMismatch",
    "detect_static_frames",
    "disentangle",
    "compose_apparent",
    "save_trajectory",
    "load_trajectory",
    "save_motion",
    "load_motion",
]


class NoConsensus(RuntimeError):
    """Raised when RANSAC finds no static-frame consensus set."""


class FrameMismatch(ValueError):
    """Raised when two tracks do not share the same frame-index set."""


class FrameTag(enum.Enum):
    SCENE = "SceneFrame"
    OBJECT = "ObjectFrame"


def _check_frames(frames):
    if not frames:
        raise ValueError("trajectory must be non-empty")
    idx = [i for i, _ in frames]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("frame indices must be strictly increasing")


@dataclass
class CameraTrajectory:
    """Ordered (frame_index, camera-to-world Pose) samples with a frame tag."""

    frames: list
    frame_tag: FrameTag = FrameTag.SCENE

    def __post_init__(self):
        self.frames = [(int(i), p) for i, p in self.frames]
        _check_frames(self.frames)

    def indices(self):
        return [i for i, _ in self.frames]

    def poses(self):
        return [p for _, p in self.frames]

    def pose_at(self, frame):
        for i, p in self.frames:
            if i == frame:
                return p
        raise KeyError(f"frame {frame} not in trajectory")

    def centers(self):
        """Camera centers (n, 3): translations of camera-to-world poses."""
        return np.array([p.translation for _, p in self.frames])

    def __len__(self):
        return len(self.frames)


@dataclass
class ObjectMotion:
    """Ordered (frame_index, object-to-world Pose) samples."""

    frames: list

    def __post_init__(self):
        self.frames = [(int(i), p) for i, p in self.frames]
        _check_frames(self.frames)

    def indices(self):
        return [i for i, _ in self.frames]

    def poses(self):
        return [p for _, p in self.frames]

    def pose_at(self, frame):
        for i, p in self.frames:
            if i == frame:
                return p
        raise KeyError(f"frame {frame} not in motion track")

    def __len__(self):
        return len(self.frames)


@dataclass
class RansacConfig:
    """Thresholds and sampling budget for static-frame RANSAC.

    center-distance AND rotation-angle residuals are both required: center-only
    residuals admit false inliers under pure camera rotation.
    """

    iterations: int = 1000
    min_sample: int = 3
    eps_t: float = 0.01
    eps_r: float = math.radians(1.0)
    min_inliers: int | None = None  # None -> max(3, 10% of frames)
    seed: int = 0

    def resolved_min_inliers(self, n_frames):
        if self.min_inliers is not None:
            return self.min_inliers
        return max(3, int(math.ceil(0.1 * n_frames)))


@dataclass
class StaticFrameReport:
    alignment: Sim3
    inlier_frames: list
    per_frame_residual: dict  # frame -> (rotation angle rad, center distance m)

    @property
    def inlier_count(self):
        return len(self.inlier_frames)


def _match_indices(a, b):
    ia, ib = a.indices(), b.indices()
    if ia != ib:
        raise FrameMismatch(
            f"frame index sets differ: {len(ia)} vs {len(ib)} frames, "
            f"first mismatch at position "
            f"{next((k for k, (x, y) in enumerate(zip(ia, ib)) if x != y), min(len(ia), len(ib)))}"
        )
    return ia


def _residuals(sim, obj_poses, scn_poses):
    """Per-frame (rotation angle, center distance) of mapped obj vs scn poses."""
    rot = np.empty(len(obj_poses))
    cen = np.empty(len(obj_poses))
    for k, (po, ps) in enumerate(zip(obj_poses, scn_poses)):
        mapped = sim.transform_pose(po)
        rot[k] = ps.rotation_distance(mapped)
        cen[k] = ps.translation_distance(mapped)
    return rot, cen


def detect_static_frames(c_obj, c_scn, cfg=None):
    """RANSAC a Sim(3) aligning the object-frame track to the scene-frame track.

    Frames in consensus are static-object frames: after mapping through the
    fitted gauge, their camera center lands within eps_t and their orientation
    within eps_r of the scene-frame camera. The winning hypothesis is refit
    with Umeyama on all inliers and the inlier set re-evaluated until stable.

    Raises NoConsensus if the best inlier count is below cfg.min_inliers
    (the object never holds still); an externally supplied alignment can then
    be passed to disentangle directly.
    """
    cfg = cfg or RansacConfig()
    idx = _match_indices(c_obj, c_scn)
    n = len(idx)
    if n < cfg.min_sample:
        raise ValueError(f"need at least {cfg.min_sample} frames, got {n}")

    obj_poses = c_obj.poses()
    scn_poses = c_scn.poses()
    src = c_obj.centers()
    dst = c_scn.centers()
    min_inliers = cfg.resolved_min_inliers(n)

    rng = np.random.default_rng(cfg.seed)
    samples = rng.integers(0, n, size=(cfg.iterations, cfg.min_sample))

    best = None  # (count, -hyp_index, inlier_mask, sim)
    for h in range(cfg.iterations):
        pick = samples[h]
        if len(set(pick.tolist())) < cfg.min_sample:
            continue
        try:
            sim, _ = umeyama(src[pick], dst[pick])
        except Exception:
            continue
        rot, cen = _residuals(sim, obj_poses, scn_poses)
        mask = (cen < cfg.eps_t) & (rot < cfg.eps_r)
        count = int(mask.sum())
        key = (count, -h)
        if best is None or key > best[0]:
            best = (key, mask, sim)

    if best is None or best[0][0] < min_inliers:
        got = 0 if best is None else best[0][0]
        raise NoConsensus(
            f"best hypothesis has {got} inliers, need {min_inliers}; "
            "object appears to be moving in every frame"
        )

    mask, sim = best[1], best[2]
    # Refit on all inliers, then re-evaluate; iterate to a stable set.
    for _ in range(10):
        sim, _ = umeyama(src[mask], dst[mask])
        rot, cen = _residuals(sim, obj_poses, scn_poses)
        new_mask = (cen < cfg.eps_t) & (rot < cfg.eps_r)
        if int(new_mask.sum()) < min_inliers:
            break
        if np.array_equal(new_mask, mask):
            mask = new_mask
            break
        mask = new_mask

    rot, cen = _residuals(sim, obj_poses, scn_poses)
    inliers = [idx[k] for k in range(n) if mask[k]]
    residuals = {idx[k]: (float(rot[k]), float(cen[k])) for k in range(n)}
    return StaticFrameReport(sim, inliers, residuals)


def disentangle(c_obj, c_scn, align):
    """Recover object-to-world poses: P_i = C_scn_i^-1 (align * C_obj_i).

    The gauge is applied to the apparent camera pose (orientation rotated,
    center mapped through the full similarity), then the real camera motion is
    removed. On static frames the result deviates from identity by less than
    the RANSAC thresholds used to fit `align`.
    """
    idx = _match_indices(c_obj, c_scn)
    out = []
    for i, po, ps in zip(idx, c_obj.poses(), c_scn.poses()):
        out.append((i, ps.inverse() @ align.transform_pose(po)))
    return ObjectMotion(out)


def compose_apparent(c_scn, p_obj, align):
    """Forward model: build the apparent object-frame camera track.

    C_obj_i = align^-1 * (C_scn_i * P_i); disentangle inverts this exactly,
    so the pair round-trips to the input motion for any gauge.
    """
    if c_scn.indices() != p_obj.indices():
        raise FrameMismatch("camera track and motion track cover different frames")
    inv = align.inverse()
    out = []
    for (i, ps), pp in zip(c_scn.frames, p_obj.poses()):
        out.append((i, inv.transform_pose(ps @ pp)))
    return CameraTrajectory(out, FrameTag.OBJECT)


def save_trajectory(traj, path):
    """Trajectory JSON: {"frame_tag", "frames": [{"i", "T_world_cam": [16]}]}."""
    doc = {
        "frame_tag": traj.frame_tag.value,
        "frames": [
            {"i": i, "T_world_cam": [float(v) for v in p.matrix().reshape(-1)]}
            for i, p in traj.frames
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_trajectory(path):
    with open(path) as fh:
        doc = json.load(fh)
    tag = FrameTag(doc["frame_tag"])
    frames = [
        (f["i"], Pose.from_matrix(np.array(f["T_world_cam"]).reshape(4, 4)))
        for f in doc["frames"]
    ]
    return CameraTrajectory(frames, tag)


def save_motion(motion, path):
    doc = {
        "frames": [
            {"i": i, "T_world_obj": [float(v) for v in p.matrix().reshape(-1)]}
            for i, p in motion.frames
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_motion(path):
    with open(path) as fh:
        doc = json.load(fh)
    frames = [
        (f["i"], Pose.from_matrix(np.array(f["T_world_obj"]).reshape(4, 4)))
        for f in doc["frames"]
    ]
    return ObjectMotion(frames)


def save_sim3(sim, path):
    doc = {
        "scale": sim.scale,
        "quat_wxyz": [float(v) for v in sim.rotation.q],
        "t": [float(v) for v in sim.translation],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_sim3(path):
    with open(path) as fh:
        doc = json.load(fh)
    return Sim3(doc["scale"], Rot3(np.array(doc["quat_wxyz"])), np.array(doc["t"]))
