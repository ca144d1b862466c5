"""Rotation, rigid-body, and similarity transforms plus least-squares alignment.

All rotations are unit quaternions canonicalized to w >= 0 so that equal
rotations compare bit-equal after construction. Twists use the (omega, v)
layout: rotation first, translation second.
"""

import math

import numpy as np

__all__ = [
    "AngleNearPi",
    "DegenerateConfiguration",
    "Rot3",
    "Pose",
    "Sim3",
    "exp_se3",
    "log_se3",
    "umeyama",
    "slerp",
    "random_rotation",
    "random_pose",
]

_TINY = 1e-12
_CUT_LOCUS_MARGIN = 1e-6


class AngleNearPi(ValueError):
    """Raised by log maps within tolerance of the pi-rotation cut locus."""


class DegenerateConfiguration(ValueError):
    """Raised when a point configuration admits no unique rotation fit."""


def skew(v):
    """3x3 cross-product matrix [v]x."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


class Rot3:
    """Unit-quaternion rotation (w, x, y, z), canonicalized to w >= 0."""

    __slots__ = ("q",)

    def __init__(self, q):
        q = np.array(q, dtype=np.float64)
        if q.shape != (4,):
            raise ValueError(f"quaternion must have 4 components, got {q.shape}")
        n = math.sqrt(float(q @ q))
        if not math.isfinite(n) or n < _TINY:
            raise ValueError("quaternion norm is zero or non-finite")
        q /= n
        if q[0] < 0.0:
            q = -q
        q.setflags(write=False)
        self.q = q

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_rotvec(cls, w):
        """Exponential map: rotation vector (axis * angle, radians) to Rot3."""
        w = np.asarray(w, dtype=np.float64)
        theta = math.sqrt(float(w @ w))
        if theta < 1e-8:
            s = 0.5 - theta * theta / 48.0
        else:
            s = math.sin(0.5 * theta) / theta
        return cls(np.array([math.cos(0.5 * theta), s * w[0], s * w[1], s * w[2]]))

    @classmethod
    def rot_x(cls, angle):
        return cls.from_rotvec(np.array([angle, 0.0, 0.0]))

    @classmethod
    def rot_y(cls, angle):
        return cls.from_rotvec(np.array([0.0, angle, 0.0]))

    @classmethod
    def rot_z(cls, angle):
        return cls.from_rotvec(np.array([0.0, 0.0, angle]))

    @classmethod
    def from_matrix(cls, m):
        """Build from a 3x3 rotation matrix (Shepperd's branch method)."""
        m = np.asarray(m, dtype=np.float64)
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0.0:
            r = math.sqrt(1.0 + t)
            s = 0.5 / r
            q = np.array(
                [
                    0.5 * r,
                    (m[2, 1] - m[1, 2]) * s,
                    (m[0, 2] - m[2, 0]) * s,
                    (m[1, 0] - m[0, 1]) * s,
                ]
            )
        else:
            i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
            j, k = (i + 1) % 3, (i + 2) % 3
            r = math.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
            s = 0.5 / r
            q = np.empty(4)
            q[0] = (m[k, j] - m[j, k]) * s
            q[1 + i] = 0.5 * r
            q[1 + j] = (m[j, i] + m[i, j]) * s
            q[1 + k] = (m[k, i] + m[i, k]) * s
        return cls(q)

    def matrix(self):
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def compose(self, other):
        a, b = self.q, other.q
        return Rot3(
            np.array(
                [
                    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                    a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                    a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                    a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
                ]
            )
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        q = self.q
        return Rot3(np.array([q[0], -q[1], -q[2], -q[3]]))

    def apply(self, pts):
        """Rotate one (3,) point or a batch (n, 3)."""
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            return self.matrix() @ pts
        return pts @ self.matrix().T

    def angle(self):
        """Rotation angle in [0, pi]."""
        n = math.sqrt(float(self.q[1:] @ self.q[1:]))
        return 2.0 * math.atan2(n, self.q[0])

    def rotvec(self):
        """Log map: rotation vector with norm = angle."""
        w = self.q[0]
        xyz = self.q[1:]
        n = math.sqrt(float(xyz @ xyz))
        if n < 1e-8:
            factor = 2.0 / w * (1.0 - n * n / (3.0 * w * w))
        else:
            factor = 2.0 * math.atan2(n, w) / n
        return factor * xyz

    def angle_to(self, other):
        return (self.inverse() @ other).angle()

    def allclose(self, other, tol=1e-9):
        return self.angle_to(other) <= tol

    def __repr__(self):
        return f"Rot3(wxyz={np.array2string(self.q, precision=9)})"


class Pose:
    """Rigid transform: x -> R x + t. Immutable value."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        self.rotation = rotation if rotation is not None else Rot3.identity()
        t = np.array(
            translation if translation is not None else (0.0, 0.0, 0.0),
            dtype=np.float64,
        )
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {t.shape}")
        t.setflags(write=False)
        self.translation = t

    @classmethod
    def identity(cls):
        return cls(Rot3.identity(), np.zeros(3))

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 matrix, got {m.shape}")
        return cls(Rot3.from_matrix(m[:3, :3]), m[:3, 3])

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation.matrix()
        m[:3, 3] = self.translation
        return m

    def compose(self, other):
        """Apply `other` first, then `self`."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation.apply(other.translation) + self.translation,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        rinv = self.rotation.inverse()
        return Pose(rinv, -rinv.apply(self.translation))

    def apply(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            return self.rotation.apply(pts) + self.translation
        return self.rotation.apply(pts) + self.translation[None, :]

    def rotation_distance(self, other):
        return self.rotation.angle_to(other.rotation)

    def translation_distance(self, other):
        return float(np.linalg.norm(self.translation - other.translation))

    def allclose(self, other, tol=1e-9):
        return (
            self.rotation_distance(other) <= tol
            and self.translation_distance(other) <= tol
        )

    def __repr__(self):
        return f"Pose(R={self.rotation!r}, t={np.array2string(self.translation, precision=9)})"


class Sim3:
    """Similarity transform: x -> s R x + t with s > 0."""

    __slots__ = ("scale", "rotation", "translation")

    def __init__(self, scale=1.0, rotation=None, translation=None):
        scale = float(scale)
        if not math.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"scale must be positive and finite, got {scale}")
        self.scale = scale
        self.rotation = rotation if rotation is not None else Rot3.identity()
        t = np.array(
            translation if translation is not None else (0.0, 0.0, 0.0),
            dtype=np.float64,
        )
        t.setflags(write=False)
        self.translation = t

    @classmethod
    def identity(cls):
        return cls(1.0, Rot3.identity(), np.zeros(3))

    @classmethod
    def from_pose(cls, pose, scale=1.0):
        return cls(scale, pose.rotation, pose.translation)

    def compose(self, other):
        return Sim3(
            self.scale * other.scale,
            self.rotation @ other.rotation,
            self.scale * self.rotation.apply(other.translation) + self.translation,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        rinv = self.rotation.inverse()
        return Sim3(
            1.0 / self.scale,
            rinv,
            -rinv.apply(self.translation) / self.scale,
        )

    def apply(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            return self.scale * self.rotation.apply(pts) + self.translation
        return self.scale * self.rotation.apply(pts) + self.translation[None, :]

    def transform_pose(self, pose):
        """Act on a camera-to-world pose: rotate the orientation, map the center.

        Scale moves the center only; the result stays rigid. This is the
        standard gauge action on SfM camera poses.
        """
        return Pose(self.rotation @ pose.rotation, self.apply(pose.translation))

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.scale * self.rotation.matrix()
        m[:3, 3] = self.translation
        return m

    def __repr__(self):
        return (
            f"Sim3(s={self.scale:.9g}, R={self.rotation!r}, "
            f"t={np.array2string(self.translation, precision=9)})"
        )


def _so3_left_jacobian(w):
    """V matrix of the SE(3) exponential: exp translation = V @ v."""
    theta2 = float(w @ w)
    K = skew(w)
    if theta2 < 1e-16:
        a = 0.5 - theta2 / 24.0
        b = 1.0 / 6.0 - theta2 / 120.0
    else:
        theta = math.sqrt(theta2)
        a = (1.0 - math.cos(theta)) / theta2
        b = (theta - math.sin(theta)) / (theta2 * theta)
    return np.eye(3) + a * K + b * (K @ K)


def _so3_left_jacobian_inv(w):
    theta2 = float(w @ w)
    K = skew(w)
    if theta2 < 1e-16:
        c = 1.0 / 12.0 + theta2 / 720.0
    else:
        theta = math.sqrt(theta2)
        c = (1.0 - 0.5 * theta * math.sin(theta) / (1.0 - math.cos(theta))) / theta2
    return np.eye(3) - 0.5 * K + c * (K @ K)


def exp_se3(twist):
    """SE(3) exponential of a 6-vector twist (omega, v)."""
    twist = np.asarray(twist, dtype=np.float64)
    if twist.shape != (6,):
        raise ValueError(f"twist must be a 6-vector, got {twist.shape}")
    w, v = twist[:3], twist[3:]
    return Pose(Rot3.from_rotvec(w), _so3_left_jacobian(w) @ v)


def log_se3(pose):
    """SE(3) logarithm; raises AngleNearPi at the cut locus."""
    if pose.rotation.angle() >= math.pi - _CUT_LOCUS_MARGIN:
        raise AngleNearPi(
            f"rotation angle {pose.rotation.angle():.9f} is within "
            f"{_CUT_LOCUS_MARGIN:g} of pi; log map is ill-conditioned"
        )
    w = pose.rotation.rotvec()
    v = _so3_left_jacobian_inv(w) @ pose.translation
    return np.concatenate([w, v])


def umeyama(src, dst, with_scale=True):
    """Least-squares similarity fit: dst_i ~ s R src_i + t.

    Args:
        src, dst: (n, 3) paired point arrays, n >= 3.
        with_scale: estimate scale; otherwise fixed at 1.

    Returns:
        (Sim3, residual_rms) where residual_rms is the RMS of
        ||s R src_i + t - dst_i|| over the inputs.

    Raises:
        DegenerateConfiguration: src covariance rank < 2 (collinear or
            coincident points), so no unique rotation exists.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 3 or src.shape != dst.shape:
        raise ValueError(f"need matching (n, 3) arrays, got {src.shape} vs {dst.shape}")
    n = src.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 point pairs, got {n}")

    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    src_c = src - mu_s
    dst_c = dst - mu_d

    sv = np.linalg.svd(src_c, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], _TINY):
        raise DegenerateConfiguration(
            "source points are collinear or coincident; rotation is not unique"
        )

    cov = dst_c.T @ src_c / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt

    if with_scale:
        var_src = float((src_c**2).sum()) / n
        scale = float(np.trace(np.diag(D) @ S)) / var_src
        if scale <= 0.0:
            raise DegenerateConfiguration(f"non-positive scale estimate {scale:g}")
    else:
        scale = 1.0

    rot = Rot3.from_matrix(R)
    t = mu_d - scale * rot.apply(mu_s)
    sim = Sim3(scale, rot, t)
    res = sim.apply(src) - dst
    rms = math.sqrt(float((res**2).sum()) / n)
    return sim, rms


def slerp(a, b, u):
    """Spherical-linear interpolation between rotations, shortest path."""
    qa, qb = a.q, b.q
    dot = float(qa @ qb)
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 1.0 - 1e-10:
        return Rot3((1.0 - u) * qa + u * qb)
    omega = math.acos(min(dot, 1.0))
    so = math.sin(omega)
    return Rot3(
        (math.sin((1.0 - u) * omega) / so) * qa + (math.sin(u * omega) / so) * qb
    )


def random_rotation(rng):
    """Uniform random rotation (quaternion from 4D Gaussian)."""
    q = rng.standard_normal(4)
    return Rot3(q)


def random_pose(rng, trans_scale=1.0):
    return Pose(random_rotation(rng), trans_scale * rng.standard_normal(3))
