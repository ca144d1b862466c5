"""Signed-distance representations: analytic primitives and trainable voxel grids.

Analytic shapes supply exact ground-truth distances; SdfGrid is the trainable
stand-in queried with trilinear interpolation and the exact gradient of the
interpolant. All coordinates and distances are meters.
"""

import enum
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import Pose

__all__ = [
    "OutsidePolicy",
    "SdfSample",
    "AnalyticSdf",
    "Sphere",
    "Box",
    "Capsule",
    "HalfSpace",
    "Union",
    "Transformed",
    "SdfGrid",
    "bake",
    "query",
    "query_values",
    "transform_query",
    "save_sdfg",
    "load_sdfg",
    "lattice_corner_weights",
]

_SDFG_MAGIC = b"SDFG"
_SDFG_VERSION = 1
_DEGENERATE_EPS = 1e-12


class OutsidePolicy(enum.IntEnum):
    """Out-of-box behavior: clamp-plus-distance keeps far queries monotone."""

    CLAMP = 0
    LINEAR = 1


@dataclass(frozen=True)
class SdfSample:
    """Signed distance and spatial gradient at one point."""

    value: float
    gradient: np.ndarray
    degenerate: bool = False


class AnalyticSdf:
    """Base for closed-form signed-distance shapes."""

    def value_grad(self, pts):
        """Return (values (n,), gradients (n, 3), degenerate (n,) bool)."""
        raise NotImplementedError

    def values(self, pts):
        return self.value_grad(np.atleast_2d(pts))[0]


def _norm_rows(v):
    return np.sqrt(np.einsum("ij,ij->i", v, v))


def _safe_unit(v, eps=_DEGENERATE_EPS):
    n = _norm_rows(v)
    bad = n < eps
    out = np.zeros_like(v)
    ok = ~bad
    out[ok] = v[ok] / n[ok, None]
    return out, bad


@dataclass(frozen=True)
class Sphere(AnalyticSdf):
    center: np.ndarray
    radius: float

    def value_grad(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        d = pts - np.asarray(self.center, dtype=np.float64)[None, :]
        n = _norm_rows(d)
        grad, degenerate = _safe_unit(d)
        return n - self.radius, grad, degenerate


@dataclass(frozen=True)
class Box(AnalyticSdf):
    """Axis-aligned box given by center and half extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def value_grad(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        p = pts - np.asarray(self.center, dtype=np.float64)[None, :]
        h = np.asarray(self.half_extents, dtype=np.float64)
        d = np.abs(p) - h[None, :]
        q = np.maximum(d, 0.0)
        qn = _norm_rows(q)
        inner = np.minimum(d.max(axis=1), 0.0)
        vals = qn + inner

        grad = np.zeros_like(p)
        outside = qn > 0.0
        grad[outside] = np.sign(p[outside]) * q[outside] / qn[outside, None]
        inside = ~outside
        if inside.any():
            ax = d[inside].argmax(axis=1)
            rows = np.nonzero(inside)[0]
            sgn = np.sign(p[rows, ax])
            sgn[sgn == 0.0] = 1.0
            grad[rows, ax] = sgn
        return vals, grad, np.zeros(len(pts), dtype=bool)


@dataclass(frozen=True)
class Capsule(AnalyticSdf):
    """Capsule around segment a-b with the given radius."""

    a: np.ndarray
    b: np.ndarray
    radius: float

    def value_grad(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        a = np.asarray(self.a, dtype=np.float64)
        ba = np.asarray(self.b, dtype=np.float64) - a
        pa = pts - a[None, :]
        denom = float(ba @ ba)
        if denom < _DEGENERATE_EPS:
            return Sphere(a, self.radius).value_grad(pts)
        h = np.clip(pa @ ba / denom, 0.0, 1.0)
        off = pa - h[:, None] * ba[None, :]
        n = _norm_rows(off)
        grad, degenerate = _safe_unit(off)
        return n - self.radius, grad, degenerate


@dataclass(frozen=True)
class HalfSpace(AnalyticSdf):
    """Half space: negative on the side opposite the (unit) normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        nn = np.linalg.norm(n)
        if nn < _DEGENERATE_EPS:
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n / nn)

    def value_grad(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        vals = pts @ self.normal - self.offset
        grad = np.broadcast_to(self.normal, pts.shape).copy()
        return vals, grad, np.zeros(len(pts), dtype=bool)


@dataclass(frozen=True)
class Union(AnalyticSdf):
    """Min-union; exact signed distance only where children are disjoint."""

    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("union needs at least one child")

    def value_grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        vals = np.empty((len(self.children), len(pts)))
        grads = np.empty((len(self.children), len(pts), 3))
        degs = np.empty((len(self.children), len(pts)), dtype=bool)
        for i, c in enumerate(self.children):
            vals[i], grads[i], degs[i] = c.value_grad(pts)
        k = vals.argmin(axis=0)
        cols = np.arange(len(pts))
        return vals[k, cols], grads[k, cols], degs[k, cols]


@dataclass(frozen=True)
class Transformed(AnalyticSdf):
    """Child field rigidly placed in the parent frame at `pose`."""

    pose: Pose
    child: AnalyticSdf

    def value_grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        local = self.pose.inverse().apply(pts)
        vals, grads, degs = self.child.value_grad(local)
        return vals, grads @ self.pose.rotation.matrix().T, degs


def lattice_corner_weights(origin, spacing, dims, pts, policy=OutsidePolicy.CLAMP):
    """Trilinear corner weights shared by SDF and albedo grids.

    Returns (idx (n, 8) int flat C-order corner indices, w (n, 8) weights,
    dw (n, 8, 3) d weight / d point, out_vec (n, 3) offset to the box for
    clamped queries -- zero inside). Under CLAMP the weights describe the
    interpolant at the clamped point; the caller adds the Euclidean tail.
    """
    origin = np.asarray(origin, dtype=np.float64)
    spacing = np.asarray(spacing, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))

    lo = origin
    hi = origin + (dims - 1) * spacing
    if policy == OutsidePolicy.CLAMP:
        p = np.clip(pts, lo, hi)
        out_vec = pts - p
    else:
        p = pts
        out_vec = np.zeros_like(pts)

    u = (p - lo) / spacing
    i0 = np.clip(np.floor(u).astype(np.int64), 0, dims - 2)
    f = u - i0

    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    wx = np.stack([1.0 - fx, fx], axis=1)
    wy = np.stack([1.0 - fy, fy], axis=1)
    wz = np.stack([1.0 - fz, fz], axis=1)
    dwx = np.stack([-np.ones_like(fx), np.ones_like(fx)], axis=1) / spacing[0]
    dwy = np.stack([-np.ones_like(fy), np.ones_like(fy)], axis=1) / spacing[1]
    dwz = np.stack([-np.ones_like(fz), np.ones_like(fz)], axis=1) / spacing[2]

    n = len(pts)
    idx = np.empty((n, 8), dtype=np.int64)
    w = np.empty((n, 8))
    dw = np.empty((n, 8, 3))
    ny, nz = int(dims[1]), int(dims[2])
    k = 0
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                idx[:, k] = ((i0[:, 0] + di) * ny + (i0[:, 1] + dj)) * nz + (
                    i0[:, 2] + dk
                )
                w[:, k] = wx[:, di] * wy[:, dj] * wz[:, dk]
                dw[:, k, 0] = dwx[:, di] * wy[:, dj] * wz[:, dk]
                dw[:, k, 1] = wx[:, di] * dwy[:, dj] * wz[:, dk]
                dw[:, k, 2] = wx[:, di] * wy[:, dj] * dwz[:, dk]
                k += 1
    return idx, w, dw, out_vec


@dataclass
class SdfGrid:
    """Axis-aligned voxel SDF with trilinear value and exact interpolant gradient.

    values is (nx, ny, nz) float32; the serialized layout is x-fastest.
    """

    origin: np.ndarray
    spacing: np.ndarray
    dims: tuple
    values: np.ndarray
    outside_policy: OutsidePolicy = OutsidePolicy.CLAMP

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.spacing = np.asarray(self.spacing, dtype=np.float64)
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or any(d < 2 for d in self.dims):
            raise ValueError(f"dims must be 3 ints >= 2, got {self.dims}")
        if np.any(self.spacing <= 0.0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        self.values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(
            self.dims
        )

    @property
    def bounds(self):
        lo = self.origin
        hi = self.origin + (np.array(self.dims) - 1) * self.spacing
        return lo, hi

    def copy(self):
        return SdfGrid(
            self.origin.copy(),
            self.spacing.copy(),
            self.dims,
            self.values.copy(),
            self.outside_policy,
        )

    def corner_weights(self, pts):
        return lattice_corner_weights(
            self.origin, self.spacing, self.dims, pts, self.outside_policy
        )

    def value_grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        idx, w, dw, out_vec = self.corner_weights(pts)
        flat = self.values.reshape(-1).astype(np.float64)
        corners = flat[idx]
        vals = np.einsum("nk,nk->n", corners, w)
        grads = np.einsum("nk,nkc->nc", corners, dw)
        if self.outside_policy == OutsidePolicy.CLAMP:
            d_out = _norm_rows(out_vec)
            outside = d_out > 0.0
            if outside.any():
                vals[outside] += d_out[outside]
                # clamped axes get the Euclidean tail direction instead
                grads[outside] *= out_vec[outside] == 0.0
                grads[outside] += out_vec[outside] / d_out[outside, None]
        return vals, grads, np.zeros(len(pts), dtype=bool)

    def values_at(self, pts):
        return self.value_grad(pts)[0]


def bake(f, origin, spacing, dims, outside_policy=OutsidePolicy.CLAMP):
    """Sample an SDF on a lattice: values[i,j,k] = f(origin + (i,j,k) * spacing)."""
    origin = np.asarray(origin, dtype=np.float64)
    spacing = np.asarray(spacing, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 2 for d in dims):
        raise ValueError(f"dims must be 3 ints >= 2, got {dims}")
    xs = origin[0] + spacing[0] * np.arange(dims[0])
    ys = origin[1] + spacing[1] * np.arange(dims[1])
    zs = origin[2] + spacing[2] * np.arange(dims[2])
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    vals = _field_values(f, pts).reshape(dims)
    return SdfGrid(origin, spacing, dims, vals.astype(np.float32), outside_policy)


def _field_values(f, pts):
    if isinstance(f, SdfGrid):
        return f.values_at(pts)
    return f.values(pts)


def query(f, x):
    """Point query of any SDF representation, returning an SdfSample."""
    pts = np.asarray(x, dtype=np.float64).reshape(1, 3)
    vals, grads, degs = f.value_grad(pts)
    return SdfSample(float(vals[0]), grads[0], bool(degs[0]))


def query_values(f, pts):
    """Batch query: (values (n,), gradients (n, 3))."""
    vals, grads, _ = f.value_grad(np.atleast_2d(pts))
    return vals, grads


def transform_query(f, pose, x_world):
    """Query a canonical field at world points through a rigid placement.

    value = f(pose^-1 x); gradients are rotated back into the world frame.
    """
    x = np.asarray(x_world, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    local = pose.inverse().apply(pts)
    vals, grads, degs = f.value_grad(local)
    grads = grads @ pose.rotation.matrix().T
    if single:
        return SdfSample(float(vals[0]), grads[0], bool(degs[0]))
    return vals, grads


def save_sdfg(grid, path):
    """Write the bit-exact binary grid format (magic SDFG, version 1)."""
    with open(path, "wb") as fh:
        fh.write(_SDFG_MAGIC)
        fh.write(struct.pack("<I", _SDFG_VERSION))
        fh.write(struct.pack("<3I", *grid.dims))
        fh.write(struct.pack("<3d", *grid.origin))
        fh.write(struct.pack("<3d", *grid.spacing))
        fh.write(struct.pack("<B", int(grid.outside_policy)))
        fh.write(grid.values.astype("<f4").tobytes(order="F"))


def load_sdfg(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SDFG_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected SDFG")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _SDFG_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        dims = struct.unpack("<3I", fh.read(12))
        origin = np.array(struct.unpack("<3d", fh.read(24)))
        spacing = np.array(struct.unpack("<3d", fh.read(24)))
        (policy,) = struct.unpack("<B", fh.read(1))
        count = dims[0] * dims[1] * dims[2]
        raw = fh.read(4 * count)
        if len(raw) != 4 * count:
            raise ValueError(f"{path}: truncated value payload")
        values = np.frombuffer(raw, dtype="<f4").reshape(dims, order="F")
    return SdfGrid(origin, spacing, dims, values.copy(), OutsidePolicy(policy))
