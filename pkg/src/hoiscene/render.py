"""Compositional volume rendering of human, object, and scene along camera rays.

Each component contributes stratified samples over the ray's intersection with
its world-space bounding box; the merged, depth-sorted list is alpha-composited
front to back. Signed distances turn into density through a Laplace CDF with
sharpness beta, so one parameter controls how tightly rendering hugs the zero
level set. Human samples are warped to canonical space by inverse skinning,
object samples by the inverse of the per-frame rigid pose.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose
from .sdf import OutsidePolicy, SdfGrid, lattice_corner_weights
from .skeleton import blended_rotation, bone_transforms, lbs_inverse_batch

__all__ = [
    "HUMAN",
    "OBJECT",
    "SCENE",
    "COMPONENT_NAMES",
    "UnsortedSamples",
    "Camera",
    "AlbedoGrid",
    "HumanComponent",
    "ObjectComponent",
    "SceneComponent",
    "ComponentSet",
    "RenderConfig",
    "RenderBuffers",
    "sample_ray",
    "sdf_to_density",
    "density_dxi",
    "composite",
    "render_image",
    "render_rays",
    "save_ppm",
    "load_ppm",
    "save_pfm",
    "load_pfm",
    "mask_to_rgb",
]

HUMAN, OBJECT, SCENE = 0, 1, 2
COMPONENT_NAMES = {HUMAN: "human", OBJECT: "object", SCENE: "scene"}

_OUTSIDE_XI = 1e3
_ALPHA_MAX = 1.0 - 1e-7


class UnsortedSamples(ValueError):
    """Composite input must be sorted ascending by ray depth."""


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; pose maps camera coordinates to the world."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @classmethod
    def look_at(cls, eye, target, up, fx, fy, cx, cy, width, height):
        eye = np.asarray(eye, dtype=np.float64)
        z = np.asarray(target, dtype=np.float64) - eye
        z = z / np.linalg.norm(z)
        x = np.cross(z, np.asarray(up, dtype=np.float64))
        x = x / np.linalg.norm(x)
        y = np.cross(z, x)
        from .geometry import Rot3

        R = np.stack([x, y, z], axis=1)
        return cls(fx, fy, cx, cy, width, height, Pose(Rot3.from_matrix(R), eye))

    def rays(self, pixel_idx=None):
        """World-space (origins, unit directions) for pixel centers.

        pixel_idx indexes row-major flattened pixels; None means all.
        """
        if pixel_idx is None:
            pixel_idx = np.arange(self.width * self.height)
        pixel_idx = np.asarray(pixel_idx)
        r = pixel_idx // self.width
        c = pixel_idx % self.width
        u = (c + 0.5 - self.cx) / self.fx
        v = (r + 0.5 - self.cy) / self.fy
        d = np.stack([u, v, np.ones_like(u)], axis=1)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        dirs = d @ self.pose.rotation.matrix().T
        origins = np.broadcast_to(self.pose.translation, dirs.shape).copy()
        return origins, dirs

    def project(self, pts_world):
        """Project world points: (u, v, depth) with depth in camera z."""
        local = self.pose.inverse().apply(np.atleast_2d(pts_world))
        z = local[:, 2]
        u = self.fx * local[:, 0] / z + self.cx
        v = self.fy * local[:, 1] / z + self.cy
        return u, v, z


@dataclass
class AlbedoGrid:
    """Voxel RGB field sampled with trilinear interpolation (clamped outside)."""

    origin: np.ndarray
    spacing: np.ndarray
    dims: tuple
    values: np.ndarray  # (nx, ny, nz, 3) float32 in [0, 1]

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.spacing = np.asarray(self.spacing, dtype=np.float64)
        self.dims = tuple(int(d) for d in self.dims)
        self.values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(
            self.dims + (3,)
        )

    @classmethod
    def constant(cls, origin, spacing, dims, rgb):
        vals = np.broadcast_to(
            np.asarray(rgb, dtype=np.float32), tuple(dims) + (3,)
        ).copy()
        return cls(origin, spacing, dims, vals)

    @classmethod
    def from_function(cls, fn, origin, spacing, dims):
        origin = np.asarray(origin, dtype=np.float64)
        spacing = np.asarray(spacing, dtype=np.float64)
        axes = [origin[a] + spacing[a] * np.arange(dims[a]) for a in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        vals = np.clip(fn(pts), 0.0, 1.0).reshape(tuple(dims) + (3,))
        return cls(origin, spacing, dims, vals.astype(np.float32))

    def copy(self):
        return AlbedoGrid(self.origin.copy(), self.spacing.copy(), self.dims, self.values.copy())

    def corner_weights(self, pts):
        return lattice_corner_weights(
            self.origin, self.spacing, self.dims, pts, OutsidePolicy.CLAMP
        )

    def sample(self, pts):
        idx, w, _, _ = self.corner_weights(pts)
        flat = self.values.reshape(-1, 3).astype(np.float64)
        return np.einsum("nkc,nk->nc", flat[idx], w)


@dataclass
class HumanComponent:
    skeleton: object
    poses: dict  # frame -> BodyPose
    albedo: AlbedoGrid

    def bbox(self, frame):
        pose = self.poses[frame]
        transforms = bone_transforms(self.skeleton, pose)
        pts = []
        r = 0.0
        for t, bone in zip(transforms, self.skeleton.bones):
            pts.append(t.apply(np.asarray(bone.capsule.a, dtype=np.float64)))
            pts.append(t.apply(np.asarray(bone.capsule.b, dtype=np.float64)))
            r = max(r, bone.capsule.radius)
        pts = np.array(pts)
        pad = r + 2.0 * self.skeleton.sigma_skin
        return pts.min(axis=0) - pad, pts.max(axis=0) + pad


@dataclass
class ObjectComponent:
    sdf: SdfGrid
    motion: object  # ObjectMotion
    albedo: AlbedoGrid

    def bbox(self, frame):
        lo, hi = self.sdf.bounds
        corners = np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
        )
        world = self.motion.pose_at(frame).apply(corners)
        return world.min(axis=0), world.max(axis=0)


@dataclass
class SceneComponent:
    sdf: SdfGrid
    albedo: AlbedoGrid

    def bbox(self, frame):
        return self.sdf.bounds


@dataclass
class ComponentSet:
    human: HumanComponent | None = None
    object: ObjectComponent | None = None
    scene: SceneComponent | None = None

    def active(self):
        out = []
        if self.human is not None:
            out.append((HUMAN, self.human))
        if self.object is not None:
            out.append((OBJECT, self.object))
        if self.scene is not None:
            out.append((SCENE, self.scene))
        return out

    def component_grid(self, comp_id):
        comp = {HUMAN: self.human, OBJECT: self.object, SCENE: self.scene}[comp_id]
        if comp_id == HUMAN:
            return comp.skeleton.canonical_sdf
        return comp.sdf


@dataclass
class RenderConfig:
    n_per_component: int = 64
    beta: float | None = None  # None: per component, 2x mean grid spacing
    far_delta: float = 0.1
    background: tuple = (0.0, 0.0, 0.0)
    seed: int = 0
    threads: int = 1

    def component_beta(self, grid):
        if self.beta is not None:
            return float(self.beta)
        return 2.0 * float(np.mean(grid.spacing))


@dataclass
class RenderBuffers:
    color: np.ndarray  # (H, W, 3) in [0, 1]
    depth: np.ndarray  # (H, W), +inf for miss
    normal: np.ndarray  # (H, W, 3), tau-weighted world normals
    mask: np.ndarray  # (H, W) int, component id or -1
    acc: np.ndarray  # (H, W) opacity in [0, 1]


def sdf_to_density(xi, beta):
    """Laplace-CDF density: sigma(xi) = Psi_beta(-xi) / beta.

    Monotone decreasing in xi with sigma(0) = 1/(2 beta); approaches 1/beta
    deep inside and 0 far outside.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    xi = np.asarray(xi, dtype=np.float64)
    e = np.exp(-np.minimum(np.abs(xi) / beta, 700.0))
    return np.where(xi >= 0.0, 0.5 / beta * e, (1.0 - 0.5 * e) / beta)


def density_dxi(xi, beta):
    """d sigma / d xi for the Laplace-CDF density (continuous at 0)."""
    xi = np.asarray(xi, dtype=np.float64)
    e = np.exp(-np.minimum(np.abs(xi) / beta, 700.0))
    return -0.5 / (beta * beta) * e


def ray_box_intersect(origins, dirs, lo, hi, t_min=1e-6):
    """Slab test. Returns (t0, t1, hit) with t0 >= t_min."""
    d = np.where(np.abs(dirs) < 1e-12, 1e-12, dirs)
    ta = (lo[None, :] - origins) / d
    tb = (hi[None, :] - origins) / d
    t0 = np.minimum(ta, tb).max(axis=1)
    t1 = np.maximum(ta, tb).min(axis=1)
    t0 = np.maximum(t0, t_min)
    hit = t1 > t0
    return t0, t1, hit


def sample_ray(boxes, origin, direction, n, rng=None, jitter=None):
    """Stratified per-component samples along one ray, merged and sorted.

    boxes: list of (lo, hi, component_id). Returns (t (m,), comp (m,)) sorted
    ascending; components whose box the ray misses contribute nothing.
    """
    if n < 2:
        raise ValueError("need at least 2 samples per component")
    origin = np.asarray(origin, dtype=np.float64)[None, :]
    direction = np.asarray(direction, dtype=np.float64)[None, :]
    ts, comps = [], []
    for k, (lo, hi, comp_id) in enumerate(boxes):
        t0, t1, hit = ray_box_intersect(origin, direction, np.asarray(lo), np.asarray(hi))
        if not hit[0]:
            continue
        if jitter is not None:
            u = np.asarray(jitter[k])
        elif rng is not None:
            u = rng.random(n)
        else:
            u = np.full(n, 0.5)
        t = t0[0] + (np.arange(n) + u) * (t1[0] - t0[0]) / n
        ts.append(t)
        comps.append(np.full(n, comp_id, dtype=np.int64))
    if not ts:
        return np.empty(0), np.empty(0, dtype=np.int64)
    t = np.concatenate(ts)
    comp = np.concatenate(comps)
    order = np.argsort(t, kind="stable")
    return t[order], comp[order]


def _compose_batch(t, sigma, far_delta):
    """Alpha compositing over sorted samples; +inf entries are padding.

    Returns (alpha, trans, tau, delta, t_safe).
    """
    n, m = t.shape
    if m == 0:
        z = np.zeros((n, 0))
        return z, z, z, z, z
    with np.errstate(invalid="ignore"):
        gaps = np.diff(t, axis=1)
    gaps = np.where(np.isfinite(gaps), gaps, far_delta)
    delta = np.concatenate([gaps, np.full((n, 1), far_delta)], axis=1)
    alpha = -np.expm1(-sigma * delta)
    alpha = np.clip(alpha, 0.0, _ALPHA_MAX)
    trans = np.cumprod(1.0 - alpha, axis=1)
    trans = np.concatenate([np.ones((n, 1)), trans[:, :-1]], axis=1)
    tau = alpha * trans
    t_safe = np.where(np.isfinite(t), t, 0.0)
    return alpha, trans, tau, delta, t_safe


def composite(t, comp_ids, densities, colors, normals=None, far_delta=0.1,
              background=(0.0, 0.0, 0.0), n_components=3):
    """Front-to-back compositing of one sorted sample list.

    alpha_i = 1 - exp(-sigma_i * delta_i) with delta the gap to the next
    sample (the last gap is far_delta); tau_i = alpha_i prod_{j<i}(1-alpha_j).
    Returns (color, depth, normal, acc, per-component tau sums).
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 1:
        raise ValueError("composite expects a single ray")
    if np.any(np.diff(t) < 0):
        raise UnsortedSamples("samples must be sorted ascending by depth")
    comp_ids = np.asarray(comp_ids, dtype=np.int64)
    densities = np.asarray(densities, dtype=np.float64)
    colors = np.atleast_2d(np.asarray(colors, dtype=np.float64))
    if normals is None:
        normals = np.zeros_like(colors)
    normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))

    _, _, tau, _, t_safe = _compose_batch(t[None, :], densities[None, :], far_delta)
    tau = tau[0]
    acc = float(tau.sum())
    bg = np.asarray(background, dtype=np.float64)
    color = tau @ colors + (1.0 - acc) * bg
    normal = tau @ normals
    depth = float(tau @ t_safe[0] / acc) if acc > 1e-6 else math.inf
    weights = np.zeros(n_components)
    np.add.at(weights, comp_ids, tau)
    return color, depth, normal, acc, weights


def stratified_jitter(seed, frame, n_rays, n_components, n_samples):
    """Counter-based per-(seed, frame) jitter; pixel rows index into it, so
    any partitioning over rays reproduces the serial result bit-exactly."""
    bits = np.random.Philox(key=np.array([seed, frame], dtype=np.uint64))
    gen = np.random.Generator(bits)
    return gen.random((n_rays, n_components, n_samples))


@dataclass
class ComponentSamples:
    """Per-component sample arrays for a ray batch (rays x samples)."""

    comp_id: int
    beta: float
    hit: np.ndarray  # (N,) ray hit mask
    t: np.ndarray  # (N, S), +inf where the ray missed the box
    xi: np.ndarray  # (N, S)
    sigma: np.ndarray  # (N, S)
    color: np.ndarray  # (N, S, 3)
    normal: np.ndarray  # (N, S, 3) unit world normals
    canonical: np.ndarray  # (N, S, 3) canonical-space points
    world: np.ndarray  # (N, S, 3)
    grad_canonical: np.ndarray  # (N, S, 3)
    resolved: np.ndarray  # (N, S) inverse-warp success (human), else hit
    extras: dict = field(default_factory=dict)


def _normalize_rows(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.maximum(n, 1e-12)


def gather_component_samples(comp_id, comp, grid, frame, origins, dirs, cfg, jitter):
    """Sample one component along a ray batch and evaluate its fields."""
    n_rays = len(origins)
    S = cfg.n_per_component
    beta = cfg.component_beta(grid)
    lo, hi = comp.bbox(frame)
    t0, t1, hit = ray_box_intersect(origins, dirs, lo, hi)

    t = np.full((n_rays, S), np.inf)
    xi = np.full((n_rays, S), _OUTSIDE_XI)
    color = np.zeros((n_rays, S, 3))
    normal = np.zeros((n_rays, S, 3))
    canonical = np.zeros((n_rays, S, 3))
    world = np.zeros((n_rays, S, 3))
    grad_c = np.zeros((n_rays, S, 3))
    resolved = np.zeros((n_rays, S), dtype=bool)

    idx = np.nonzero(hit)[0]
    if len(idx):
        span = (t1[idx] - t0[idx]) / S
        tt = t0[idx, None] + (np.arange(S)[None, :] + jitter[idx]) * span[:, None]
        t[idx] = tt
        pts = origins[idx, None, :] + tt[:, :, None] * dirs[idx, None, :]
        flat = pts.reshape(-1, 3)

        if comp_id == HUMAN:
            pose = comp.poses[frame]
            canon, ok = lbs_inverse_batch(comp.skeleton, pose, flat)
            vals, grads, _ = grid.value_grad(canon)
            vals = np.where(ok, vals, _OUTSIDE_XI)
            R_blend = blended_rotation(comp.skeleton, pose, canon)
            gw = np.einsum("nij,nj->ni", R_blend, grads)
            cols = comp.albedo.sample(canon)
            res = ok
        elif comp_id == OBJECT:
            pose = comp.motion.pose_at(frame)
            canon = pose.inverse().apply(flat)
            vals, grads, _ = grid.value_grad(canon)
            gw = grads @ pose.rotation.matrix().T
            cols = comp.albedo.sample(canon)
            res = np.ones(len(flat), dtype=bool)
        else:
            canon = flat
            vals, grads, _ = grid.value_grad(canon)
            gw = grads
            cols = comp.albedo.sample(canon)
            res = np.ones(len(flat), dtype=bool)

        xi[idx] = vals.reshape(-1, S)
        color[idx] = cols.reshape(-1, S, 3)
        normal[idx] = _normalize_rows(gw).reshape(-1, S, 3)
        canonical[idx] = canon.reshape(-1, S, 3)
        world[idx] = pts
        grad_c[idx] = grads.reshape(-1, S, 3)
        resolved[idx] = res.reshape(-1, S)

    sigma = np.where(np.isfinite(t), sdf_to_density(xi, beta), 0.0)
    return ComponentSamples(
        comp_id, beta, hit, t, xi, sigma, color, normal, canonical, world, grad_c, resolved
    )


@dataclass
class MergedRays:
    """Depth-sorted union of all component samples for a ray batch."""

    order: np.ndarray  # (N, M) permutation into the concatenated sample axis
    comp_of_col: np.ndarray  # (M,) source component per concatenated column
    t: np.ndarray
    sigma: np.ndarray
    color: np.ndarray
    normal: np.ndarray
    alpha: np.ndarray
    trans: np.ndarray
    tau: np.ndarray
    delta: np.ndarray
    t_safe: np.ndarray
    comp: np.ndarray  # (N, M) component id per sorted sample


def merge_samples(parts, far_delta):
    t = np.concatenate([p.t for p in parts], axis=1)
    sigma = np.concatenate([p.sigma for p in parts], axis=1)
    color = np.concatenate([p.color for p in parts], axis=1)
    normal = np.concatenate([p.normal for p in parts], axis=1)
    comp_of_col = np.concatenate(
        [np.full(p.t.shape[1], p.comp_id, dtype=np.int64) for p in parts]
    )
    order = np.argsort(t, axis=1, kind="stable")
    rows = np.arange(t.shape[0])[:, None]
    t = t[rows, order]
    sigma = sigma[rows, order]
    color = color[rows, order]
    normal = normal[rows, order]
    comp = comp_of_col[order]
    alpha, trans, tau, delta, t_safe = _compose_batch(t, sigma, far_delta)
    return MergedRays(
        order, comp_of_col, t, sigma, color, normal, alpha, trans, tau, delta, t_safe, comp
    )


def merged_outputs(m, background, n_components=3):
    """Per-ray composite outputs from merged samples."""
    bg = np.asarray(background, dtype=np.float64)
    tau = m.tau
    acc = tau.sum(axis=1)
    color = np.einsum("nm,nmc->nc", tau, m.color) + (1.0 - acc[:, None]) * bg
    normal = np.einsum("nm,nmc->nc", tau, m.normal)
    depth = np.where(acc > 1e-6, np.einsum("nm,nm->n", tau, m.t_safe) / np.maximum(acc, 1e-12), np.inf)
    weights = np.zeros((len(acc), n_components))
    for cid in range(n_components):
        sel = m.comp == cid
        weights[:, cid] = np.where(sel, tau, 0.0).sum(axis=1)
    mask = np.where(acc > 0.5, weights.argmax(axis=1), -1)
    return color, depth, normal, acc, weights, mask


def render_rays(components, camera, frame, cfg, pixel_idx=None, return_parts=False):
    """Render a subset of pixels; returns per-ray arrays (and sample batches)."""
    origins, dirs = camera.rays(pixel_idx)
    n_total = camera.width * camera.height
    jitter_all = stratified_jitter(cfg.seed, frame, n_total, 3, cfg.n_per_component)
    if pixel_idx is None:
        jitter = jitter_all
    else:
        jitter = jitter_all[np.asarray(pixel_idx)]

    parts = []
    for comp_id, comp in components.active():
        grid = components.component_grid(comp_id)
        parts.append(
            gather_component_samples(
                comp_id, comp, grid, frame, origins, dirs, cfg, jitter[:, comp_id, :]
            )
        )
    if parts:
        merged = merge_samples(parts, cfg.far_delta)
        out = merged_outputs(merged, cfg.background)
    else:
        n = len(origins)
        merged = None
        out = (
            np.tile(np.asarray(cfg.background, dtype=np.float64), (n, 1)),
            np.full(n, np.inf),
            np.zeros((n, 3)),
            np.zeros(n),
            np.zeros((n, 3)),
            np.full(n, -1, dtype=np.int64),
        )
    if return_parts:
        return out, parts, merged
    return out


def render_image(components, camera, frame, cfg=None):
    """Full-frame render into RenderBuffers; deterministic for a fixed seed."""
    cfg = cfg or RenderConfig()
    H, W = camera.height, camera.width
    n = H * W

    def run(chunk_idx):
        return render_rays(components, camera, frame, cfg, chunk_idx)

    color = np.empty((n, 3))
    depth = np.empty(n)
    normal = np.empty((n, 3))
    acc = np.empty(n)
    mask = np.empty(n, dtype=np.int64)

    chunks = [np.arange(n)]
    if cfg.threads > 1:
        bounds = np.linspace(0, n, cfg.threads + 1, dtype=int)
        chunks = [np.arange(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    if len(chunks) == 1:
        results = [run(chunks[0])]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, chunks))

    for idx, (c, d, nr, a, _, mk) in zip(chunks, results):
        color[idx] = c
        depth[idx] = d
        normal[idx] = nr
        acc[idx] = a
        mask[idx] = mk

    return RenderBuffers(
        color=np.clip(color, 0.0, 1.0).reshape(H, W, 3),
        depth=depth.reshape(H, W),
        normal=normal.reshape(H, W, 3),
        mask=mask.reshape(H, W),
        acc=acc.reshape(H, W),
    )


def save_ppm(path, image):
    """8-bit binary PPM (P6) from a (H, W, 3) float image in [0, 1]."""
    img = np.clip(np.asarray(image), 0.0, 1.0)
    data = (img * 255.0 + 0.5).astype(np.uint8)
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(data.tobytes())


def load_ppm(path):
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"P6":
            raise ValueError(f"{path}: not a binary PPM")
        line = fh.readline()
        while line.startswith(b"#"):
            line = fh.readline()
        w, h = (int(v) for v in line.split())
        maxval = int(fh.readline())
        data = np.frombuffer(fh.read(w * h * 3), dtype=np.uint8)
    return data.reshape(h, w, 3).astype(np.float64) / maxval


def save_pfm(path, data):
    """Little-endian PFM; grayscale (H, W) writes Pf, color (H, W, 3) writes PF.

    Rows are stored bottom-to-top per the format convention.
    """
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3), got {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")  # negative scale marks little-endian
        fh.write(np.flipud(data).astype("<f4").tobytes())


def load_pfm(path):
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header not in (b"Pf", b"PF"):
            raise ValueError(f"{path}: not a PFM file")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        count = w * h * (3 if header == b"PF" else 1)
        data = np.frombuffer(fh.read(count * 4), dtype="<f4" if scale < 0 else ">f4")
    shape = (h, w, 3) if header == b"PF" else (h, w)
    return np.flipud(data.reshape(shape)).copy()


_MASK_PALETTE = {
    -1: (0.0, 0.0, 0.0),
    HUMAN: (0.9, 0.4, 0.3),
    OBJECT: (0.3, 0.6, 0.9),
    SCENE: (0.5, 0.8, 0.4),
}


def mask_to_rgb(mask):
    out = np.zeros(mask.shape + (3,))
    for key, rgb in _MASK_PALETTE.items():
        out[mask == key] = rgb
    return out
