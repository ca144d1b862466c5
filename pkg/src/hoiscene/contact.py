"""Contact and collision losses, motion-gated labeling, and temporal filtering.

The physical losses are tanh-saturated penalties on the object's signed
distance at body contact points: an attraction term for points off the surface
and a repulsion term for points inside it. Both are C1, bounded, and have
closed-form derivatives, which the pose refinement chains through the skinning
warp. Frame labels come from object motion (objects move only when handled)
and are cleaned by a temporal filter before use.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .skeleton import lbs_forward

__all__ = [
    "PhysParams",
    "MotionGateThresholds",
    "WristFalloff",
    "ContactPointSet",
    "ContactTimeline",
    "contact_loss",
    "collision_loss",
    "physical_loss",
    "physical_loss_dxi",
    "body_prior_loss",
    "hand_sdf_loss",
    "motion_gate",
    "temporal_filter",
    "save_timeline",
    "load_timeline",
]

CONTACT = "Contact"
NO_CONTACT = "NoContact"


@dataclass
class PhysParams:
    """Scales of the physical losses and the temporal filter.

    Saturation knees default to 1 cm so the losses act at the same scale as
    the F1@2cm evaluation band.
    """

    alpha1: float = 1.0
    alpha2: float = 0.01
    beta1: float = 1.0
    beta2: float = 0.01
    gamma1: float = 1.0
    gamma2: float = 0.01
    sigma_win: int = 7
    margin: int = 10
    min_span: int = 5

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class MotionGateThresholds:
    delta_t: float = 0.005  # m per frame
    delta_r: float = math.radians(0.5)  # rad per frame


@dataclass
class WristFalloff:
    """Linear 0 -> 1 supervision ramp along the forearm axis toward the hand."""

    center: np.ndarray
    axis: np.ndarray  # unit vector pointing from forearm into the hand
    width: float = 0.04

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        axis = np.asarray(self.axis, dtype=np.float64)
        self.axis = axis / np.linalg.norm(axis)
        if self.width <= 0:
            raise ValueError("falloff width must be positive")

    def weights(self, pts):
        s = (np.atleast_2d(pts) - self.center) @ self.axis
        return np.clip(s / self.width + 0.5, 0.0, 1.0)


@dataclass
class ContactPointSet:
    """Canonical-frame contact points on the human surface with vertex ids."""

    points: np.ndarray  # (n, 3) canonical
    vertex_ids: np.ndarray  # (n,) int

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64)
        if len(self.points) != len(self.vertex_ids):
            raise ValueError("points and vertex ids must pair up")

    def __len__(self):
        return len(self.points)

    def world_positions(self, skel, pose):
        return lbs_forward(skel, pose, self.points)

    def check_on_surface(self, canonical_sdf, tol_factor=2.0):
        xi = canonical_sdf.values_at(self.points)
        tol = tol_factor * float(np.max(canonical_sdf.spacing))
        return bool(np.all(np.abs(xi) < tol))


@dataclass
class ContactTimeline:
    """Per-frame contact labels and per-vertex contact probabilities."""

    frames: list  # sorted frame indices
    labels: np.ndarray  # (n_frames,) bool, True = Contact
    vertex_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    vertex_probs: np.ndarray | None = None  # (n_frames, n_verts) in [0, 1]
    filtered: bool = False

    def __post_init__(self):
        self.frames = [int(f) for f in self.frames]
        self.labels = np.asarray(self.labels, dtype=bool)
        self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64)
        if self.vertex_probs is None:
            self.vertex_probs = np.zeros((len(self.frames), len(self.vertex_ids)))
        self.vertex_probs = np.asarray(self.vertex_probs, dtype=np.float64)
        if len(self.labels) != len(self.frames):
            raise ValueError("one label per frame required")
        if self.vertex_probs.shape != (len(self.frames), len(self.vertex_ids)):
            raise ValueError("vertex_probs must be (n_frames, n_verts)")
        if not np.isfinite(self.vertex_probs).all():
            raise ValueError("vertex probabilities must be finite")

    def label_at(self, frame):
        return bool(self.labels[self.frames.index(frame)])

    def contact_frames(self):
        return [f for f, l in zip(self.frames, self.labels) if l]

    def copy(self):
        return ContactTimeline(
            list(self.frames),
            self.labels.copy(),
            self.vertex_ids.copy(),
            self.vertex_probs.copy(),
            self.filtered,
        )


def _tanh_sq(xi, scale_out, scale_in):
    t = np.tanh(np.asarray(xi, dtype=np.float64) / scale_in)
    return scale_out * t * t


def _tanh_sq_dxi(xi, scale_out, scale_in):
    t = np.tanh(np.asarray(xi, dtype=np.float64) / scale_in)
    return 2.0 * scale_out / scale_in * t * (1.0 - t * t)


def contact_loss(xi, params):
    """Attraction alpha1 tanh(xi/alpha2)^2; defined for xi >= 0."""
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(xi < 0):
        raise ValueError("contact loss applies to non-negative distances only")
    return _tanh_sq(xi, params.alpha1, params.alpha2)


def contact_loss_dxi(xi, params):
    return _tanh_sq_dxi(xi, params.alpha1, params.alpha2)


def collision_loss(xi, params):
    """Repulsion beta1 tanh(xi/beta2)^2; defined for xi < 0."""
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(xi >= 0):
        raise ValueError("collision loss applies to negative distances only")
    return _tanh_sq(xi, params.beta1, params.beta2)


def collision_loss_dxi(xi, params):
    return _tanh_sq_dxi(xi, params.beta1, params.beta2)


def physical_loss(xi, params, w_contact=1.0, w_collision=1.0):
    """Branchwise combination used by the optimizer; elementwise values."""
    xi = np.asarray(xi, dtype=np.float64)
    return np.where(
        xi >= 0,
        w_contact * _tanh_sq(xi, params.alpha1, params.alpha2),
        w_collision * _tanh_sq(xi, params.beta1, params.beta2),
    )


def physical_loss_dxi(xi, params, w_contact=1.0, w_collision=1.0):
    xi = np.asarray(xi, dtype=np.float64)
    return np.where(
        xi >= 0,
        w_contact * _tanh_sq_dxi(xi, params.alpha1, params.alpha2),
        w_collision * _tanh_sq_dxi(xi, params.beta1, params.beta2),
    )


def body_prior_loss(skel, human_sdf, samples, params):
    """Penalize positive canonical distances at interior body samples.

    samples must lie inside the canonical capsule proxy; returns the mean of
    gamma1 tanh(xi/gamma2)^2 over all samples, zero where xi < 0.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if len(samples) == 0:
        warnings.warn("body prior: empty sample set, loss is 0", stacklevel=2)
        return 0.0
    proxy_vals = skel.capsule_proxy.values(samples)
    if np.any(proxy_vals > 0):
        raise ValueError("body prior samples must lie inside the capsule proxy")
    xi = human_sdf.values_at(samples)
    terms = np.where(xi >= 0, _tanh_sq(xi, params.gamma1, params.gamma2), 0.0)
    return float(terms.mean())


def hand_sdf_loss(human_sdf, proxy, samples, falloff):
    """L1 mismatch to the proxy distance in the hand region, wrist-attenuated."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if len(samples) == 0:
        warnings.warn("hand loss: empty sample set, loss is 0", stacklevel=2)
        return 0.0
    w = falloff.weights(samples)
    xi = human_sdf.values_at(samples)
    xi_ref = proxy.values(samples)
    return float(np.mean(w * np.abs(xi - xi_ref)))


def motion_gate(p_obj, thresholds=None):
    """Label frames with inter-frame object motion as contact frames.

    Frame i is Contact iff the relative pose P_i^-1 P_{i+1} exceeds either
    threshold; the last frame copies its predecessor.
    """
    thresholds = thresholds or MotionGateThresholds()
    poses = p_obj.poses()
    if len(poses) < 2:
        raise ValueError("motion gating needs at least 2 frames")
    labels = np.zeros(len(poses), dtype=bool)
    for i in range(len(poses) - 1):
        rel = poses[i].inverse() @ poses[i + 1]
        moved = (
            np.linalg.norm(rel.translation) > thresholds.delta_t
            or rel.rotation.angle() > thresholds.delta_r
        )
        labels[i] = moved
    labels[-1] = labels[-2]
    return ContactTimeline(p_obj.indices(), labels)


def _runs(labels):
    """Maximal constant runs as (start, end_exclusive, value)."""
    out = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            out.append((start, i, bool(labels[start])))
            start = i
    return out


def _flip_short_runs(labels, min_span):
    labels = labels.copy()
    while True:
        runs = _runs(labels)
        if len(runs) <= 1:
            return labels
        short = [(e - s, k) for k, (s, e, _) in enumerate(runs) if e - s < min_span]
        if not short:
            return labels
        _, k = min(short)
        s, e, v = runs[k]
        labels[s:e] = not v


def _dilate_runs(labels, margin):
    out = labels.copy()
    for s, e, v in _runs(labels):
        if v:
            out[max(0, s - margin) : min(len(labels), e + margin)] = True
    return out


def _box_filter(probs, window):
    if probs.size == 0 or window <= 1:
        return probs.copy()
    half = window // 2
    n = len(probs)
    out = np.empty_like(probs)
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        out[i] = probs[lo:hi].mean(axis=0)
    return out


def temporal_filter(timeline, params=None):
    """Clean a raw contact timeline; a second application is the identity.

    Labels: (1) flip maximal runs shorter than min_span to the surrounding
    label, (2) dilate every contact run by `margin` frames to cover the
    grasp-but-stationary phase. Per-vertex probabilities: box-filter over a
    sigma_win window, then threshold at 0.5. The output is marked filtered;
    margin dilation grows regions on every pass, so idempotence holds by
    treating already-filtered timelines as fixed points.
    """
    params = params or PhysParams()
    if timeline.filtered:
        return timeline.copy()
    labels = _flip_short_runs(timeline.labels, params.min_span)
    labels = _dilate_runs(labels, params.margin)
    probs = _box_filter(timeline.vertex_probs, params.sigma_win)
    probs = (probs >= 0.5).astype(np.float64)
    return ContactTimeline(
        list(timeline.frames), labels, timeline.vertex_ids.copy(), probs, filtered=True
    )


def save_timeline(timeline, path):
    doc = {
        "filtered": timeline.filtered,
        "vertex_ids": [int(v) for v in timeline.vertex_ids],
        "frames": [
            {
                "i": f,
                "label": CONTACT if timeline.labels[k] else NO_CONTACT,
                "verts": [
                    {"id": int(v), "p": float(timeline.vertex_probs[k, j])}
                    for j, v in enumerate(timeline.vertex_ids)
                ],
            }
            for k, f in enumerate(timeline.frames)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_timeline(path):
    with open(path) as fh:
        doc = json.load(fh)
    frames = [f["i"] for f in doc["frames"]]
    labels = np.array([f["label"] == CONTACT for f in doc["frames"]])
    vertex_ids = np.array(doc.get("vertex_ids", []), dtype=np.int64)
    probs = np.zeros((len(frames), len(vertex_ids)))
    id_to_col = {int(v): j for j, v in enumerate(vertex_ids)}
    for k, f in enumerate(doc["frames"]):
        for entry in f.get("verts", []):
            probs[k, id_to_col[int(entry["id"])]] = entry["p"]
    return ContactTimeline(frames, labels, vertex_ids, probs, doc.get("filtered", False))
