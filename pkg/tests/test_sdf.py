import numpy as np
import pytest

from hoiscene.geometry import Pose, Rot3, random_pose
from hoiscene.sdf import (
    Box,
    Capsule,
    HalfSpace,
    OutsidePolicy,
    SdfGrid,
    Sphere,
    Transformed,
    Union,
    bake,
    load_sdfg,
    query,
    query_values,
    save_sdfg,
    transform_query,
)

UNIT_SPHERE = Sphere(np.zeros(3), 1.0)


def test_sphere_center_is_degenerate():
    s = query(UNIT_SPHERE, np.zeros(3))
    assert s.value == pytest.approx(-1.0)
    assert s.degenerate
    np.testing.assert_allclose(s.gradient, 0.0)


def test_sphere_outside_value_and_gradient():
    s = query(UNIT_SPHERE, np.array([2.0, 0.0, 0.0]))
    assert s.value == pytest.approx(1.0)
    np.testing.assert_allclose(s.gradient, [1.0, 0.0, 0.0], atol=1e-12)
    assert not s.degenerate


@pytest.mark.parametrize(
    "shape",
    [
        UNIT_SPHERE,
        Box(np.array([0.1, -0.2, 0.0]), np.array([0.5, 0.4, 0.3])),
        Capsule(np.array([-0.3, 0.0, 0.0]), np.array([0.3, 0.1, 0.2]), 0.25),
        HalfSpace(np.array([0.0, 0.0, 2.0]), 0.1),
    ],
)
def test_primitive_gradients_are_unit_off_medial_axis(shape):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2.0, 2.0, size=(500, 3))
    vals, grads, deg = shape.value_grad(pts)
    keep = (~deg) & (np.abs(vals) > 0.05)
    norms = np.linalg.norm(grads[keep], axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)


def test_primitive_gradient_matches_finite_differences():
    shapes = [
        UNIT_SPHERE,
        Box(np.zeros(3), np.array([0.5, 0.4, 0.3])),
        Capsule(np.array([-0.3, 0.0, 0.0]), np.array([0.3, 0.0, 0.0]), 0.25),
    ]
    rng = np.random.default_rng(6)
    h = 1e-6
    for shape in shapes:
        pts = rng.uniform(-1.5, 1.5, size=(200, 3))
        vals, grads, deg = shape.value_grad(pts)
        keep = (~deg) & (np.abs(vals) > 0.02)
        fd = np.zeros_like(grads)
        for ax in range(3):
            e = np.zeros(3)
            e[ax] = h
            fd[:, ax] = (shape.values(pts + e) - shape.values(pts - e)) / (2 * h)
        np.testing.assert_allclose(grads[keep], fd[keep], atol=1e-5)


def test_union_is_min_of_children():
    u = Union((Sphere(np.array([-1.0, 0, 0]), 0.3), Sphere(np.array([1.0, 0, 0]), 0.3)))
    rng = np.random.default_rng(8)
    pts = rng.uniform(-2, 2, size=(300, 3))
    vals = u.values(pts)
    child_vals = np.minimum(u.children[0].values(pts), u.children[1].values(pts))
    np.testing.assert_allclose(vals, child_vals, atol=1e-9)


def test_bake_reproduces_lattice_exactly():
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8, -0.8, -0.8], [0.05, 0.05, 0.05], (33, 33, 33))
    xs = -0.8 + 0.05 * np.arange(33)
    gx, gy, gz = np.meshgrid(xs, xs, xs, indexing="ij")
    pts = np.stack([gx, gy, gz], -1).reshape(-1, 3)
    analytic = UNIT_SPHERE.values(pts) + 0.5  # radius 0.5 sphere
    grid_vals = grid.values_at(pts)
    np.testing.assert_allclose(grid_vals, analytic.astype(np.float32), atol=1e-6)


def test_bake_error_bounded_at_cell_centers():
    spacing = 0.05
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8] * 3, [spacing] * 3, (33, 33, 33))
    rng = np.random.default_rng(9)
    centers = -0.8 + spacing * (rng.integers(0, 32, size=(500, 3)) + 0.5)
    err = np.abs(grid.values_at(centers) - Sphere(np.zeros(3), 0.5).values(centers))
    assert err.max() < 0.5 * spacing


def test_bake_rejects_degenerate_dims():
    with pytest.raises(ValueError):
        bake(UNIT_SPHERE, [0, 0, 0], [0.1, 0.1, 0.1], (1, 4, 4))


def test_grid_linear_field_is_exact():
    # trilinear interpolation reproduces a linear field anywhere in the box
    grid = bake(HalfSpace(np.array([1.0, 0, 0]), 0.0), [-1, -1, -1], [0.25, 0.2, 0.3], (9, 11, 8))
    rng = np.random.default_rng(10)
    lo, hi = grid.bounds
    pts = rng.uniform(lo, hi, size=(400, 3))
    np.testing.assert_allclose(grid.values_at(pts), pts[:, 0], atol=1e-6)


def test_grid_gradient_matches_finite_differences():
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8] * 3, [0.05] * 3, (33, 33, 33))
    rng = np.random.default_rng(11)
    h = 1e-4 * 0.05
    pts = []
    while len(pts) < 1000:
        cand = rng.uniform(-0.75, 0.75, size=(4000, 3))
        u = (cand + 0.8) / 0.05
        frac = u - np.floor(u)
        ok = np.all((frac > 2e-3) & (frac < 1 - 2e-3), axis=1)
        pts.extend(cand[ok].tolist())
    pts = np.array(pts[:1000])
    _, grads = query_values(grid, pts)
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        fd = (grid.values_at(pts + e) - grid.values_at(pts - e)) / (2 * h)
        scale = np.maximum(np.abs(grads[:, ax]), 1e-3)
        assert (np.abs(grads[:, ax] - fd) / scale).max() < 1e-4


def test_grid_eikonal_band_on_baked_sdf():
    # interpolant is not eikonal, but should stay within [0.5, 1.5]
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8] * 3, [0.05] * 3, (33, 33, 33))
    rng = np.random.default_rng(12)
    pts = rng.uniform(-0.7, 0.7, size=(2000, 3))
    keep = np.abs(np.linalg.norm(pts, axis=1) - 0.0) > 0.1  # away from center
    _, grads = query_values(grid, pts[keep])
    norms = np.linalg.norm(grads, axis=1)
    assert norms.min() > 0.5 and norms.max() < 1.5


def test_grid_clamp_policy_far_field():
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8] * 3, [0.05] * 3, (33, 33, 33))
    far = np.array([[3.0, 0.0, 0.0]])
    lo, hi = grid.bounds
    boundary = np.array([[hi[0], 0.0, 0.0]])
    v_far = grid.values_at(far)[0]
    v_b = grid.values_at(boundary)[0]
    assert v_far == pytest.approx(v_b + (3.0 - hi[0]), abs=1e-6)
    # Euclidean tail dominates the gradient; lateral terms are the
    # interpolant's own (one-sided) slopes at the boundary face
    _, g = query_values(grid, far)
    assert g[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert np.abs(g[0, 1:]).max() < 0.05


def test_grid_linear_extrapolation_policy():
    grid = bake(
        HalfSpace(np.array([1.0, 0, 0]), 0.0),
        [-1, -1, -1],
        [0.25, 0.25, 0.25],
        (9, 9, 9),
        outside_policy=OutsidePolicy.LINEAR,
    )
    pts = np.array([[1.7, 0.0, 0.0], [-2.3, 0.1, 0.2]])
    np.testing.assert_allclose(grid.values_at(pts), pts[:, 0], atol=1e-5)


def test_query_is_pure():
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8] * 3, [0.05] * 3, (17, 17, 17))
    p = np.array([0.31, -0.12, 0.07])
    a = query(grid, p)
    b = query(grid, p)
    assert a.value == b.value
    assert np.array_equal(a.gradient, b.gradient)


def test_transform_query_identity_and_translation():
    s = Sphere(np.zeros(3), 0.4)
    p = np.array([0.7, 0.1, -0.2])
    assert transform_query(s, Pose.identity(), p).value == pytest.approx(query(s, p).value)
    t = np.array([1.0, 2.0, 3.0])
    delta = 0.05
    probe = t + np.array([0.4 + delta, 0.0, 0.0])
    assert transform_query(s, Pose(Rot3.identity(), t), probe).value == pytest.approx(delta)


def test_transform_query_matches_pulled_back_query():
    rng = np.random.default_rng(14)
    s = Box(np.zeros(3), np.array([0.4, 0.3, 0.2]))
    pose = random_pose(rng)
    pts = rng.uniform(-1.5, 1.5, size=(1000, 3))
    vals, grads = transform_query(s, pose, pts)
    local = pose.inverse().apply(pts)
    vals_ref, grads_ref, _ = s.value_grad(local)
    np.testing.assert_allclose(vals, vals_ref, atol=1e-12)
    np.testing.assert_allclose(
        np.linalg.norm(grads, axis=1), np.linalg.norm(grads_ref, axis=1), atol=1e-12
    )


def test_transformed_shape_composes():
    pose = Pose(Rot3.rot_z(0.3), np.array([0.5, -0.2, 0.1]))
    placed = Transformed(pose, Sphere(np.zeros(3), 0.25))
    rng = np.random.default_rng(15)
    pts = rng.uniform(-1, 1, size=(200, 3))
    vals, grads = transform_query(Sphere(np.zeros(3), 0.25), pose, pts)
    vals2, grads2, _ = placed.value_grad(pts)
    np.testing.assert_allclose(vals, vals2, atol=1e-12)
    np.testing.assert_allclose(grads, grads2, atol=1e-12)


def test_sdfg_roundtrip_bit_exact(tmp_path):
    grid = bake(Sphere(np.zeros(3), 0.5), [-0.8, -0.7, -0.6], [0.05, 0.06, 0.07], (17, 15, 13))
    path = tmp_path / "g.sdfg"
    save_sdfg(grid, path)
    again = load_sdfg(path)
    assert again.dims == grid.dims
    np.testing.assert_array_equal(again.values, grid.values)
    np.testing.assert_array_equal(again.origin, grid.origin)
    np.testing.assert_array_equal(again.spacing, grid.spacing)
    assert again.outside_policy == grid.outside_policy
    # double round trip writes identical bytes
    path2 = tmp_path / "g2.sdfg"
    save_sdfg(again, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_sdfg_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.sdfg"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_sdfg(p)
