"""Support plane fitting and the voxel signed distance field."""

import numpy as np
import pytest

from conftest import point_scene
from splatphys.solver.collide import DistanceField, SupportPlane, build_sdf, fit_support_plane


def _plane_cloud(rng, n=400, outlier_frac=0.05):
    pts = np.zeros((n, 3))
    pts[:, 0] = rng.uniform(-1, 1, n)
    pts[:, 2] = rng.uniform(-1, 1, n)
    n_out = int(n * outlier_frac)
    pts[:n_out, 1] = rng.uniform(0.2, 1.0, n_out)  # 5% floaters
    return pts


def test_fit_plane_with_outliers(rng):
    scene = point_scene(_plane_cloud(rng), scale=0.01)
    plane = fit_support_plane(scene, seed=3)
    np.testing.assert_allclose(np.abs(plane.normal), [0, 1, 0], atol=1e-4)
    assert plane.normal[1] > 0  # oriented against gravity
    assert abs(plane.offset) < 1e-4


def test_fit_plane_requires_three_points(rng):
    with pytest.raises(ValueError, match="at least 3"):
        fit_support_plane(point_scene([[0, 0, 0], [1, 0, 0]]))


def test_fit_plane_deterministic_under_seed(rng):
    scene = point_scene(_plane_cloud(rng), scale=0.01)
    a = fit_support_plane(scene, seed=11)
    b = fit_support_plane(scene, seed=11)
    np.testing.assert_array_equal(a.normal, b.normal)
    assert a.offset == b.offset


def test_fit_plane_rejects_scatter(rng):
    scene = point_scene(rng.normal(size=(200, 3)), scale=0.01)
    with pytest.raises(RuntimeError, match="support plane"):
        fit_support_plane(scene, inlier_tol=0.005, min_inlier_frac=0.5)


def test_plane_signed_distance():
    plane = SupportPlane(normal=(0, 2, 0), offset=2.0)  # normalizes to n=(0,1,0), d=1
    np.testing.assert_allclose(plane.signed_distance([[0, 3, 0], [0, 0, 0]]), [2.0, -1.0])


# ---- SDF ----


def test_sdf_single_kernel_adjacent_distance():
    h = 0.05
    scene = point_scene([[0.0, 0.0, 0.0]], scale=0.01)  # dilation < h: one occupied cell
    field = build_sdf(scene, h)
    occupied = np.argwhere(field.values < 0)
    assert len(occupied) == 1
    cell = occupied[0]
    inside = field.origin + (cell + 0.5) * h
    assert field.sample(inside[None])[0] < 0
    adjacent = field.origin + (cell + [1, 0, 0] + 0.5) * h
    d = field.sample(adjacent[None])[0]
    assert abs(d - h) <= 0.05 * h + 1e-9


def test_sdf_far_query_matches_brute_force(rng):
    h = 0.04
    pts = rng.uniform(-0.2, 0.2, size=(30, 3))
    scene = point_scene(pts, scale=0.005)
    field = build_sdf(scene, h)

    occupied_centers = np.argwhere(field.values < 0)
    occ_world = field.origin + (occupied_centers + 0.5) * h
    lo = field.origin + h
    hi = field.origin + (np.asarray(field.values.shape) - 1) * h
    queries = rng.uniform(lo, hi, size=(40, 3))
    far = np.array([np.linalg.norm(occ_world - q, axis=1).min() for q in queries]) > 2 * h
    assert far.sum() > 5
    for q in queries[far]:
        brute = np.linalg.norm(occ_world - q, axis=1).min()
        got = field.sample(q[None])[0]
        assert abs(got - brute) <= h + 1e-9


def test_sdf_beyond_grid_extension_positive(rng):
    h = 0.05
    field = build_sdf(point_scene([[0.0, 0.0, 0.0]], scale=0.01), h)
    near = field.sample(np.array([[0.3, 0.0, 0.0]]))[0]
    far = field.sample(np.array([[3.0, 0.0, 0.0]]))[0]
    assert 0 < near < far  # clamp extension grows with distance


def test_sdf_node_sampling_exact():
    h = 0.05
    scene = point_scene([[0.0, 0.0, 0.0]], scale=0.01)
    field = build_sdf(scene, h)
    idx = np.array([[4, 5, 6]])
    node = field.origin + (idx + 0.5) * h
    np.testing.assert_allclose(field.sample(node)[0], field.values[4, 5, 6], atol=1e-12)


def test_sdf_kernel_dilation():
    # a kernel with max scale 3h occupies a ball, not just its center cell
    h = 0.05
    scene = point_scene([[0.0, 0.0, 0.0]], scale=0.15)
    field = build_sdf(scene, h)
    assert field.sample(np.array([[0.1, 0.0, 0.0]]))[0] < 0  # within the dilated ball


def test_sdf_gradient_points_away():
    h = 0.05
    scene = point_scene([[0.0, 0.0, 0.0]], scale=0.01)
    field = build_sdf(scene, h)
    g = field.gradient(np.array([[0.3, 0.0, 0.0]]))[0]
    assert g[0] > 0.9  # outward along +x


def test_sdf_memory_budget():
    scene = point_scene([[0, 0, 0], [50.0, 50.0, 50.0]], scale=0.01)
    with pytest.raises(MemoryError, match="try h"):
        build_sdf(scene, 0.01, memory_budget_mb=1)


def test_sdf_empty_scene():
    from splatphys.splat.scene import SplatScene

    empty = SplatScene(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)), np.zeros(0))
    with pytest.raises(ValueError, match="empty"):
        build_sdf(empty, 0.05)
