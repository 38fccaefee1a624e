"""Skinning: binding construction, delta extraction, Eq.-style blending."""

import numpy as np
import pytest

from conftest import point_scene, random_scene
from splatphys import quatmath
from splatphys._kernels import get_backend
from splatphys.bind import (
    build_binding,
    default_m_for_phase,
    particle_deltas,
    skin_all,
    skin_kernel,
)
from splatphys.solver import (
    ClusterSet,
    ConstraintSet,
    Engine,
    NeighborGraph,
    ParticleSet,
    Phase,
    SolverConfig,
)


def _particles(rng, n=50, spread=1.0):
    return ParticleSet(rng.normal(scale=spread, size=(n, 3)))


# ---- build_binding ----


def test_weights_equidistant_four():
    parts = ParticleSet(
        [[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]]
    )
    scene = point_scene([[0.0, 0.0, 0.0]])
    b = build_binding(scene, parts, m=4)
    np.testing.assert_allclose(b.weights[0], 0.25, atol=1e-7)


def test_weights_inverse_distance():
    parts = ParticleSet([[1.0, 0, 0], [3.0, 0, 0]])
    scene = point_scene([[0.0, 0.0, 0.0]])
    b = build_binding(scene, parts, m=2)
    # distances (1, 3) → weights (3/4, 1/4)
    np.testing.assert_allclose(b.weights[0], [0.75, 0.25], atol=1e-7)


def test_exact_coincidence_takes_all_weight():
    parts = ParticleSet([[0.0, 0.0, 0.0], [1.0, 0, 0]])
    scene = point_scene([[0.0, 0.0, 0.0]])
    b = build_binding(scene, parts, m=2)
    np.testing.assert_allclose(b.weights[0], [1.0, 0.0], atol=1e-7)


def test_nearest_selection_matches_bruteforce(rng):
    parts = _particles(rng, 200)
    scene = random_scene(rng, 1000)
    b = build_binding(scene, parts, m=4)
    d_all = np.linalg.norm(
        scene.positions.astype(np.float64)[:, None, :] - parts.x0[None], axis=-1
    )
    expect = np.sort(d_all, axis=1)[:, :4]
    got = np.sort(
        np.take_along_axis(d_all, b.indices.astype(np.int64), axis=1), axis=1
    )
    np.testing.assert_allclose(got, expect, atol=1e-12)


def test_m_reduced_with_warning(rng):
    parts = ParticleSet([[0.0, 0.0, 0.0], [1.0, 0, 0]])
    scene = point_scene([[0.5, 0.0, 0.0]])
    with pytest.warns(RuntimeWarning, match="reducing"):
        b = build_binding(scene, parts, m=4)
    assert b.m == 2


def test_weight_normalization_property(rng):
    parts = _particles(rng, 80)
    scene = random_scene(rng, 500)
    b = build_binding(scene, parts, m=4)
    np.testing.assert_allclose(b.weights.sum(axis=1), 1.0, atol=1e-6)


def test_default_m_policy():
    assert default_m_for_phase(Phase.DEFORMABLE) == 4
    assert default_m_for_phase(Phase.RIGID) == 1
    assert default_m_for_phase(Phase.GRANULAR) == 1


# ---- particle_deltas ----


def test_deltas_at_rest_are_identity(rng):
    parts = _particles(rng)
    d_t, d_r = particle_deltas(parts)
    np.testing.assert_array_equal(d_t, 0.0)
    np.testing.assert_allclose(d_r[:, 0], 1.0)
    np.testing.assert_array_equal(d_r[:, 1:], 0.0)


def test_deltas_pure_translation(rng):
    parts = _particles(rng)
    parts.x += np.array([0.3, -0.2, 1.0])
    d_t, d_r = particle_deltas(parts)
    np.testing.assert_allclose(
        d_t, np.tile(np.array([0.3, -0.2, 1.0], np.float32), (len(d_t), 1)), atol=1e-6
    )
    np.testing.assert_allclose(d_r[:, 0], 1.0)


def test_deformable_rotation_recovered_by_engine(rng):
    # whole deformable body rotated about its centroid: every ΔR ≈ R₀
    n = 4
    h = 0.1
    cells = np.stack(np.meshgrid(*[np.arange(n)] * 3, indexing="ij"), -1).reshape(-1, 3)
    pts = cells * h
    parts = ParticleSet(pts, phase=Phase.DEFORMABLE)
    pairs_i, pairs_j = [], []
    index_of = {tuple(c): i for i, c in enumerate(cells)}
    for i, c in enumerate(cells):
        for step in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            j = index_of.get(tuple(c + step))
            if j is not None:
                pairs_i.append(i)
                pairs_j.append(j)
    graph = NeighborGraph.from_pairs(len(pts), np.asarray(pairs_i), np.asarray(pairs_j))
    engine = Engine(parts, ConstraintSet(graph=graph), config=SolverConfig(gravity=(0, 0, 0)))

    q0 = quatmath.from_axis_angle([0.2, 1.0, -0.5], 0.8)
    c0 = pts.mean(axis=0)
    parts.x[:] = quatmath.rotate(q0, pts - c0) + c0
    engine._update_rotation_deltas()
    _, d_r = particle_deltas(parts)
    assert np.all(quatmath.distance(d_r.astype(np.float64), q0) < 1e-5)


# ---- skin_kernel / skin_all ----


def test_identity_deltas_reproduce_rest(rng):
    parts = _particles(rng, 30)
    scene = random_scene(rng, 100)
    b = build_binding(scene, parts, m=4)
    d_t, d_r = particle_deltas(parts)
    pos, rot = skin_all(b, d_t, d_r)
    np.testing.assert_allclose(pos, scene.positions, atol=1e-6)
    assert np.all(quatmath.distance(rot.astype(np.float64), scene.rotations.astype(np.float64)) < 1e-6)


def _apply_rigid(parts, q0, t0):
    d_t = (quatmath.rotate(q0, parts.x0) + t0 - parts.x0).astype(np.float32)
    d_r = np.tile(np.asarray(q0, dtype=np.float32), (len(parts.x0), 1))
    return d_t, d_r


def test_rigid_motion_reproduction(rng):
    parts = _particles(rng, 60)
    scene = random_scene(rng, 400)
    b = build_binding(scene, parts, m=4)
    for _ in range(5):
        q0 = quatmath.random_unit(rng)
        t0 = rng.normal(size=3)
        d_t, d_r = _apply_rigid(parts, q0, t0)
        pos, rot = skin_all(b, d_t, d_r)
        expect_pos = quatmath.rotate(q0, scene.positions.astype(np.float64)) + t0
        expect_rot = quatmath.multiply(q0, scene.rotations.astype(np.float64))
        assert np.abs(pos - expect_pos).max() < 1e-5
        assert quatmath.distance(rot.astype(np.float64), expect_rot).max() < 1e-5


def test_m1_rigid_attachment(rng):
    parts = _particles(rng, 20)
    scene = random_scene(rng, 50)
    b = build_binding(scene, parts, m=1)
    q0 = quatmath.random_unit(rng)
    parts.x[:] = quatmath.rotate(q0, parts.x0) + [0.1, 0.2, 0.3]
    parts.delta_rot[:] = q0
    d_t, d_r = particle_deltas(parts)
    pos, _ = skin_all(b, d_t, d_r)
    # T = ΔR (T_r − x₀ᵖ) + x₀ᵖ + ΔT : rigid attachment to the bound particle
    p_idx = b.indices[:, 0]
    expect = (
        quatmath.rotate(q0, scene.positions.astype(np.float64) - parts.x0[p_idx])
        + parts.x0[p_idx]
        + d_t.astype(np.float64)[p_idx]
    )
    assert np.abs(pos - expect).max() < 1e-5


def test_m1_identity_rotation_pure_follow(rng):
    parts = _particles(rng, 20)
    scene = random_scene(rng, 50)
    b = build_binding(scene, parts, m=1)
    parts.x += [0.5, 0.0, -0.25]
    d_t, d_r = particle_deltas(parts)
    pos, _ = skin_all(b, d_t, d_r)
    np.testing.assert_allclose(pos, scene.positions + np.float32([0.5, 0.0, -0.25]), atol=1e-6)


def test_skin_all_matches_scalar_loop(rng):
    parts = _particles(rng, 40)
    scene = random_scene(rng, 120)
    b = build_binding(scene, parts, m=4)
    parts.x += rng.normal(scale=0.1, size=parts.x.shape)
    parts.delta_rot[:] = quatmath.random_unit(rng, len(parts.x0))
    d_t, d_r = particle_deltas(parts)
    pos, rot = skin_all(b, d_t, d_r)
    for i in rng.choice(len(scene), 25, replace=False):
        t, r = skin_kernel(int(i), b, d_t, d_r)
        np.testing.assert_allclose(pos[i], t, atol=2e-5)
        assert quatmath.distance(rot[i].astype(np.float64), r) < 2e-5


def test_skin_all_is_pure(rng):
    parts = _particles(rng, 30)
    scene = random_scene(rng, 90)
    b = build_binding(scene, parts, m=4)
    parts.x += 0.1
    d_t, d_r = particle_deltas(parts)
    p1, r1 = skin_all(b, d_t, d_r)
    p2, r2 = skin_all(b, d_t, d_r)
    np.testing.assert_array_equal(p1, p2)
    np.testing.assert_array_equal(r1, r2)


def test_backend_parity(rng):
    parts = _particles(rng, 64)
    scene = random_scene(rng, 300)
    b = build_binding(scene, parts, m=4)
    parts.x += rng.normal(scale=0.2, size=parts.x.shape)
    parts.delta_rot[:] = quatmath.random_unit(rng, len(parts.x0))
    d_t, d_r = particle_deltas(parts)
    pn, rn = skin_all(b, d_t, d_r, kernels=get_backend("native"))
    pp, rp = skin_all(b, d_t, d_r, kernels=get_backend("pure"))
    np.testing.assert_allclose(pn, pp, atol=1e-5)
    assert quatmath.distance(rn.astype(np.float64), rp.astype(np.float64)).max() < 1e-5


def test_antipodal_signs_rescued_by_alignment(rng):
    # same rotation stored with opposite quaternion signs must not cancel
    parts = ParticleSet([[1.0, 0, 0], [-1.0, 0, 0]])
    scene = point_scene([[0.0, 0.0, 0.0]])
    b = build_binding(scene, parts, m=2)
    d_t = np.zeros((2, 3), np.float32)
    q = quatmath.from_axis_angle([0, 0, 1], np.pi / 2)
    d_r = np.stack([q, -q]).astype(np.float32)
    _, rot = skin_all(b, d_t, d_r)
    assert quatmath.distance(rot[0].astype(np.float64), q) < 1e-6


def test_zero_blend_fallback_counted(rng):
    # with sign alignment a zero blend can only come from degenerate input
    # (eg. a zeroed delta buffer); both backends flag it the same way
    parts = ParticleSet([[1.0, 0, 0], [-1.0, 0, 0]])
    scene = point_scene([[0.0, 0.0, 0.0]])
    b = build_binding(scene, parts, m=2)
    d_t = np.zeros((2, 3), np.float32)
    d_r = np.zeros((2, 4), np.float32)
    counts = []
    for backend in ("native", "pure"):
        counts.append(
            get_backend(backend).skin_kernels(
                b.indices, b.weights, b.offsets_xd, b.rest_pos, b.rest_rot,
                d_t, d_r, np.empty((1, 3), np.float32), np.empty((1, 4), np.float32),
            )
        )
    assert counts == [1, 1]
