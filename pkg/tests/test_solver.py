"""PBD engine behavior: integration, projection, contacts, fracture."""

import numpy as np
import pytest

from conftest import point_scene
from splatphys import quatmath
from splatphys.errors import SimulationFault
from splatphys.solver import (
    ClusterSet,
    ConstraintSet,
    ContactGroup,
    DistanceConstraints,
    Engine,
    NeighborGraph,
    ParticleSet,
    Phase,
    SolverConfig,
    SupportPlane,
    generate_particles,
    project_granular_contacts,
)

NO_GRAVITY = SolverConfig(gravity=(0.0, 0.0, 0.0))


def free_engine(positions, **cfg):
    p = ParticleSet(np.asarray(positions, dtype=np.float64))
    return Engine(p, ConstraintSet(), config=SolverConfig(**cfg)), p


# ---- integration ----


def test_first_step_free_fall_delta():
    e, p = free_engine([[0.0, 0.0, 0.0]])
    e.step(dt=0.02, substeps=1)
    # symplectic Euler: Δx = g·dt² on the first step
    assert np.isclose(p.x[0, 1], -9.8 * 0.02**2)


def test_free_fall_closed_form_100_steps():
    e, p = free_engine([[0.0, 0.0, 0.0]], substeps=4)
    for _ in range(100):
        e.step()
    n = 400  # substeps taken
    dt_s = 0.02 / 4
    expect = -9.8 * dt_s * dt_s * n * (n + 1) / 2
    assert abs(p.x[0, 1] - expect) < 1e-6


def test_zero_gravity_no_constraints_static():
    e, p = free_engine([[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]], gravity=(0, 0, 0))
    x_before = p.x.copy()
    for _ in range(10):
        e.step()
    np.testing.assert_array_equal(p.x, x_before)


def test_momentum_conserved_particle_gas(rng):
    pts = rng.normal(size=(40, 3))
    p = ParticleSet(pts, masses=rng.uniform(0.5, 2.0, 40))
    p.v[:] = rng.normal(size=(40, 3))
    e = Engine(p, ConstraintSet(), config=NO_GRAVITY)
    p0 = p.momentum()
    for _ in range(200):
        e.step()
    np.testing.assert_allclose(p.momentum(), p0, rtol=1e-9)


def test_nan_positions_fault():
    e, p = free_engine([[0.0, 0.0, 0.0]])
    p.v[0, 0] = np.nan
    with pytest.raises(SimulationFault, match="frame 0"):
        e.step()


def test_step_argument_validation():
    e, _ = free_engine([[0, 0, 0]])
    with pytest.raises(ValueError):
        e.step(dt=0.0)
    with pytest.raises(ValueError):
        e.step(substeps=0)


# ---- distance constraints ----


def test_two_particle_stretch_resolves_in_one_iteration():
    p = ParticleSet([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    dc = DistanceConstraints([0], [1], [1.0], stiffness=1.0)
    e = Engine(p, ConstraintSet(distance=[dc]), config=NO_GRAVITY)
    e.step(dt=0.02, substeps=1, iterations=1)
    d = np.linalg.norm(p.x[1] - p.x[0])
    assert np.isclose(d, 1.0, atol=1e-12)
    # equal masses: symmetric displacement
    np.testing.assert_allclose(p.x[0], [0.5, 0, 0], atol=1e-12)
    np.testing.assert_allclose(p.x[1], [1.5, 0, 0], atol=1e-12)


def test_pinned_particle_takes_no_correction():
    p = ParticleSet([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    p.pin([0])
    dc = DistanceConstraints([0], [1], [1.0])
    e = Engine(p, ConstraintSet(distance=[dc]), config=NO_GRAVITY)
    e.step(dt=0.02, substeps=1, iterations=4)
    np.testing.assert_array_equal(p.x[0], [0, 0, 0])
    assert np.isclose(np.linalg.norm(p.x[1]), 1.0, atol=1e-9)


def test_settled_chain_violation_below_one_percent():
    # hanging chain under gravity, 8 iterations: static residual < 1% rest
    n = 10
    x = np.zeros((n, 3))
    x[:, 1] = -np.arange(n) * 0.1
    p = ParticleSet(x)
    p.pin([0])
    dc = DistanceConstraints(np.arange(n - 1), np.arange(1, n), np.full(n - 1, 0.1))
    e = Engine(p, ConstraintSet(distance=[dc]), config=SolverConfig(iterations=8))
    for _ in range(150):
        e.step()
    lengths = np.linalg.norm(p.x[1:] - p.x[:-1], axis=1)
    assert np.abs(lengths - 0.1).max() < 0.01 * 0.1


# ---- granular contacts ----


def test_contact_pair_separates_symmetrically():
    r = 0.05
    p = ParticleSet([[0.0, 0.0, 0.0], [r, 0.0, 0.0]], phase=Phase.GRANULAR, radius=r)
    project_granular_contacts(p, r, mu=0.0)
    d = np.linalg.norm(p.x[1] - p.x[0])
    assert np.isclose(d, 2 * r, atol=1e-12)
    np.testing.assert_allclose(p.x[0, 0], -(2 * r - r) / 2, atol=1e-12)


def test_zero_friction_keeps_tangential_motion():
    r = 0.05
    # both particles moved tangentially (y) relative to the contact normal (x)
    start = np.array([[0.0, 0.0, 0.0], [0.08, 0.0, 0.0]])
    p = ParticleSet(start, phase=Phase.GRANULAR, radius=r)
    p.prev[0] = [0.0, -0.02, 0.0]  # particle 0 slid +y this substep
    project_granular_contacts(p, r, mu=0.0)
    assert np.isclose(p.x[0, 1], 0.0, atol=1e-12)  # tangential untouched
    p2 = ParticleSet(start, phase=Phase.GRANULAR, radius=r)
    p2.prev[0] = [0.0, -0.02, 0.0]
    project_granular_contacts(p2, r, mu=1.0)
    assert p2.x[0, 1] < 0.0  # friction pulled the slid particle back


def test_repose_angle_monotone_in_friction(rng):
    def run(mu, seed):
        r = np.random.default_rng(seed)
        m = 6
        pts = []
        for layer in range(8):
            g = np.stack(np.meshgrid(np.arange(m), np.arange(m), indexing="ij"), -1).reshape(-1, 2)
            pts.append(
                np.c_[(g[:, 0] - m / 2) * 0.021, np.full(len(g), 0.25 + layer * 0.021),
                      (g[:, 1] - m / 2) * 0.021]
                + r.normal(scale=0.002, size=(len(g), 3))
            )
        pts = np.concatenate(pts)
        p = ParticleSet(pts, phase=Phase.GRANULAR, radius=0.01)
        cs = ConstraintSet(contacts=[ContactGroup(indices=np.arange(len(pts), dtype=np.int32))])
        e = Engine(p, cs, plane=SupportPlane(normal=(0, 1, 0), offset=0.0),
                   config=SolverConfig(plane_mu=mu))
        e.set_friction(np.arange(len(pts)), mu)
        for _ in range(80):
            e.step()
        h = p.x[:, 1]
        rr = np.linalg.norm(p.x[:, [0, 2]] - p.x[:, [0, 2]].mean(0), axis=1)
        return np.degrees(np.arctan2(np.quantile(h, 0.9), np.quantile(rr, 0.9)))

    low = run(0.1, 7)
    high = run(0.6, 7)
    assert high > low


# ---- shape matching ----


def _cluster_engine(x0, stiffness=1.0, **cfg):
    p = ParticleSet(x0.copy())
    cl = ClusterSet([0, len(x0)], np.arange(len(x0), dtype=np.int32), p.x0, p.mass,
                    stiffness=stiffness)
    e = Engine(p, ConstraintSet(clusters=[cl]), config=SolverConfig(gravity=(0, 0, 0), **cfg))
    return e, p, cl


def test_shape_match_undeformed_zero_correction(rng):
    x0 = rng.normal(size=(12, 3))
    e, p, _ = _cluster_engine(x0)
    e.step(dt=0.02, substeps=1, iterations=1)
    np.testing.assert_allclose(p.x, x0, atol=1e-12)


def test_shape_match_recovers_rigid_rotation(rng):
    x0 = rng.normal(size=(15, 3))
    e, p, cl = _cluster_engine(x0)
    q0 = quatmath.from_axis_angle([1.0, -0.4, 0.2], 0.9)
    c = x0.mean(axis=0)
    p.x[:] = quatmath.rotate(q0, x0 - c) + c
    e.step(dt=0.02, substeps=1, iterations=1)
    assert quatmath.distance(cl.rot[0], q0) < 1e-9
    np.testing.assert_allclose(p.x, quatmath.rotate(q0, x0 - c) + c, atol=1e-9)


def test_shape_match_elastic_restores_distances(rng):
    x0 = rng.normal(size=(20, 3))
    e, p, _ = _cluster_engine(x0)
    p.x += rng.normal(scale=0.3, size=p.x.shape)
    for _ in range(40):
        e.step()
    d0 = np.linalg.norm(x0[:, None] - x0[None, :], axis=-1)
    d1 = np.linalg.norm(p.x[:, None] - p.x[None, :], axis=-1)
    assert np.abs(d1 - d0).max() < 1e-3


def test_zero_plasticity_keeps_identity_state(rng):
    x0 = rng.normal(size=(15, 3))
    p = ParticleSet(x0.copy())
    cl = ClusterSet([0, 15], np.arange(15, dtype=np.int32), p.x0, p.mass, stiffness=0.5,
                    yield_threshold=0.05, absorb_rate=0.0)
    e = Engine(p, ConstraintSet(clusters=[cl]), config=NO_GRAVITY)
    p.x += rng.normal(scale=0.5, size=p.x.shape)
    for _ in range(10):
        e.step()
    np.testing.assert_array_equal(cl.plastic[0], np.eye(3))


def test_plasticity_absorbs_large_deformation(rng):
    x0 = rng.normal(size=(20, 3)) * 0.2
    p = ParticleSet(x0.copy())
    cl = ClusterSet([0, 20], np.arange(20, dtype=np.int32), p.x0, p.mass, stiffness=0.6,
                    yield_threshold=0.05, absorb_rate=0.8)
    e = Engine(p, ConstraintSet(clusters=[cl]), config=NO_GRAVITY)
    stretch = np.diag([2.0, 0.8, 0.8])
    c = x0.mean(axis=0)
    p.x[:] = (x0 - c) @ stretch.T + c
    for _ in range(5):
        e.step()
    assert np.linalg.norm(cl.plastic[0] - np.eye(3)) > 0.05
    np.testing.assert_allclose(np.linalg.det(cl.plastic[0]), 1.0, atol=1e-9)


def test_degenerate_cluster_keeps_previous_rotation():
    # collinear cluster: rank-1 moment matrix
    x0 = np.zeros((4, 3))
    x0[:, 0] = np.arange(4.0)
    p = ParticleSet(x0.copy())
    cl = ClusterSet([0, 4], np.arange(4, dtype=np.int32), p.x0, p.mass, stiffness=1.0)
    seed_rot = quatmath.from_axis_angle([0, 1, 0], 0.7)
    cl.rot[0] = seed_rot
    e = Engine(p, ConstraintSet(clusters=[cl]), config=NO_GRAVITY)
    e.step(dt=0.02, substeps=1, iterations=1)
    np.testing.assert_allclose(cl.rot[0], seed_rot, atol=1e-12)


# ---- fracture ----


def _fragile_engine(threshold, rng):
    h = 0.05
    pts = np.stack(np.meshgrid(*[np.arange(4)] * 3, indexing="ij"), -1).reshape(-1, 3) * h
    scene = point_scene(pts, scale=0.02)
    particles, constraints = generate_particles(scene, "rigid", h)
    cl = constraints.clusters[0]
    cl.fragile[:] = True
    cl.force_threshold[:] = threshold
    e = Engine(particles, constraints, config=NO_GRAVITY)
    return e, particles, constraints


def test_no_fracture_below_threshold(rng):
    e, p, cs = _fragile_engine(1e9, rng)
    p.v[:] = [2.0, 0.0, 0.0]
    for _ in range(20):
        e.step()
    assert cs.clusters[0].count == 1
    assert e.fracture_events == []


def test_fracture_partitions_particles_and_conserves_mass(rng):
    e, p, cs = _fragile_engine(1e-3, rng)
    total_mass = p.mass.sum()
    # slam half the particles: large goal mismatch exceeds the tiny threshold
    p.x[: len(p.x) // 2] += [0.5, 0.4, 0.0]
    e.step()
    cl = cs.clusters[0]
    assert cl.count >= 2
    assert len(e.fracture_events) == 1
    members_all = np.sort(cl.members)
    np.testing.assert_array_equal(members_all, np.arange(len(p.x)))  # partition
    assert np.isclose(sum(p.mass[cl.member_slice(k)].sum() for k in range(cl.count)), total_mass)
    # fragments are single-use: no immediate re-split
    assert not cl.fragile.any()


# ---- generation ----


def test_generate_deformable_cube_2x2x2():
    h = 0.1
    pts = np.stack(np.meshgrid(*[np.arange(2)] * 3, indexing="ij"), -1).reshape(-1, 3) * h
    scene = point_scene(pts, scale=0.02)
    particles, constraints = generate_particles(scene, "deformation", h)
    assert len(particles) == 8
    assert len(constraints.distance[0]) == 12
    assert particles.phase[0] == Phase.DEFORMABLE


def test_generate_rigid_shell_single_cluster(rng):
    # hollow-capable solid block: every occupied cell is on the shell for 3³
    h = 0.1
    pts = np.stack(np.meshgrid(*[np.arange(3)] * 3, indexing="ij"), -1).reshape(-1, 3) * h
    scene = point_scene(pts, scale=0.02)
    particles, constraints = generate_particles(scene, "rigid", h)
    assert len(constraints.clusters) == 1
    cl = constraints.clusters[0]
    assert cl.count == 1
    assert len(particles) == 26  # 27 cells minus the enclosed center
    np.testing.assert_array_equal(np.sort(cl.member_slice(0)), np.arange(26))


def test_generate_granular_one_to_one(rng):
    scene = point_scene(rng.normal(size=(500, 3)), scale=0.02)
    particles, constraints = generate_particles(
        scene, "granular", 0.05, fill_report={"fill_kernels": 0}
    )
    assert len(particles) == 500
    assert np.all(particles.phase == Phase.GRANULAR)
    np.testing.assert_allclose(particles.radius, 0.025)


def test_generate_granular_requires_fill():
    scene = point_scene([[0, 0, 0]])
    with pytest.raises(RuntimeError, match="fill_granular"):
        generate_particles(scene, "granular", 0.05)


def test_generate_unknown_category():
    with pytest.raises(ValueError, match="category"):
        generate_particles(point_scene([[0, 0, 0]]), "liquid", 0.05)


# ---- plane collision ----


def test_particles_settle_on_plane():
    p = ParticleSet([[0.0, 0.5, 0.0]], phase=Phase.GRANULAR, radius=0.02)
    cs = ConstraintSet(contacts=[ContactGroup(indices=np.array([0], dtype=np.int32))])
    e = Engine(p, cs, plane=SupportPlane(normal=(0, 1, 0), offset=0.0))
    for _ in range(100):
        e.step()
    # rests at radius + margin above the plane, never below tolerance
    assert p.x[0, 1] > -1e-3
    assert abs(p.x[0, 1] - (0.02 + e.config.plane_margin)) < 1e-6


def test_stack_penetration_below_tolerance(rng):
    pts = rng.uniform(-0.05, 0.05, size=(60, 3))
    pts[:, 1] = rng.uniform(0.05, 0.3, size=60)
    p = ParticleSet(pts, phase=Phase.GRANULAR, radius=0.015)
    cs = ConstraintSet(contacts=[ContactGroup(indices=np.arange(60, dtype=np.int32))])
    e = Engine(p, cs, plane=SupportPlane(normal=(0, 1, 0), offset=0.0))
    for _ in range(120):
        e.step()
    assert (p.x[:, 1] - 0.015).min() > -1e-3


# ---- spawn / interactions ----


def test_spawn_projectile_flies_and_collides():
    p = ParticleSet(np.zeros((1, 3)), phase=Phase.RIGID, radius=0.05)
    p.pin([0])
    cs = ConstraintSet(contacts=[ContactGroup(indices=np.array([0], dtype=np.int32))])
    e = Engine(p, cs, config=NO_GRAVITY)
    idx = e.spawn_projectile(origin=[-1.0, 0.0, 0.0], velocity=[5.0, 0.0, 0.0], radius=0.05)
    for _ in range(30):
        e.step()
    # bounced off the pinned particle: never passes through
    assert e.particles.x[idx, 0] < -0.04


def test_pick_and_spring_drag():
    p = ParticleSet([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    e = Engine(p, ConstraintSet(), config=NO_GRAVITY)
    hit = e.pick_particle([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], max_dist=0.1)
    assert hit == 0
    assert e.pick_particle([5.0, 5.0, -1.0], [0.0, 0.0, 1.0], max_dist=0.1) is None
    s = e.add_spring(0, [0.0, 1.0, 0.0], stiffness=0.9)
    for _ in range(30):
        e.step()
    assert np.linalg.norm(p.x[0] - [0, 1, 0]) < 1e-3
    e.remove_spring(s)
