"""PBD stepping: predict, project (Jacobi with averaging), update velocities,
rigid fracture, plastic flow and per-particle rotation deltas."""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from splatphys import quatmath
from splatphys._kernels import impl as default_kernels
from splatphys.errors import SimulationFault
from splatphys.solver.constraints import ClusterSet, ConstraintSet
from splatphys.solver.particles import ParticleSet, Phase

_CONTACT_PHASES = (Phase.GRANULAR, Phase.RIGID, Phase.PROJECTILE)


@dataclass
class SolverConfig:
    dt: float = 0.02
    substeps: int = 4
    iterations: int = 8
    gravity: tuple = (0.0, -9.8, 0.0)
    damping: float = 0.0  # global velocity retention loss per substep
    plane_margin: float = 1e-4  # resting offset above the support plane
    plane_mu: float = 0.5
    sdf_margin: float = 0.0
    contact_pair_margin: float = 1.3  # broad-phase radius inflation
    default_mu: float = 0.4  # non-granular contact friction
    fracture_seeds: int = 6
    grab_damping: float = 0.8
    deterministic: bool = True


@dataclass
class SpringTarget:
    """Pulls one particle toward a world target each iteration; the grabbed
    particle's velocity is damped so the pull does not slingshot the body."""

    particle: int
    target: np.ndarray
    stiffness: float = 1.0  # per-step fraction, converted per-iteration
    damping: float = 0.8  # velocity retention loss per substep

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=np.float64)


@dataclass
class StepTiming:
    step_ms: float = 0.0
    fracture_events: int = 0


class Engine:
    """Owns the merged particle set and constraint set for a scene."""

    def __init__(self, particles, constraints=None, plane=None, sdf=None,
                 config=None, kernels=None):
        self.particles = particles
        self.constraints = constraints if constraints is not None else ConstraintSet()
        self.plane = plane
        self.sdf = sdf
        self.config = config if config is not None else SolverConfig()
        self.kernels = kernels if kernels is not None else default_kernels
        self.frame = 0
        self.springs = []
        self.mu = np.full(len(particles), self.config.default_mu, dtype=np.float64)
        for group in self.constraints.contacts:
            self.mu[group.indices] = group.mu
        self._delta = np.zeros_like(particles.x)
        self._count = np.zeros(len(particles), dtype=np.int32)
        self._stress = np.zeros(len(particles), dtype=np.float64)
        self.fracture_events = []

    # ---- runtime mutation ----

    def set_friction(self, indices, mu):
        self.mu[indices] = mu

    def spawn_projectile(self, origin, velocity, radius=0.05, mass=0.2):
        """Append a single free contact particle; returns its index."""
        extra = ParticleSet(
            np.asarray(origin, dtype=np.float64).reshape(1, 3),
            masses=[mass],
            phase=Phase.PROJECTILE,
            radius=radius,
        )
        extra.v[0] = np.asarray(velocity, dtype=np.float64)
        idx = self.particles.append(extra)
        self.mu = np.append(self.mu, self.config.default_mu)
        self._delta = np.zeros_like(self.particles.x)
        self._count = np.zeros(len(self.particles), dtype=np.int32)
        self._stress = np.zeros(len(self.particles), dtype=np.float64)
        return idx

    def add_spring(self, particle, target, stiffness=1.0):
        spring = SpringTarget(particle=int(particle), target=target, stiffness=stiffness)
        self.springs.append(spring)
        return spring

    def remove_spring(self, spring):
        if spring in self.springs:
            self.springs.remove(spring)

    def pick_particle(self, ray_origin, ray_dir, max_dist=0.15):
        """Nearest movable particle to the ray within max_dist; None on miss."""
        o = np.asarray(ray_origin, dtype=np.float64)
        d = np.asarray(ray_dir, dtype=np.float64)
        d = d / np.linalg.norm(d)
        rel = self.particles.x - o
        t = rel @ d
        ahead = (t > 0.0) & (self.particles.inv_mass > 0.0)
        if not np.any(ahead):
            return None
        perp = np.linalg.norm(rel - t[:, None] * d[None, :], axis=1)
        perp[~ahead] = np.inf
        best = int(np.argmin(perp))
        if perp[best] > max_dist:
            return None
        return best

    # ---- stepping ----

    def _contact_indices(self):
        mask = np.isin(self.particles.phase, [int(p) for p in _CONTACT_PHASES])
        return np.nonzero(mask)[0].astype(np.int32)

    def _build_contact_pairs(self, indices):
        if len(indices) < 2:
            return np.empty(0, np.int32), np.empty(0, np.int32)
        pos = self.particles.x[indices]
        radii = self.particles.radius[indices]
        reach = self.config.contact_pair_margin * 2.0 * radii.max()
        tree = cKDTree(pos)
        pairs = tree.query_pairs(reach, output_type="ndarray")
        if len(pairs) == 0:
            return np.empty(0, np.int32), np.empty(0, np.int32)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]  # deterministic order
        return indices[pairs[:, 0]], indices[pairs[:, 1]]

    def step(self, dt=None, substeps=None, iterations=None, gravity=None):
        """Advance one frame; returns StepTiming."""
        cfg = self.config
        dt = cfg.dt if dt is None else dt
        substeps = cfg.substeps if substeps is None else substeps
        iterations = cfg.iterations if iterations is None else iterations
        gravity = np.asarray(cfg.gravity if gravity is None else gravity, dtype=np.float64)
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if substeps < 1:
            raise ValueError("substeps must be ≥ 1")

        t0 = time.perf_counter()
        p = self.particles
        dt_s = dt / substeps
        contact_idx = self._contact_indices()
        events = 0

        for _ in range(substeps):
            movable = p.inv_mass > 0.0
            p.v[movable] += gravity * dt_s
            np.copyto(p.prev, p.x)
            p.x[movable] += p.v[movable] * dt_s

            pi, pj = self._build_contact_pairs(contact_idx)
            self._stress[:] = 0.0

            spring_gain = [1.0 - (1.0 - min(s.stiffness, 1.0)) ** (1.0 / iterations)
                           for s in self.springs]

            for _it in range(iterations):
                self._delta[:] = 0.0
                self._count[:] = 0

                for dc in self.constraints.distance:
                    if len(dc):
                        self.kernels.project_distance(
                            p.x, p.inv_mass, dc.i, dc.j, dc.rest, dc.stiffness,
                            self._delta, self._count,
                        )
                for cl in self.constraints.clusters:
                    apq = np.zeros((cl.count, 3, 3))
                    self.kernels.shape_match(
                        p.x, p.mass, p.inv_mass, p.x0, cl.rest_centroid,
                        cl.offsets, cl.members, cl.plastic, cl.rot, cl.stiffness,
                        self._delta, self._count, self._stress, apq,
                    )
                    if _it == 0:
                        # pre-projection deformation drives the plastic flow;
                        # later iterations have already pulled toward the goal
                        cl._first_apq = apq
                if len(pi):
                    self.kernels.project_contacts(
                        p.x, p.prev, p.inv_mass, pi, pj, p.radius, self.mu,
                        self._delta, self._count,
                    )

                np.divide(
                    self._delta,
                    np.maximum(self._count, 1)[:, None],
                    out=self._delta,
                )
                p.x += self._delta

                for s, gain in zip(self.springs, spring_gain):
                    if p.inv_mass[s.particle] > 0.0:
                        p.x[s.particle] += gain * (s.target - p.x[s.particle])

                self._collide_static()

            p.v[movable] = (p.x[movable] - p.prev[movable]) / dt_s
            if cfg.damping > 0.0:
                p.v[movable] *= 1.0 - cfg.damping
            for s in self.springs:
                if p.inv_mass[s.particle] > 0.0:
                    p.v[s.particle] *= 1.0 - s.damping
            self._plastic_flow(dt_s)
            events += self._fracture_pass(dt_s, iterations)

        self._update_rotation_deltas()

        if not np.all(np.isfinite(p.x)):
            raise SimulationFault("non-finite particle positions", frame=self.frame)
        self.frame += 1
        return StepTiming(step_ms=(time.perf_counter() - t0) * 1e3, fracture_events=events)

    # ---- static collision ----

    def _collide_static(self):
        p = self.particles
        cfg = self.config
        if self.plane is not None:
            pen = cfg.plane_margin + p.radius - self.plane.signed_distance(p.x)
            hit = (pen > 0.0) & (p.inv_mass > 0.0)
            if np.any(hit):
                n = self.plane.normal
                p.x[hit] += pen[hit, None] * n
                # position-level Coulomb friction against the plane
                dx = p.x[hit] - p.prev[hit]
                dxn = dx @ n
                dxt = dx - dxn[:, None] * n
                tnorm = np.linalg.norm(dxt, axis=1)
                slip = tnorm > 1e-12
                scale = np.where(
                    slip, np.minimum(cfg.plane_mu * pen[hit] / np.where(slip, tnorm, 1.0), 1.0), 0.0
                )
                p.x[hit] -= scale[:, None] * dxt
        if self.sdf is not None:
            phi = self.sdf.sample(p.x)
            margin = cfg.sdf_margin + p.radius
            hit = (phi < margin) & (p.inv_mass > 0.0)
            if np.any(hit):
                g = self.sdf.gradient(p.x[hit])
                p.x[hit] += (margin[hit] - phi[hit])[:, None] * g

    # ---- plasticity ----

    def _plastic_flow(self, dt_s):
        for cl in self.constraints.clusters:
            active = (cl.absorb_rate > 0.0) & np.isfinite(cl.yield_threshold)
            if not np.any(active) or not hasattr(cl, "_first_apq"):
                continue
            p = self.particles
            for k in np.nonzero(active)[0]:
                mem = cl.member_slice(k)
                q = p.x0[mem] - cl.rest_centroid[k]
                qt = q @ cl.plastic[k].T
                m = p.mass[mem]
                aqq = (m[:, None] * qt).T @ qt
                try:
                    aqq_inv = np.linalg.inv(aqq)
                except np.linalg.LinAlgError:
                    continue
                a = cl._first_apq[k] @ aqq_inv
                # normalize volume before measuring deformation
                det = np.linalg.det(a)
                if det <= 1e-12:
                    continue
                a = a / det ** (1.0 / 3.0)
                r = quatmath.to_matrix(cl.rot[k])
                if np.linalg.norm(a - r, ord="fro") > cl.yield_threshold[k]:
                    # creep-rate formulation: the absorbed fraction scales
                    # with the substep so energy is not injected on impact
                    rate = cl.absorb_rate[k] * dt_s * 10.0
                    s_new = (np.eye(3) + rate * (r.T @ a - np.eye(3))) @ cl.plastic[k]
                    det_s = np.linalg.det(s_new)
                    if det_s > 1e-12:
                        cl.plastic[k] = s_new / det_s ** (1.0 / 3.0)

    # ---- fracture ----

    def _fracture_pass(self, dt_s, iterations):
        events = 0
        p = self.particles
        for ci, cl in enumerate(self.constraints.clusters):
            fragile = np.nonzero(cl.fragile & np.isfinite(cl.force_threshold))[0]
            if len(fragile) == 0:
                continue
            to_split = []
            for k in fragile:
                mem = cl.member_slice(k)
                # impulse from mass-weighted goal mismatch, averaged over
                # iterations; forced through /dt_s to compare as force
                impulse = (p.mass[mem] * self._stress[mem]).sum() / max(iterations, 1) / dt_s
                force = impulse / dt_s
                if force > cl.force_threshold[k]:
                    to_split.append(k)
            if to_split:
                self.constraints.clusters[ci] = self._split_clusters(cl, to_split)
                events += len(to_split)
                self.fracture_events.append(
                    {"frame": self.frame, "cluster_set": ci, "split": [int(k) for k in to_split]}
                )
        return events

    def _split_clusters(self, cl, split_ids):
        """Rebuild a ClusterSet with the given clusters split into fragments
        by seeded region growing over the particle adjacency graph."""
        p = self.particles
        graph = self.constraints.graph
        new_offsets = [0]
        new_members = []
        attrs = {name: [] for name in (
            "rot", "plastic", "stiffness", "yield_threshold", "absorb_rate",
            "fragile", "force_threshold", "object_id",
        )}

        def push(members, src_k, fragile_override=None):
            new_members.extend(int(m) for m in members)
            new_offsets.append(len(new_members))
            attrs["rot"].append(cl.rot[src_k].copy())
            attrs["plastic"].append(cl.plastic[src_k].copy())
            attrs["stiffness"].append(cl.stiffness[src_k])
            attrs["yield_threshold"].append(cl.yield_threshold[src_k])
            attrs["absorb_rate"].append(cl.absorb_rate[src_k])
            attrs["fragile"].append(
                cl.fragile[src_k] if fragile_override is None else fragile_override
            )
            attrs["force_threshold"].append(cl.force_threshold[src_k])
            attrs["object_id"].append(cl.object_id[src_k])

        for k in range(cl.count):
            mem = cl.member_slice(k)
            if k not in split_ids:
                push(mem, k)
                continue
            fragments = self._grow_fragments(mem, graph)
            for frag in fragments:
                push(frag, k, fragile_override=False)

        out = ClusterSet(
            np.asarray(new_offsets, dtype=np.int64),
            np.asarray(new_members, dtype=np.int32),
            p.x0,
            p.mass,
            stiffness=np.asarray(attrs["stiffness"]),
            yield_threshold=np.asarray(attrs["yield_threshold"]),
            absorb_rate=np.asarray(attrs["absorb_rate"]),
            fragile=np.asarray(attrs["fragile"]),
            force_threshold=np.asarray(attrs["force_threshold"]),
            object_id=np.asarray(attrs["object_id"]),
        )
        out.rot = np.asarray(attrs["rot"])
        out.plastic = np.asarray(attrs["plastic"])
        return out

    def _grow_fragments(self, members, graph):
        """Multi-source BFS from the highest-stress seed particles."""
        p = self.particles
        members = np.asarray(members)
        n_seeds = min(self.config.fracture_seeds, len(members))
        order = np.argsort(-self._stress[members], kind="stable")
        seeds = members[order[:n_seeds]]

        member_set = set(int(m) for m in members)
        label = {int(s): i for i, s in enumerate(seeds)}
        frontier = list(int(s) for s in seeds)
        while frontier:
            nxt = []
            for i in frontier:
                if graph is None:
                    break
                for j in graph.neighbors(i):
                    j = int(j)
                    if j in member_set and j not in label:
                        label[j] = label[i]
                        nxt.append(j)
            frontier = nxt

        # disconnected leftovers attach to the nearest seed
        for m in members:
            m = int(m)
            if m not in label:
                d = np.linalg.norm(p.x[seeds] - p.x[m], axis=1)
                label[m] = int(np.argmin(d))

        fragments = [[] for _ in range(n_seeds)]
        for m in members:
            fragments[label[int(m)]].append(int(m))
        return [f for f in fragments if f]

    # ---- skinning inputs ----

    def _update_rotation_deltas(self):
        p = self.particles
        # deformables first: neighborhood polar fit over the merged graph;
        # rigid particles then take their cluster's fitted rotation, which
        # overrides whatever the graph pass wrote for them
        graph = self.constraints.graph
        if graph is not None and np.any(p.phase == Phase.DEFORMABLE):
            self.kernels.local_rotations(p.x, p.x0, graph.offsets, graph.indices, p.delta_rot)
        for cl in self.constraints.clusters:
            rigid = p.phase[cl.members] == Phase.RIGID
            if not np.any(rigid):
                continue
            sizes = cl.sizes()
            rep = np.repeat(np.arange(cl.count), sizes)
            p.delta_rot[cl.members[rigid]] = cl.rot[rep[rigid]]

    def particle_deltas(self):
        """(ΔT, ΔR) against rest: the skinning inputs."""
        p = self.particles
        return (p.x - p.x0), p.delta_rot.copy()


def project_granular_contacts(particles, radius, mu, kernels=None):
    """Single uniform-radius contact projection pass over a ParticleSet.

    One Jacobi sweep: overlapping pairs separate along their axis weighted by
    inverse mass; tangential motion is reduced by the μ Coulomb rule."""
    kern = kernels if kernels is not None else default_kernels
    n = len(particles)
    tree = cKDTree(particles.x)
    pairs = tree.query_pairs(2.0 * radius, output_type="ndarray")
    delta = np.zeros((n, 3), dtype=np.float64)
    count = np.zeros(n, dtype=np.int32)
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        radii = np.full(n, radius, dtype=np.float64)
        mu_arr = np.full(n, mu, dtype=np.float64)
        kern.project_contacts(
            particles.x, particles.prev, particles.inv_mass,
            pairs[:, 0].astype(np.int32), pairs[:, 1].astype(np.int32),
            radii, mu_arr, delta, count,
        )
    particles.x += delta / np.maximum(count, 1)[:, None]
