"""Particle state for the PBD solver (struct-of-arrays, float64)."""

from enum import IntEnum

import numpy as np


class Phase(IntEnum):
    DEFORMABLE = 0
    RIGID = 1
    GRANULAR = 2
    PROJECTILE = 3


class ParticleSet:
    """Positions, velocities, masses and per-particle rotation deltas.

    `delta_rot` is the rotation change since rest (identity at frame 0);
    `x0` the rest position, so the translation delta is just x − x0.
    """

    def __init__(self, positions, masses=None, object_ids=None, phase=Phase.DEFORMABLE, radius=0.0):
        x = np.array(positions, dtype=np.float64, order="C", copy=True)
        if x.ndim != 2 or x.shape[1] != 3:
            raise ValueError(f"positions must be (N,3), got {x.shape}")
        n = len(x)
        self.x = x
        self.prev = x.copy()
        self.x0 = x.copy()
        self.v = np.zeros((n, 3), dtype=np.float64)
        self.mass = (
            np.ascontiguousarray(masses, dtype=np.float64)
            if masses is not None
            else np.ones(n, dtype=np.float64)
        )
        if np.any(self.mass < 0.0):
            raise ValueError("masses must be non-negative")
        with np.errstate(divide="ignore"):
            self.inv_mass = np.where(self.mass > 0.0, 1.0 / self.mass, 0.0)
        self.object_ids = (
            np.ascontiguousarray(object_ids, dtype=np.int32)
            if object_ids is not None
            else np.zeros(n, dtype=np.int32)
        )
        self.phase = np.full(n, int(phase), dtype=np.uint8) if np.isscalar(phase) or isinstance(
            phase, Phase
        ) else np.ascontiguousarray(phase, dtype=np.uint8)
        self.radius = (
            np.full(n, float(radius), dtype=np.float64)
            if np.isscalar(radius)
            else np.ascontiguousarray(radius, dtype=np.float64)
        )
        self.delta_rot = np.zeros((n, 4), dtype=np.float64)
        self.delta_rot[:, 0] = 1.0

    def __len__(self):
        return len(self.x)

    @property
    def count(self):
        return len(self.x)

    def set_mass(self, indices, per_particle_mass):
        self.mass[indices] = per_particle_mass
        with np.errstate(divide="ignore"):
            self.inv_mass[indices] = np.where(
                self.mass[indices] > 0.0, 1.0 / self.mass[indices], 0.0
            )

    def pin(self, indices):
        """Zero inverse mass: the particles become kinematic."""
        self.inv_mass[indices] = 0.0

    def momentum(self):
        return (self.mass[:, None] * self.v).sum(axis=0)

    def append(self, other):
        """Concatenate another set; returns the index offset of the new block."""
        offset = len(self)
        for name in ("x", "prev", "x0", "v", "delta_rot"):
            setattr(self, name, np.concatenate([getattr(self, name), getattr(other, name)]))
        for name in ("mass", "inv_mass", "object_ids", "phase", "radius"):
            setattr(self, name, np.concatenate([getattr(self, name), getattr(other, name)]))
        return offset

    @staticmethod
    def merge(sets):
        merged = ParticleSet(np.empty((0, 3)))
        offsets = []
        for s in sets:
            offsets.append(merged.append(s))
        return merged, offsets
