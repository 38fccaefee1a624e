"""Constraint containers: distance, shape-matching clusters, contacts."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DistanceConstraints:
    i: np.ndarray  # (C,) int32
    j: np.ndarray
    rest: np.ndarray  # (C,) float64
    stiffness: float = 1.0

    def __post_init__(self):
        self.i = np.ascontiguousarray(self.i, dtype=np.int32)
        self.j = np.ascontiguousarray(self.j, dtype=np.int32)
        self.rest = np.ascontiguousarray(self.rest, dtype=np.float64)
        if np.any(self.rest <= 0.0):
            raise ValueError("rest lengths must be positive")
        if not 0.0 <= self.stiffness <= 1.0:
            raise ValueError("stiffness must lie in [0,1]")

    def __len__(self):
        return len(self.i)

    def offset(self, by):
        return DistanceConstraints(self.i + by, self.j + by, self.rest, self.stiffness)


class ClusterSet:
    """Shape-matching clusters in CSR form over global particle indices.

    Per cluster: warm-started rotation, plastic state (det = 1), stiffness,
    plasticity yield/absorb parameters, and optional fracture settings.
    """

    def __init__(self, offsets, members, rest_positions, masses, stiffness,
                 yield_threshold=None, absorb_rate=None, fragile=None,
                 force_threshold=None, object_id=None):
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.members = np.ascontiguousarray(members, dtype=np.int32)
        k = len(self.offsets) - 1
        self.rot = np.zeros((k, 4), dtype=np.float64)
        self.rot[:, 0] = 1.0
        self.plastic = np.tile(np.eye(3, dtype=np.float64), (k, 1, 1))
        self.stiffness = np.broadcast_to(
            np.asarray(stiffness, dtype=np.float64), (k,)
        ).copy()
        self.yield_threshold = (
            np.broadcast_to(np.asarray(yield_threshold, dtype=np.float64), (k,)).copy()
            if yield_threshold is not None
            else np.full(k, np.inf)
        )
        self.absorb_rate = (
            np.broadcast_to(np.asarray(absorb_rate, dtype=np.float64), (k,)).copy()
            if absorb_rate is not None
            else np.zeros(k)
        )
        self.fragile = (
            np.broadcast_to(np.asarray(fragile, dtype=bool), (k,)).copy()
            if fragile is not None
            else np.zeros(k, dtype=bool)
        )
        self.force_threshold = (
            np.broadcast_to(np.asarray(force_threshold, dtype=np.float64), (k,)).copy()
            if force_threshold is not None
            else np.full(k, np.inf)
        )
        self.object_id = (
            np.broadcast_to(np.asarray(object_id, dtype=np.int32), (k,)).copy()
            if object_id is not None
            else np.zeros(k, dtype=np.int32)
        )
        self.rest_centroid = np.zeros((k, 3), dtype=np.float64)
        self._compute_rest_centroids(rest_positions, masses)

    def _compute_rest_centroids(self, rest_positions, masses):
        for k in range(self.count):
            mem = self.member_slice(k)
            m = masses[mem]
            self.rest_centroid[k] = (m[:, None] * rest_positions[mem]).sum(axis=0) / m.sum()

    @property
    def count(self):
        return len(self.offsets) - 1

    def member_slice(self, k):
        return self.members[self.offsets[k] : self.offsets[k + 1]]

    def sizes(self):
        return np.diff(self.offsets)


@dataclass
class ContactGroup:
    """Particles participating in pairwise contact (granular/rigid/projectile)."""

    indices: np.ndarray  # global particle indices, int32
    mu: float = 0.3

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int32)


@dataclass
class NeighborGraph:
    """CSR adjacency over global particle indices (deformable local rotation
    estimation and fracture region growing)."""

    offsets: np.ndarray  # (N+1,) int64, N = global particle count
    indices: np.ndarray  # int32

    def __post_init__(self):
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int32)

    @staticmethod
    def empty(n):
        return NeighborGraph(np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int32))

    @staticmethod
    def from_pairs(n, pairs_i, pairs_j):
        """Symmetric adjacency from an edge list."""
        src = np.concatenate([pairs_i, pairs_j])
        dst = np.concatenate([pairs_j, pairs_i])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return NeighborGraph(offsets, dst.astype(np.int32))

    def neighbors(self, i):
        return self.indices[self.offsets[i] : self.offsets[i + 1]]


@dataclass
class ConstraintSet:
    """Everything the engine projects each substep."""

    distance: list = field(default_factory=list)  # DistanceConstraints
    clusters: list = field(default_factory=list)  # ClusterSet
    contacts: list = field(default_factory=list)  # ContactGroup
    graph: NeighborGraph | None = None  # merged adjacency (all particles)
