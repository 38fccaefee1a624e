"""Particle and constraint generation per material category.

Rigid objects get surface particles only (occupied shell cells) under one
shape-matching cluster; deformables are volume-filled (occupied + interior)
with 6-neighbor distance constraints and one overlapping cluster per cell;
granular objects get one contact particle per granule kernel.
"""

import numpy as np
from scipy import ndimage

from splatphys.fill.classify import classify_interior_6dir
from splatphys.fill.grid import CellState, voxelize
from splatphys.solver.constraints import (
    ClusterSet,
    ConstraintSet,
    ContactGroup,
    DistanceConstraints,
    NeighborGraph,
)
from splatphys.solver.particles import ParticleSet, Phase

_CROSS = ndimage.generate_binary_structure(3, 1)


_AXIS_STEPS = [np.array(s) for s in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
# the 13 "upper half" offsets of the 26-neighborhood
_FULL_STEPS = [
    np.array((dx, dy, dz))
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
]


def _neighbor_pairs(cells, steps):
    """Edge list between cells adjacent under the given half-offsets."""
    index_of = {tuple(c): i for i, c in enumerate(cells)}
    pi, pj = [], []
    for step in steps:
        for i, c in enumerate(cells):
            j = index_of.get(tuple(c + step))
            if j is not None:
                pi.append(i)
                pj.append(j)
    return np.asarray(pi, dtype=np.int64), np.asarray(pj, dtype=np.int64)


def _shell_cells(grid):
    occ = grid.state == CellState.OCCUPIED
    interior_like = occ | (grid.state == CellState.INTERIOR_6)
    eroded = ndimage.binary_erosion(interior_like, structure=_CROSS, border_value=0)
    return np.argwhere(occ & ~eroded)


def generate_particles(object_scene, category, h, fill_report=None, object_id=0):
    """Returns (ParticleSet, ConstraintSet) for one object.

    `category` ∈ {"rigid", "deformation", "granular"}. Granular generation
    is 1:1 with granule kernels and requires the scene to come out of
    fill_granular (pass its report).
    """
    if len(object_scene) == 0:
        raise ValueError("cannot generate particles for an empty object scene")

    if category == "granular":
        if fill_report is None:
            raise RuntimeError(
                "granular particle generation requires a filled granule scene "
                "(run fill_granular first and pass its report)"
            )
        positions = object_scene.positions.astype(np.float64)
        particles = ParticleSet(
            positions, object_ids=np.full(len(positions), object_id), phase=Phase.GRANULAR,
            radius=h / 2.0,
        )
        constraints = ConstraintSet(
            contacts=[ContactGroup(indices=np.arange(len(positions), dtype=np.int32))]
        )
        return particles, constraints

    grid = voxelize(object_scene.positions, h, padding=2)

    if category == "rigid":
        cells = _shell_cells(grid)
        positions = grid.cell_center(cells)
        particles = ParticleSet(
            positions, object_ids=np.full(len(positions), object_id), phase=Phase.RIGID,
            radius=h / 2.0,
        )
        offsets = np.asarray([0, len(positions)], dtype=np.int64)
        members = np.arange(len(positions), dtype=np.int32)
        clusters = ClusterSet(
            offsets, members, particles.x0, particles.mass, stiffness=1.0,
            object_id=object_id,
        )
        # 26-neighborhood adjacency: thin shells stay connected for fracture
        adj_i, adj_j = _neighbor_pairs(cells, _FULL_STEPS)
        graph = NeighborGraph.from_pairs(len(positions), adj_i, adj_j)
        constraints = ConstraintSet(
            clusters=[clusters],
            contacts=[ContactGroup(indices=members)],
            graph=graph,
        )
        return particles, constraints

    if category == "deformation":
        classify_interior_6dir(grid)
        cells = np.argwhere(
            (grid.state == CellState.OCCUPIED) | (grid.state == CellState.INTERIOR_6)
        )
        positions = grid.cell_center(cells)
        particles = ParticleSet(
            positions, object_ids=np.full(len(positions), object_id), phase=Phase.DEFORMABLE,
            radius=h / 2.0,
        )
        pi, pj = _neighbor_pairs(cells, _AXIS_STEPS)
        rest = np.full(len(pi), h, dtype=np.float64)
        distance = DistanceConstraints(pi, pj, rest)
        graph = NeighborGraph.from_pairs(len(positions), pi, pj)

        # one cluster per cell over itself + its 6-neighbors (clusters with
        # fewer than 3 members would be degenerate and are dropped)
        offsets = [0]
        members = []
        for i in range(len(positions)):
            group = [i] + graph.neighbors(i).tolist()
            if len(group) >= 3:
                members.extend(group)
                offsets.append(len(members))
        if len(offsets) == 1:
            raise RuntimeError(
                "deformable object produced no usable shape-matching clusters "
                "(too few connected cells at this h)"
            )
        clusters = ClusterSet(
            np.asarray(offsets, dtype=np.int64),
            np.asarray(members, dtype=np.int32),
            particles.x0,
            particles.mass,
            stiffness=1.0,
            object_id=object_id,
        )
        constraints = ConstraintSet(distance=[distance], clusters=[clusters], graph=graph)
        return particles, constraints

    raise ValueError(f"unknown material category: {category!r}")
