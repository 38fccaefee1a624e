"""Occupancy voxel grid over a point set."""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class CellState(IntEnum):
    EXTERIOR = 0
    OCCUPIED = 1
    INTERIOR_6 = 2
    ABOVE_SURFACE_5 = 3
    SURFACE = 4


@dataclass
class VoxelGrid:
    origin: np.ndarray  # (3,) world position of the (0,0,0) cell corner
    spacing: float
    state: np.ndarray  # (nx, ny, nz) uint8 CellState

    @property
    def dims(self):
        return self.state.shape

    def cell_index(self, points):
        """(N,3) integer cell indices; points outside get out-of-range indices.

        A tiny positive nudge makes points sitting exactly on a cell boundary
        land deterministically in the upper cell, so classification does not
        depend on float rounding of the grid origin."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.floor((p - self.origin) / self.spacing + 1e-9).astype(np.int64)

    def cell_center(self, ijk):
        ijk = np.atleast_2d(np.asarray(ijk, dtype=np.float64))
        return self.origin + (ijk + 0.5) * self.spacing

    def counts(self):
        vals, n = np.unique(self.state, return_counts=True)
        return {CellState(v).name.lower(): int(c) for v, c in zip(vals, n)}


def voxelize(points, h, padding=2):
    """Grid covering the AABB of `points` plus `padding` empty cells per side;
    cells containing at least one point are OCCUPIED."""
    if h <= 0:
        raise ValueError(f"spacing must be positive, got {h}")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(points) == 0:
        raise ValueError("cannot voxelize an empty point set")
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    # the extra half-cell keeps the grid origin off the minimum point, so
    # lattice-like inputs (eg. voxel-center resamples) sit at cell centers
    # instead of straddling boundaries under float32 rounding
    inner = np.floor((hi - lo) / h + 0.5).astype(np.int64) + 1
    dims = inner + 2 * padding
    origin = lo - (padding + 0.5) * h

    state = np.zeros(tuple(dims), dtype=np.uint8)
    grid = VoxelGrid(origin=origin, spacing=float(h), state=state)
    idx = np.clip(grid.cell_index(points), 0, dims - 1)  # guard the max face
    state[idx[:, 0], idx[:, 1], idx[:, 2]] = CellState.OCCUPIED
    return grid
