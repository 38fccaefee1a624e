"""Interior / above-surface voxel classification and surface extraction.

Six axis rays mark enclosed empty cells INTERIOR_6. Open containers defeat
that test above their content, so a second pass drops the upward ray and
marks cells whose remaining five rays are all blocked ABOVE_SURFACE_5. The
content surface is then the occupied layer touching the above-surface
region, optionally shrunk horizontally to keep container walls out.
"""

import numpy as np
from scipy import ndimage

from splatphys.fill.grid import CellState

_CROSS = ndimage.generate_binary_structure(3, 1)  # 6-connectivity


def _blocked_along(occ, axis):
    """(toward_negative, toward_positive): does a ray from each cell hit an
    occupied cell before leaving the grid in that direction (cell excluded)."""
    acc_fwd = np.logical_or.accumulate(occ, axis=axis)
    neg = np.roll(acc_fwd, 1, axis=axis)
    idx = [slice(None)] * occ.ndim
    idx[axis] = 0
    neg[tuple(idx)] = False

    acc_bwd = np.flip(np.logical_or.accumulate(np.flip(occ, axis=axis), axis=axis), axis=axis)
    pos = np.roll(acc_bwd, -1, axis=axis)
    idx[axis] = occ.shape[axis] - 1
    pos[tuple(idx)] = False
    return neg, pos


def classify_interior_6dir(grid):
    """Mark empty cells whose six axis rays all hit OCCUPIED cells."""
    occ = grid.state == CellState.OCCUPIED
    empty = grid.state == CellState.EXTERIOR
    blocked = empty.copy()
    for axis in range(3):
        neg, pos = _blocked_along(occ, axis)
        blocked &= neg & pos
    grid.state[blocked] = CellState.INTERIOR_6
    return grid


def classify_above_surface_5dir(grid, up_axis=1, up_sign=1):
    """Mark empty, non-interior cells whose five non-upward rays are blocked.

    Rays count OCCUPIED and INTERIOR_6 cells as blockers; `up` is the
    gravity-opposite direction and is the one ray allowed to escape.
    """
    if up_axis not in (0, 1, 2) or up_sign not in (-1, 1):
        raise ValueError(f"invalid up direction: axis={up_axis} sign={up_sign}")
    solid = (grid.state == CellState.OCCUPIED) | (grid.state == CellState.INTERIOR_6)
    candidate = grid.state == CellState.EXTERIOR
    for axis in range(3):
        neg, pos = _blocked_along(solid, axis)
        if axis == up_axis:
            candidate &= pos if up_sign < 0 else neg  # keep only the downward ray
        else:
            candidate &= neg & pos
    grid.state[candidate] = CellState.ABOVE_SURFACE_5
    return grid


def extract_surface(grid, shrink=0.0, up_axis=1):
    """Occupied cells on the boundary against the ABOVE_SURFACE_5 region,
    horizontally restricted to the shrunk object AABB.

    Returns the (M,3) cell indices marked SURFACE. With no above-surface
    region the result is empty (content is probably not in an open
    container)."""
    if not 0.0 <= shrink < 0.5:
        raise ValueError(f"shrink must lie in [0, 0.5), got {shrink}")
    above = grid.state == CellState.ABOVE_SURFACE_5
    if not np.any(above):
        return np.empty((0, 3), dtype=np.int64)
    occ = grid.state == CellState.OCCUPIED
    touching = ndimage.binary_dilation(above, structure=_CROSS) & occ

    if shrink > 0.0:
        occ_idx = np.argwhere(occ)
        lo = occ_idx.min(axis=0).astype(np.float64)
        hi = occ_idx.max(axis=0).astype(np.float64)
        margin = shrink * (hi - lo)
        surf_idx = np.argwhere(touching)
        keep = np.ones(len(surf_idx), dtype=bool)
        for axis in range(3):
            if axis == up_axis:
                continue
            keep &= surf_idx[:, axis] >= lo[axis] + margin[axis]
            keep &= surf_idx[:, axis] <= hi[axis] - margin[axis]
        touching = np.zeros_like(touching)
        kept = surf_idx[keep]
        touching[kept[:, 0], kept[:, 1], kept[:, 2]] = True

    grid.state[touching] = CellState.SURFACE
    return np.argwhere(touching).astype(np.int64)
