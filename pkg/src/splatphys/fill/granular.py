"""Granular kernel filling with attribute inheritance.

Pipeline: voxelize the object (content plus its container), classify
interior and above-surface cells, extract the content surface, then emit one
granule kernel per interior cell inheriting color/opacity/feature from the
nearest surface kernel. All granule scales are isotropized to min(s) and
multiplied by the overlap-control factor s_f.
"""

import numpy as np
from scipy.spatial import cKDTree

from splatphys.fill.classify import (
    classify_above_surface_5dir,
    classify_interior_6dir,
    extract_surface,
)
from splatphys.fill.grid import CellState, voxelize
from splatphys.splat.scene import SplatScene


def _nearest_surface(kernel_positions, query, k_tie=8):
    """Nearest surface-kernel index per query point, lowest index on ties."""
    tree = cKDTree(kernel_positions)
    k = min(k_tie, len(kernel_positions))
    dist, idx = tree.query(query, k=k)
    if k == 1:
        return np.atleast_1d(idx)
    dist = np.atleast_2d(dist)
    idx = np.atleast_2d(idx)
    best = dist[:, 0:1]
    tied = dist <= best + 1e-12
    masked = np.where(tied, idx, np.iinfo(np.int64).max)
    return masked.min(axis=1)


def fill_granular(
    object_scene,
    h,
    shrink=0.2,
    s_f=0.6,
    up_axis=1,
    up_sign=1,
    include_above_surface=False,
    padding=2,
):
    """Build the granule scene for a container-held granular object.

    Returns (granule SplatScene, fill report dict). The granule scene holds
    the surface kernels (shrunk-region copies) followed by one filling
    kernel per interior voxel, in lexicographic voxel order.
    """
    if s_f <= 0.0:
        raise ValueError(f"s_f must be positive, got {s_f}")
    grid = voxelize(object_scene.positions, h, padding=padding)
    classify_interior_6dir(grid)
    classify_above_surface_5dir(grid, up_axis=up_axis, up_sign=up_sign)
    surface_cells = extract_surface(grid, shrink=shrink, up_axis=up_axis)

    counts = grid.counts()
    if len(surface_cells) == 0:
        raise RuntimeError(
            "no content surface found (no above-surface region; is this an "
            f"open container scene?); voxel counts: {counts}"
        )

    surface_lookup = np.zeros(grid.dims, dtype=bool)
    surface_lookup[surface_cells[:, 0], surface_cells[:, 1], surface_cells[:, 2]] = True
    kernel_cells = grid.cell_index(object_scene.positions)
    on_surface = surface_lookup[kernel_cells[:, 0], kernel_cells[:, 1], kernel_cells[:, 2]]
    surface_kernel_idx = np.nonzero(on_surface)[0]
    if len(surface_kernel_idx) == 0:
        raise RuntimeError("surface voxels contain no kernels")

    fill_mask = grid.state == CellState.INTERIOR_6
    if include_above_surface:
        fill_mask |= grid.state == CellState.ABOVE_SURFACE_5
    fill_cells = np.argwhere(fill_mask)
    fill_centers = grid.cell_center(fill_cells) if len(fill_cells) else np.empty((0, 3))

    surf = object_scene.select(surface_kernel_idx)
    src = (
        _nearest_surface(surf.positions.astype(np.float64), fill_centers)
        if len(fill_centers)
        else np.empty(0, dtype=np.int64)
    )

    def isotropic(scales):
        return np.repeat(scales.min(axis=1, keepdims=True) * s_f, 3, axis=1)

    surf_part = SplatScene(
        surf.positions,
        isotropic(surf.scales.astype(np.float64)).astype(np.float32),
        surf.rotations,
        surf.opacities,
        surf.sh_dc,
        surf.sh_rest,
        surf.object_ids,
        surf.features,
    )

    n_fill = len(fill_cells)
    if n_fill:
        identity = np.zeros((n_fill, 4), dtype=np.float32)
        identity[:, 0] = 1.0
        fill_part = SplatScene(
            fill_centers.astype(np.float32),
            isotropic(surf.scales.astype(np.float64)[src]).astype(np.float32),
            identity,
            surf.opacities[src],
            surf.sh_dc[src],
            surf.sh_rest[src],
            surf.object_ids[src],
            None if surf.features is None else surf.features[src],
        )
        granules = SplatScene.concatenate([surf_part, fill_part])
    else:
        granules = surf_part

    report = {
        "voxel_counts": counts | {"surface": int(len(surface_cells))},
        "surface_kernels": int(len(surface_kernel_idx)),
        "fill_kernels": int(n_fill),
        "granule_kernels": int(len(granules)),
        "params": {
            "h": float(h),
            "shrink": float(shrink),
            "s_f": float(s_f),
            "up_axis": int(up_axis),
            "up_sign": int(up_sign),
            "include_above_surface": bool(include_above_surface),
        },
    }
    return granules, report
