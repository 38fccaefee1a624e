"""Shared fixtures: synthetic scenes, cameras, cups and classifiers."""

import numpy as np
import pytest

from splatphys import quatmath
from splatphys.segment.cameras import CameraView
from splatphys.splat.scene import SplatScene


def random_scene(rng, n, feature_dim=None, spread=1.0):
    """Valid random scene centered near the origin."""
    positions = rng.normal(scale=spread, size=(n, 3))
    scales = rng.uniform(0.01, 0.2, size=(n, 3))
    rotations = quatmath.random_unit(rng, n)
    opacities = rng.uniform(0.05, 1.0, size=n)
    sh_dc = rng.normal(size=(n, 3))
    features = rng.normal(size=(n, feature_dim)) if feature_dim else None
    return SplatScene(positions, scales, rotations, opacities, sh_dc, features=features)


def point_scene(points, color=None, object_ids=None, scale=0.05, features=None, opacity=0.9):
    """Isotropic kernels at given points; identity rotations."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    rot = np.zeros((n, 4), dtype=np.float32)
    rot[:, 0] = 1.0
    sh_dc = np.tile(np.asarray(color if color is not None else [0.5, 0.5, 0.5], np.float32), (n, 1))
    return SplatScene(
        points,
        np.full((n, 3), scale, dtype=np.float32),
        rot,
        np.full(n, opacity, dtype=np.float32),
        sh_dc,
        object_ids=object_ids,
        features=features,
    )


def look_at_view(eye, target, width=128, height=128, fx=128.0, fy=None, up=(0, 1, 0), mask=None):
    """World-to-camera view: +z forward, +x right, +y down (image v grows down)."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    r = np.stack([right, down, fwd])
    return CameraView(
        fx=fx,
        fy=fy if fy is not None else fx,
        cx=width / 2.0,
        cy=height / 2.0,
        width=width,
        height=height,
        rotation=r,
        translation=-r @ eye,
        mask=mask,
    )


def cup_cell_sets(n_r=8, wall=2, height=20, powder_level=10, pad=0):
    """Open-cup occupancy in cell-index space (up = +y).

    Returns dict of {occupied, under_powder, above_powder} boolean masks over
    a (nx, ny, nz) grid, before any voxelizer padding. The cup: bottom slab,
    cylindrical wall, and a one-cell powder surface layer at powder_level.
    """
    size_xz = 2 * (n_r + wall) + 1
    cx = cz = n_r + wall
    nx, ny, nz = size_xz + 2 * pad, height + 2 * pad, size_xz + 2 * pad
    occ = np.zeros((nx, ny, nz), dtype=bool)
    under = np.zeros_like(occ)
    above = np.zeros_like(occ)

    xs, zs = np.meshgrid(np.arange(size_xz), np.arange(size_xz), indexing="ij")
    rr = np.sqrt((xs - cx) ** 2 + (zs - cz) ** 2)
    inside = rr <= n_r - 0.5
    wall_ring = (rr > n_r - 0.5) & (rr <= n_r + wall - 0.5)

    for y in range(height):
        sl = occ[pad : pad + size_xz, pad + y, pad : pad + size_xz]
        if y < wall:  # bottom slab
            sl |= inside | wall_ring
        else:
            sl |= wall_ring
        if y == powder_level:
            sl |= inside
        if wall <= y < powder_level:
            under[pad : pad + size_xz, pad + y, pad : pad + size_xz] |= inside
        if powder_level < y < height:
            above[pad : pad + size_xz, pad + y, pad : pad + size_xz] |= inside
    return {"occupied": occ, "under_powder": under, "above_powder": above}


def cells_to_points(mask, h, origin=(0.0, 0.0, 0.0)):
    """One point per True cell, at the cell center."""
    idx = np.argwhere(mask)
    return np.asarray(origin, dtype=np.float64) + (idx + 0.5) * h


def embed_cells(grid, cell_mask, occupied_mask, padding=2):
    """Map a cell mask from shape-builder index space into grid index space.

    The voxelizer origin sits at the occupied AABB minus `padding` cells, so
    builder indices shift by (padding − occupied.min)."""
    off = padding - np.argwhere(occupied_mask).min(axis=0)
    out = np.zeros(grid.dims, dtype=bool)
    idx = np.argwhere(cell_mask) + off
    out[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return out


def flood_fill_exterior(occ):
    """Empty cells reachable from the grid boundary through 6-neighbors.

    Brute-force oracle: interior = empty & ~reachable."""
    from collections import deque

    occ = np.asarray(occ, dtype=bool)
    nx, ny, nz = occ.shape
    seen = np.zeros_like(occ)
    dq = deque()
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if (x in (0, nx - 1) or y in (0, ny - 1) or z in (0, nz - 1)) and not occ[x, y, z]:
                    if not seen[x, y, z]:
                        seen[x, y, z] = True
                        dq.append((x, y, z))
    while dq:
        x, y, z = dq.popleft()
        for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            a, b, c = x + dx, y + dy, z + dz
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz and not occ[a, b, c] and not seen[a, b, c]:
                seen[a, b, c] = True
                dq.append((a, b, c))
    return seen


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
