"""Static environment collision: consensus support plane + voxel signed
distance field."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass
class SupportPlane:
    normal: np.ndarray  # unit (3,)
    offset: float  # signed distance of plane from origin: n·x = offset

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=np.float64)
        n = np.linalg.norm(self.normal)
        if n == 0.0:
            raise ValueError("plane normal must be nonzero")
        self.offset = float(self.offset) / n
        self.normal = self.normal / n

    def signed_distance(self, points):
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset


def fit_support_plane(
    env_scene,
    inlier_tol=0.02,
    min_inlier_frac=0.25,
    iterations=256,
    seed=0,
    gravity=(0.0, -9.8, 0.0),
):
    """Consensus plane over environment kernel centers.

    Random 3-point hypotheses (seeded) scored by inlier count within
    `inlier_tol`, then least-squares refined over the winning inliers. The
    normal is oriented against gravity. Raises when no hypothesis reaches
    `min_inlier_frac`.
    """
    points = np.asarray(env_scene.positions if hasattr(env_scene, "positions") else env_scene,
                        dtype=np.float64)
    n = len(points)
    if n < 3:
        raise ValueError(f"need at least 3 points to fit a plane, got {n}")
    rng = np.random.default_rng(seed)

    best_count = -1
    best_mask = None
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        a, b, c = points[idx]
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal /= norm
        dist = np.abs((points - a) @ normal)
        mask = dist < inlier_tol
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask

    if best_mask is None or best_count < min_inlier_frac * n:
        raise RuntimeError(
            f"no support plane with ≥{min_inlier_frac:.0%} inliers "
            f"(best {best_count}/{n}); pass the plane explicitly"
        )

    # least-squares refinement: smallest principal direction of the inliers
    inliers = points[best_mask]
    centroid = inliers.mean(axis=0)
    _, _, vt = np.linalg.svd(inliers - centroid, full_matrices=False)
    normal = vt[2]
    up = -np.asarray(gravity, dtype=np.float64)
    if np.dot(normal, up) < 0:
        normal = -normal
    return SupportPlane(normal=normal, offset=float(normal @ centroid))


@dataclass
class DistanceField:
    origin: np.ndarray  # (3,) corner of cell (0,0,0)
    spacing: float
    values: np.ndarray  # (nx,ny,nz) float32, signed (negative inside)

    def _local(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        # continuous coordinates in cell units, sample points at cell centers
        return (p - self.origin) / self.spacing - 0.5

    def sample(self, points):
        """Trilinear interpolation; queries beyond the grid are clamped and
        padded with the straight-line distance to the clamp point."""
        q = self._local(points)
        dims = np.asarray(self.values.shape)
        qc = np.clip(q, 0.0, dims - 1.0)
        outside = np.linalg.norm((q - qc), axis=1) * self.spacing

        i0 = np.floor(qc).astype(np.int64)
        i0 = np.minimum(i0, dims - 2)
        f = qc - i0
        x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        v = self.values
        c00 = v[x0, y0, z0] * (1 - fx) + v[x0 + 1, y0, z0] * fx
        c10 = v[x0, y0 + 1, z0] * (1 - fx) + v[x0 + 1, y0 + 1, z0] * fx
        c01 = v[x0, y0, z0 + 1] * (1 - fx) + v[x0 + 1, y0, z0 + 1] * fx
        c11 = v[x0, y0 + 1, z0 + 1] * (1 - fx) + v[x0 + 1, y0 + 1, z0 + 1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        return c0 * (1 - fz) + c1 * fz + outside

    def gradient(self, points):
        """Central-difference gradient of the sampled field, normalized."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        h = 0.5 * self.spacing
        g = np.empty_like(p)
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            g[:, axis] = self.sample(p + e) - self.sample(p - e)
        norm = np.linalg.norm(g, axis=1, keepdims=True)
        return g / np.where(norm < 1e-12, 1.0, norm)


def build_sdf(env_scene, h, memory_budget_mb=512, padding=3):
    """Signed distance field of the environment.

    Occupancy: kernel centers dilated by each kernel's max scale. Unsigned
    distances from the exact Euclidean distance transform, negated inside.
    """
    positions = env_scene.positions.astype(np.float64)
    if len(positions) == 0:
        raise ValueError("cannot build a distance field from an empty scene")
    radii = env_scene.scales.astype(np.float64).max(axis=1)

    lo = (positions - radii[:, None]).min(axis=0)
    hi = (positions + radii[:, None]).max(axis=0)
    dims = np.floor((hi - lo) / h + 0.5).astype(np.int64) + 1 + 2 * padding
    bytes_needed = int(np.prod(dims)) * 4
    if bytes_needed > memory_budget_mb * 2**20:
        suggested = h * (bytes_needed / (memory_budget_mb * 2**20)) ** (1.0 / 3.0)
        raise MemoryError(
            f"SDF grid {tuple(dims)} needs {bytes_needed / 2**20:.0f} MiB "
            f"(budget {memory_budget_mb}); try h ≥ {suggested:.4f}"
        )
    origin = lo - (padding + 0.5) * h

    occ = np.zeros(tuple(dims), dtype=bool)
    centers_idx = np.floor((positions - origin) / h + 1e-9).astype(np.int64)
    reach = np.ceil(radii / h).astype(np.int64)
    for (ci, cj, ck), r, p, rad in zip(centers_idx, reach, positions, radii):
        occ[ci, cj, ck] = True  # the containing cell counts regardless of radius
        if r == 0:
            continue
        sl = tuple(
            slice(max(c - r, 0), min(c + r + 1, d)) for c, d in zip((ci, cj, ck), dims)
        )
        ii, jj, kk = np.mgrid[sl]
        cell_centers = origin + (np.stack([ii, jj, kk], axis=-1) + 0.5) * h
        inside = np.linalg.norm(cell_centers - p, axis=-1) <= rad
        occ[sl] |= inside

    d_out = ndimage.distance_transform_edt(~occ, sampling=h)
    d_in = ndimage.distance_transform_edt(occ, sampling=h)
    signed = (d_out - d_in).astype(np.float32)
    return DistanceField(origin=origin, spacing=float(h), values=signed)
