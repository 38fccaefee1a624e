"""Vectorized quaternion and rotation helpers.

Quaternions are stored (w, x, y, z) everywhere in this package, matching the
3DGS PLY convention. All functions broadcast over leading dimensions.
"""

import numpy as np


def normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / np.where(n == 0.0, 1.0, n)


def conjugate(q):
    q = np.asarray(q)
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def multiply(a, b):
    """Hamilton product a ⊗ b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def rotate(q, v):
    """Apply the rotation q to vectors v (the q v q⁻¹ sandwich)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = q[..., 1:]
    w = q[..., 0:1]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def to_matrix(q):
    q = normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def from_matrix(m):
    """Rotation matrix → unit quaternion (branch per largest diagonal term)."""
    m = np.asarray(m, dtype=np.float64)
    batch = m.shape[:-2]
    m = m.reshape((-1, 3, 3))
    n = m.shape[0]
    q = np.empty((n, 4), dtype=np.float64)
    trace = m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2]

    c0 = trace > 0
    s = np.sqrt(np.where(c0, trace + 1.0, 1.0)) * 2.0
    q[c0, 0] = 0.25 * s[c0]
    q[c0, 1] = (m[c0, 2, 1] - m[c0, 1, 2]) / s[c0]
    q[c0, 2] = (m[c0, 0, 2] - m[c0, 2, 0]) / s[c0]
    q[c0, 3] = (m[c0, 1, 0] - m[c0, 0, 1]) / s[c0]

    c1 = ~c0 & (m[:, 0, 0] > m[:, 1, 1]) & (m[:, 0, 0] > m[:, 2, 2])
    s = np.sqrt(np.where(c1, 1.0 + m[:, 0, 0] - m[:, 1, 1] - m[:, 2, 2], 1.0)) * 2.0
    q[c1, 0] = (m[c1, 2, 1] - m[c1, 1, 2]) / s[c1]
    q[c1, 1] = 0.25 * s[c1]
    q[c1, 2] = (m[c1, 0, 1] + m[c1, 1, 0]) / s[c1]
    q[c1, 3] = (m[c1, 0, 2] + m[c1, 2, 0]) / s[c1]

    c2 = ~c0 & ~c1 & (m[:, 1, 1] > m[:, 2, 2])
    s = np.sqrt(np.where(c2, 1.0 + m[:, 1, 1] - m[:, 0, 0] - m[:, 2, 2], 1.0)) * 2.0
    q[c2, 0] = (m[c2, 0, 2] - m[c2, 2, 0]) / s[c2]
    q[c2, 1] = (m[c2, 0, 1] + m[c2, 1, 0]) / s[c2]
    q[c2, 2] = 0.25 * s[c2]
    q[c2, 3] = (m[c2, 1, 2] + m[c2, 2, 1]) / s[c2]

    c3 = ~c0 & ~c1 & ~c2
    s = np.sqrt(np.where(c3, 1.0 + m[:, 2, 2] - m[:, 0, 0] - m[:, 1, 1], 1.0)) * 2.0
    q[c3, 0] = (m[c3, 1, 0] - m[c3, 0, 1]) / s[c3]
    q[c3, 1] = (m[c3, 0, 2] + m[c3, 2, 0]) / s[c3]
    q[c3, 2] = (m[c3, 1, 2] + m[c3, 2, 1]) / s[c3]
    q[c3, 3] = 0.25 * s[c3]

    return normalize(q).reshape(batch + (4,))


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    angle = np.asarray(angle, dtype=np.float64)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = angle / 2.0
    w = np.cos(half)[..., None]
    xyz = axis * np.sin(half)[..., None]
    return np.concatenate([w, xyz], axis=-1)


def random_unit(rng, n=None):
    """Uniform random unit quaternions (w kept non-negative)."""
    shape = (4,) if n is None else (n, 4)
    q = rng.normal(size=shape)
    q = normalize(q)
    w = q[..., 0:1]
    return np.where(w < 0, -q, q)


def distance(a, b):
    """Sign-insensitive quaternion distance: min(|a−b|, |a+b|)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d1 = np.linalg.norm(a - b, axis=-1)
    d2 = np.linalg.norm(a + b, axis=-1)
    return np.minimum(d1, d2)


def polar_rotation(a):
    """Rotational part of 3×3 matrices via SVD, det forced to +1.

    Batched; used by the pure solver backend and as the test oracle for the
    compiled iterative extraction.
    """
    a = np.asarray(a, dtype=np.float64)
    u, _, vt = np.linalg.svd(a)
    r = u @ vt
    det = np.linalg.det(r)
    flip = det < 0
    if np.any(flip):
        u = u.copy()
        u[flip, :, -1] *= -1.0
        r = u @ vt
    return r
