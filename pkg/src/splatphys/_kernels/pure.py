"""Pure numpy implementations of the hot kernels.

This is the fallback backend: identical contracts to the compiled module in
``_native.pyx``, selected at import time by ``splatphys._kernels``. Everything
here is vectorized; scatter accumulation uses ``np.add.at`` so results do not
depend on constraint order beyond float summation order, which is fixed.
"""

import numpy as np

from splatphys.quatmath import from_matrix as _from_matrix

BACKEND = "pure"

_EPS_BLEND = 1e-8


def skin_kernels(idx, w, xd, rest_pos, rest_rot, d_t, d_r, out_pos, out_rot):
    """Blend per-particle deltas onto kernels (weights, quaternion blend, and
    the rotation-induced translation of the rest offsets).

    Returns the number of kernels that hit the antipodal-cancellation
    fallback (blended quaternion norm ~ 0).
    """
    dT = d_t[idx]  # (N, m, 3)
    dR = d_r[idx]  # (N, m, 4)

    tb = np.einsum("nm,nmk->nk", w, dT)

    # sign-align every delta quaternion to the first (largest-weight) one
    ref = dR[:, 0:1, :]
    sign = np.where(np.sum(dR * ref, axis=-1, keepdims=True) >= 0.0, 1.0, -1.0)
    sign = sign.astype(dR.dtype)
    qb = np.einsum("nm,nmk->nk", w, sign * dR)

    # rotation-induced translation: w·(ΔR xd ΔR⁻¹ − xd)
    u = dR[..., 1:]
    qw = dR[..., 0:1]
    t = 2.0 * np.cross(u, xd)
    rotated = xd + qw * t + np.cross(u, t)
    tq = np.einsum("nm,nmk->nk", w, rotated - xd)

    norm = np.linalg.norm(qb, axis=-1)
    fallback = norm < _EPS_BLEND
    n_fallback = int(np.count_nonzero(fallback))
    if n_fallback:
        qb[fallback] = dR[fallback, 0]
        norm = np.linalg.norm(qb, axis=-1)
    qb = qb / np.where(norm == 0.0, 1.0, norm)[:, None]

    out_pos[:] = rest_pos + tb + tq

    # compose blended delta onto the rest rotation: qb ⊗ rest_rot
    aw, ax, ay, az = qb[:, 0], qb[:, 1], qb[:, 2], qb[:, 3]
    bw, bx, by, bz = rest_rot[:, 0], rest_rot[:, 1], rest_rot[:, 2], rest_rot[:, 3]
    out_rot[:, 0] = aw * bw - ax * bx - ay * by - az * bz
    out_rot[:, 1] = aw * bx + ax * bw + ay * bz - az * by
    out_rot[:, 2] = aw * by - ax * bz + ay * bw + az * bx
    out_rot[:, 3] = aw * bz + ax * by - ay * bx + az * bw
    return n_fallback


def project_distance(pos, inv_mass, ci, cj, rest, stiffness, delta, count):
    """Accumulate PBD distance-constraint corrections (Jacobi gather)."""
    d = pos[ci] - pos[cj]
    length = np.linalg.norm(d, axis=-1)
    wi = inv_mass[ci]
    wj = inv_mass[cj]
    wsum = wi + wj
    ok = (length > 1e-12) & (wsum > 0.0)
    scale = np.where(ok, stiffness * (length - rest) / np.where(ok, length * wsum, 1.0), 0.0)
    corr = d * scale[:, None]
    np.add.at(delta, ci, -wi[:, None] * corr)
    np.add.at(delta, cj, wj[:, None] * corr)
    np.add.at(count, ci, 1)
    np.add.at(count, cj, 1)


def project_contacts(pos, prev_pos, inv_mass, pi, pj, radii, mu, delta, count):
    """Separate overlapping particle pairs and apply position-based Coulomb
    friction on the tangential relative displacement of this substep.

    `radii` and `mu` are per-particle; the pair friction coefficient is the
    geometric mean."""
    if len(pi) == 0:
        return
    d = pos[pi] - pos[pj]
    dist = np.linalg.norm(d, axis=-1)
    pen = radii[pi] + radii[pj] - dist
    wi = inv_mass[pi]
    wj = inv_mass[pj]
    wsum = wi + wj
    active = (pen > 0.0) & (wsum > 0.0)
    if not np.any(active):
        return
    pi = pi[active]
    pj = pj[active]
    d = d[active]
    dist = dist[active]
    pen = pen[active]
    wi = wi[active]
    wj = wj[active]
    wsum = wsum[active]

    # coincident centers: separate along x deterministically
    degen = dist < 1e-12
    n = np.where(degen[:, None], np.array([1.0, 0.0, 0.0]), d / np.where(degen, 1.0, dist)[:, None])

    corr_i = (wi / wsum)[:, None] * pen[:, None] * n
    corr_j = -(wj / wsum)[:, None] * pen[:, None] * n

    mu_pair = np.sqrt(mu[pi] * mu[pj])
    dx = (pos[pi] - prev_pos[pi]) - (pos[pj] - prev_pos[pj])
    dxt = dx - np.sum(dx * n, axis=-1, keepdims=True) * n
    tnorm = np.linalg.norm(dxt, axis=-1)
    slip = (tnorm > 1e-12) & (mu_pair > 0.0)
    # static regime removes all tangential motion, dynamic clamps to μ·pen
    f = dxt * np.where(slip, np.minimum(mu_pair * pen / np.where(slip, tnorm, 1.0), 1.0), 0.0)[:, None]
    corr_i -= (wi / wsum)[:, None] * f
    corr_j += (wj / wsum)[:, None] * f

    np.add.at(delta, pi, corr_i)
    np.add.at(delta, pj, corr_j)
    np.add.at(count, pi, 1)
    np.add.at(count, pj, 1)


def _polar_rotation_batch(a):
    u, _, vt = np.linalg.svd(a)
    r = u @ vt
    flip = np.linalg.det(r) < 0
    if np.any(flip):
        u = u.copy()
        u[flip, :, -1] *= -1.0
        r = u @ vt
    return r


def _quat_to_mat(q):
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


def _mat_to_quat(m):
    return _from_matrix(m)


def shape_match(
    pos,
    mass,
    inv_mass,
    rest,
    rest_centroid,
    offsets,
    members,
    plastic,
    rot,
    stiffness,
    delta,
    count,
    stress,
    apq_out,
):
    """Per-cluster least-squares rigid fit; accumulates goal corrections.

    ``rot`` holds the per-cluster rotation (warm start in, fitted rotation
    out). ``apq_out`` receives the raw moment matrix for the plasticity
    update which lives in the engine layer. Returns the number of clusters
    whose fit degenerated (rank ≤ 1 moment: collinear or coincident) and
    kept their previous rotation.
    """
    n_clusters = len(offsets) - 1
    n_degenerate = 0
    for k in range(n_clusters):
        mem = members[offsets[k] : offsets[k + 1]]
        m = mass[mem]
        msum = m.sum()
        if msum <= 0.0 or len(mem) < 3:
            continue
        x = pos[mem]
        c = (m[:, None] * x).sum(axis=0) / msum
        q = rest[mem] - rest_centroid[k]
        qt = q @ plastic[k].T
        px = x - c
        apq = (m[:, None] * px).T @ qt
        apq_out[k] = apq

        # collinear/coincident spread: keep the previous rotation
        s = np.linalg.svd(apq, compute_uv=False)
        if s[0] < 1e-12 or s[1] < 1e-9 * s[0]:
            r = _quat_to_mat(rot[k])
            n_degenerate += 1
        else:
            r = _polar_rotation_batch(apq[None])[0]
            rot[k] = _mat_to_quat(r[None])[0]

        goal = qt @ r.T + c
        corr = goal - x
        stress[mem] += np.linalg.norm(corr, axis=-1)
        movable = inv_mass[mem] > 0.0
        tgt = mem[movable]
        np.add.at(delta, tgt, stiffness[k] * corr[movable])
        np.add.at(count, tgt, 1)
    return n_degenerate


def local_rotations(pos, rest, offsets, neighbors, quat):
    """Per-particle rotation from the local deformation of its neighborhood.

    Polar decomposition of A_i = Σ_j (x_j − x_i)(x0_j − x0_i)ᵀ; degenerate
    neighborhoods keep their previous quaternion.
    """
    n = len(pos)
    counts = np.diff(offsets)
    if counts.max(initial=0) == 0:
        return
    src = np.repeat(np.arange(n), counts)
    dst = neighbors
    dx = pos[dst] - pos[src]
    d0 = rest[dst] - rest[src]
    a_flat = dx[:, :, None] * d0[:, None, :]
    a = np.zeros((n, 3, 3), dtype=np.float64)
    np.add.at(a, src, a_flat)

    svals = np.linalg.svd(a, compute_uv=False)
    ok = (counts >= 2) & (svals[:, 0] > 1e-12) & (svals[:, 1] > 1e-9 * svals[:, 0])
    if not np.any(ok):
        return
    r = _polar_rotation_batch(a[ok])
    quat[ok] = _mat_to_quat(r)
