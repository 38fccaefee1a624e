# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: skinning blend, PBD projection, shape matching.

Same contracts as the pure numpy twin in ``pure.py``. Skinning parallelizes
over kernels with OpenMP (outputs are disjoint, so the result is identical
for any thread count); the solver kernels run serially so their accumulation
order is fixed.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, fabs, sin, cos

cnp.import_array()

BACKEND = "native"


cdef inline void _quat_rotate_f32(const float* q, const float* v, float* out) noexcept nogil:
    # q v q⁻¹ via t = 2 (q.xyz × v); out = v + w t + q.xyz × t
    cdef float tx = 2.0 * (q[2] * v[2] - q[3] * v[1])
    cdef float ty = 2.0 * (q[3] * v[0] - q[1] * v[2])
    cdef float tz = 2.0 * (q[1] * v[1] - q[2] * v[0])
    out[0] = v[0] + q[0] * tx + (q[2] * tz - q[3] * ty)
    out[1] = v[1] + q[0] * ty + (q[3] * tx - q[1] * tz)
    out[2] = v[2] + q[0] * tz + (q[1] * ty - q[2] * tx)


def skin_kernels(
    const int[:, ::1] idx,
    const float[:, ::1] w,
    const float[:, :, ::1] xd,
    const float[:, ::1] rest_pos,
    const float[:, ::1] rest_rot,
    const float[:, ::1] d_t,
    const float[:, ::1] d_r,
    float[:, ::1] out_pos,
    float[:, ::1] out_rot,
):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t m = idx.shape[1]
    cdef Py_ssize_t i, j
    cdef int p, ref
    cdef float tbx, tby, tbz, tqx, tqy, tqz
    cdef float qw, qx, qy, qz, wj, s, norm
    cdef float rw, rx, ry, rz, bw, bx, by, bz
    cdef float rv[3]
    cdef float q[4]
    cdef float v[3]
    cdef long n_fallback = 0

    with nogil:
        for i in prange(n, schedule="static"):
            ref = idx[i, 0]
            tbx = 0.0; tby = 0.0; tbz = 0.0
            tqx = 0.0; tqy = 0.0; tqz = 0.0
            qw = 0.0; qx = 0.0; qy = 0.0; qz = 0.0
            for j in range(m):
                p = idx[i, j]
                wj = w[i, j]
                tbx = tbx + wj * d_t[p, 0]
                tby = tby + wj * d_t[p, 1]
                tbz = tbz + wj * d_t[p, 2]
                q[0] = d_r[p, 0]; q[1] = d_r[p, 1]; q[2] = d_r[p, 2]; q[3] = d_r[p, 3]
                s = q[0] * d_r[ref, 0] + q[1] * d_r[ref, 1] + q[2] * d_r[ref, 2] + q[3] * d_r[ref, 3]
                s = 1.0 if s >= 0.0 else -1.0
                qw = qw + wj * s * q[0]
                qx = qx + wj * s * q[1]
                qy = qy + wj * s * q[2]
                qz = qz + wj * s * q[3]
                v[0] = xd[i, j, 0]; v[1] = xd[i, j, 1]; v[2] = xd[i, j, 2]
                _quat_rotate_f32(q, v, rv)
                tqx = tqx + wj * (rv[0] - v[0])
                tqy = tqy + wj * (rv[1] - v[1])
                tqz = tqz + wj * (rv[2] - v[2])

            norm = sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
            if norm < 1e-8:
                qw = d_r[ref, 0]; qx = d_r[ref, 1]; qy = d_r[ref, 2]; qz = d_r[ref, 3]
                n_fallback += 1
            else:
                qw = qw / norm; qx = qx / norm; qy = qy / norm; qz = qz / norm

            out_pos[i, 0] = rest_pos[i, 0] + tbx + tqx
            out_pos[i, 1] = rest_pos[i, 1] + tby + tqy
            out_pos[i, 2] = rest_pos[i, 2] + tbz + tqz

            rw = rest_rot[i, 0]; rx = rest_rot[i, 1]; ry = rest_rot[i, 2]; rz = rest_rot[i, 3]
            out_rot[i, 0] = qw * rw - qx * rx - qy * ry - qz * rz
            out_rot[i, 1] = qw * rx + qx * rw + qy * rz - qz * ry
            out_rot[i, 2] = qw * ry - qx * rz + qy * rw + qz * rx
            out_rot[i, 3] = qw * rz + qx * ry - qy * rx + qz * rw
    return int(n_fallback)


def project_distance(
    const double[:, ::1] pos,
    const double[::1] inv_mass,
    const int[::1] ci,
    const int[::1] cj,
    const double[::1] rest,
    double stiffness,
    double[:, ::1] delta,
    int[::1] count,
):
    cdef Py_ssize_t c, n_c = ci.shape[0]
    cdef int i, j
    cdef double dx, dy, dz, length, wi, wj, wsum, scale

    for c in range(n_c):
        i = ci[c]; j = cj[c]
        dx = pos[i, 0] - pos[j, 0]
        dy = pos[i, 1] - pos[j, 1]
        dz = pos[i, 2] - pos[j, 2]
        length = sqrt(dx * dx + dy * dy + dz * dz)
        wi = inv_mass[i]; wj = inv_mass[j]
        wsum = wi + wj
        if length <= 1e-12 or wsum <= 0.0:
            continue
        scale = stiffness * (length - rest[c]) / (length * wsum)
        delta[i, 0] -= wi * scale * dx
        delta[i, 1] -= wi * scale * dy
        delta[i, 2] -= wi * scale * dz
        delta[j, 0] += wj * scale * dx
        delta[j, 1] += wj * scale * dy
        delta[j, 2] += wj * scale * dz
        count[i] += 1
        count[j] += 1


def project_contacts(
    const double[:, ::1] pos,
    const double[:, ::1] prev_pos,
    const double[::1] inv_mass,
    const int[::1] pi,
    const int[::1] pj,
    const double[::1] radii,
    const double[::1] mu_arr,
    double[:, ::1] delta,
    int[::1] count,
):
    cdef Py_ssize_t c, n_c = pi.shape[0]
    cdef int i, j
    cdef double dx, dy, dz, dist, pen, wi, wj, wsum, fi, fj, mu
    cdef double nx, ny, nz, rx, ry, rz, rn, tx, ty, tz, tnorm, fscale

    for c in range(n_c):
        i = pi[c]; j = pj[c]
        dx = pos[i, 0] - pos[j, 0]
        dy = pos[i, 1] - pos[j, 1]
        dz = pos[i, 2] - pos[j, 2]
        dist = sqrt(dx * dx + dy * dy + dz * dz)
        pen = radii[i] + radii[j] - dist
        wi = inv_mass[i]; wj = inv_mass[j]
        wsum = wi + wj
        if pen <= 0.0 or wsum <= 0.0:
            continue
        if dist < 1e-12:
            nx = 1.0; ny = 0.0; nz = 0.0
        else:
            nx = dx / dist; ny = dy / dist; nz = dz / dist
        fi = wi / wsum
        fj = wj / wsum
        delta[i, 0] += fi * pen * nx
        delta[i, 1] += fi * pen * ny
        delta[i, 2] += fi * pen * nz
        delta[j, 0] -= fj * pen * nx
        delta[j, 1] -= fj * pen * ny
        delta[j, 2] -= fj * pen * nz

        mu = sqrt(mu_arr[i] * mu_arr[j])
        if mu > 0.0:
            rx = (pos[i, 0] - prev_pos[i, 0]) - (pos[j, 0] - prev_pos[j, 0])
            ry = (pos[i, 1] - prev_pos[i, 1]) - (pos[j, 1] - prev_pos[j, 1])
            rz = (pos[i, 2] - prev_pos[i, 2]) - (pos[j, 2] - prev_pos[j, 2])
            rn = rx * nx + ry * ny + rz * nz
            tx = rx - rn * nx
            ty = ry - rn * ny
            tz = rz - rn * nz
            tnorm = sqrt(tx * tx + ty * ty + tz * tz)
            if tnorm > 1e-12:
                fscale = mu * pen / tnorm
                if fscale > 1.0:
                    fscale = 1.0
                delta[i, 0] -= fi * fscale * tx
                delta[i, 1] -= fi * fscale * ty
                delta[i, 2] -= fi * fscale * tz
                delta[j, 0] += fj * fscale * tx
                delta[j, 1] += fj * fscale * ty
                delta[j, 2] += fj * fscale * tz
        count[i] += 1
        count[j] += 1


cdef inline void _quat_to_mat_f64(const double* q, double* r) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    r[0] = 1 - 2 * (y * y + z * z); r[1] = 2 * (x * y - w * z); r[2] = 2 * (x * z + w * y)
    r[3] = 2 * (x * y + w * z); r[4] = 1 - 2 * (x * x + z * z); r[5] = 2 * (y * z - w * x)
    r[6] = 2 * (x * z - w * y); r[7] = 2 * (y * z + w * x); r[8] = 1 - 2 * (x * x + y * y)


cdef inline void _extract_rotation(const double* a, double* q, int max_iter) noexcept nogil:
    # Iterative rotation extraction warm-started from q (Mueller et al. 2016
    # style): rotate q by the torque-like axis between R's and A's columns.
    cdef double r[9]
    cdef double ox, oy, oz, denom, wmag, s, c, qw, qx, qy, qz, nw, nx, ny, nz, norm
    cdef int it
    for it in range(max_iter):
        _quat_to_mat_f64(q, r)
        # omega = Σ col_i(R) × col_i(A) / (|Σ col_i(R)·col_i(A)| + eps)
        ox = (r[3] * a[6] - r[6] * a[3]) + (r[4] * a[7] - r[7] * a[4]) + (r[5] * a[8] - r[8] * a[5])
        oy = (r[6] * a[0] - r[0] * a[6]) + (r[7] * a[1] - r[1] * a[7]) + (r[8] * a[2] - r[2] * a[8])
        oz = (r[0] * a[3] - r[3] * a[0]) + (r[1] * a[4] - r[4] * a[1]) + (r[2] * a[5] - r[5] * a[2])
        denom = fabs(
            r[0] * a[0] + r[3] * a[3] + r[6] * a[6]
            + r[1] * a[1] + r[4] * a[4] + r[7] * a[7]
            + r[2] * a[2] + r[5] * a[5] + r[8] * a[8]
        ) + 1e-9
        ox = ox / denom; oy = oy / denom; oz = oz / denom
        wmag = sqrt(ox * ox + oy * oy + oz * oz)
        if wmag < 1e-12:
            break
        # q ← axis_angle(omega) ⊗ q
        s = sin(0.5 * wmag)
        c = cos(0.5 * wmag)
        qw = c
        qx = s * ox / wmag; qy = s * oy / wmag; qz = s * oz / wmag
        nw = qw * q[0] - qx * q[1] - qy * q[2] - qz * q[3]
        nx = qw * q[1] + qx * q[0] + qy * q[3] - qz * q[2]
        ny = qw * q[2] - qx * q[3] + qy * q[0] + qz * q[1]
        nz = qw * q[3] + qx * q[2] - qy * q[1] + qz * q[0]
        norm = sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        q[0] = nw / norm; q[1] = nx / norm; q[2] = ny / norm; q[3] = nz / norm


def shape_match(
    const double[:, ::1] pos,
    const double[::1] mass,
    const double[::1] inv_mass,
    const double[:, ::1] rest,
    const double[:, ::1] rest_centroid,
    const long[::1] offsets,
    const int[::1] members,
    const double[:, :, ::1] plastic,
    double[:, ::1] rot,
    const double[::1] stiffness,
    double[:, ::1] delta,
    int[::1] count,
    double[::1] stress,
    double[:, :, ::1] apq_out,
):
    cdef Py_ssize_t k, n_clusters = offsets.shape[0] - 1
    cdef Py_ssize_t s, e, t
    cdef int i
    cdef double msum, cx, cy, cz, mi
    cdef double qx0, qy0, qz0, qtx, qty, qtz
    cdef double px, py, pz
    cdef double apq[9]
    cdef double r[9]
    cdef double qq[4]
    cdef double gx, gy, gz, dx, dy, dz, mag, st
    cdef double fro, cof
    cdef long n_degenerate = 0

    for k in range(n_clusters):
        s = offsets[k]; e = offsets[k + 1]
        if e - s < 3:
            continue
        msum = 0.0; cx = 0.0; cy = 0.0; cz = 0.0
        for t in range(s, e):
            i = members[t]
            mi = mass[i]
            msum += mi
            cx += mi * pos[i, 0]; cy += mi * pos[i, 1]; cz += mi * pos[i, 2]
        if msum <= 0.0:
            continue
        cx /= msum; cy /= msum; cz /= msum

        for t in range(9):
            apq[t] = 0.0
        for t in range(s, e):
            i = members[t]
            mi = mass[i]
            qx0 = rest[i, 0] - rest_centroid[k, 0]
            qy0 = rest[i, 1] - rest_centroid[k, 1]
            qz0 = rest[i, 2] - rest_centroid[k, 2]
            qtx = plastic[k, 0, 0] * qx0 + plastic[k, 0, 1] * qy0 + plastic[k, 0, 2] * qz0
            qty = plastic[k, 1, 0] * qx0 + plastic[k, 1, 1] * qy0 + plastic[k, 1, 2] * qz0
            qtz = plastic[k, 2, 0] * qx0 + plastic[k, 2, 1] * qy0 + plastic[k, 2, 2] * qz0
            px = mi * (pos[i, 0] - cx); py = mi * (pos[i, 1] - cy); pz = mi * (pos[i, 2] - cz)
            apq[0] += px * qtx; apq[1] += px * qty; apq[2] += px * qtz
            apq[3] += py * qtx; apq[4] += py * qty; apq[5] += py * qtz
            apq[6] += pz * qtx; apq[7] += pz * qty; apq[8] += pz * qtz
        for t in range(9):
            apq_out[k, t // 3, t % 3] = apq[t]

        fro = 0.0
        for t in range(9):
            fro += apq[t] * apq[t]
        # rank ≤ 1 detection: the squared sum of 2×2 cofactors is
        # s1²s2² + s1²s3² + s2²s3², tiny iff the second singular value is
        cof = (
            (apq[4] * apq[8] - apq[5] * apq[7]) ** 2
            + (apq[3] * apq[8] - apq[5] * apq[6]) ** 2
            + (apq[3] * apq[7] - apq[4] * apq[6]) ** 2
            + (apq[1] * apq[8] - apq[2] * apq[7]) ** 2
            + (apq[0] * apq[8] - apq[2] * apq[6]) ** 2
            + (apq[0] * apq[7] - apq[1] * apq[6]) ** 2
            + (apq[1] * apq[5] - apq[2] * apq[4]) ** 2
            + (apq[0] * apq[5] - apq[2] * apq[3]) ** 2
            + (apq[0] * apq[4] - apq[1] * apq[3]) ** 2
        )
        if fro < 1e-24 or cof < 1e-18 * fro * fro:
            _quat_to_mat_f64(&rot[k, 0], r)
            n_degenerate += 1
        else:
            qq[0] = rot[k, 0]; qq[1] = rot[k, 1]; qq[2] = rot[k, 2]; qq[3] = rot[k, 3]
            _extract_rotation(apq, qq, 64)
            rot[k, 0] = qq[0]; rot[k, 1] = qq[1]; rot[k, 2] = qq[2]; rot[k, 3] = qq[3]
            _quat_to_mat_f64(qq, r)

        st = stiffness[k]
        for t in range(s, e):
            i = members[t]
            qx0 = rest[i, 0] - rest_centroid[k, 0]
            qy0 = rest[i, 1] - rest_centroid[k, 1]
            qz0 = rest[i, 2] - rest_centroid[k, 2]
            qtx = plastic[k, 0, 0] * qx0 + plastic[k, 0, 1] * qy0 + plastic[k, 0, 2] * qz0
            qty = plastic[k, 1, 0] * qx0 + plastic[k, 1, 1] * qy0 + plastic[k, 1, 2] * qz0
            qtz = plastic[k, 2, 0] * qx0 + plastic[k, 2, 1] * qy0 + plastic[k, 2, 2] * qz0
            gx = r[0] * qtx + r[1] * qty + r[2] * qtz + cx
            gy = r[3] * qtx + r[4] * qty + r[5] * qtz + cy
            gz = r[6] * qtx + r[7] * qty + r[8] * qtz + cz
            dx = gx - pos[i, 0]; dy = gy - pos[i, 1]; dz = gz - pos[i, 2]
            mag = sqrt(dx * dx + dy * dy + dz * dz)
            stress[i] += mag
            if inv_mass[i] > 0.0:
                delta[i, 0] += st * dx
                delta[i, 1] += st * dy
                delta[i, 2] += st * dz
                count[i] += 1
    return int(n_degenerate)


def local_rotations(
    const double[:, ::1] pos,
    const double[:, ::1] rest,
    const long[::1] offsets,
    const int[::1] neighbors,
    double[:, ::1] quat,
):
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef Py_ssize_t s, e, t
    cdef int j
    cdef double a[9]
    cdef double qq[4]
    cdef double dx, dy, dz, d0x, d0y, d0z, fro, cof

    for i in range(n):
        s = offsets[i]; e = offsets[i + 1]
        if e - s < 2:
            continue
        for t in range(9):
            a[t] = 0.0
        for t in range(s, e):
            j = neighbors[t]
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            d0x = rest[j, 0] - rest[i, 0]
            d0y = rest[j, 1] - rest[i, 1]
            d0z = rest[j, 2] - rest[i, 2]
            a[0] += dx * d0x; a[1] += dx * d0y; a[2] += dx * d0z
            a[3] += dy * d0x; a[4] += dy * d0y; a[5] += dy * d0z
            a[6] += dz * d0x; a[7] += dz * d0y; a[8] += dz * d0z
        fro = 0.0
        for t in range(9):
            fro += a[t] * a[t]
        cof = (
            (a[4] * a[8] - a[5] * a[7]) ** 2
            + (a[3] * a[8] - a[5] * a[6]) ** 2
            + (a[3] * a[7] - a[4] * a[6]) ** 2
            + (a[1] * a[8] - a[2] * a[7]) ** 2
            + (a[0] * a[8] - a[2] * a[6]) ** 2
            + (a[0] * a[7] - a[1] * a[6]) ** 2
            + (a[1] * a[5] - a[2] * a[4]) ** 2
            + (a[0] * a[5] - a[2] * a[3]) ** 2
            + (a[0] * a[4] - a[1] * a[3]) ** 2
        )
        if fro < 1e-24 or cof < 1e-18 * fro * fro:
            continue  # collinear/coincident neighborhood keeps its rotation
        qq[0] = quat[i, 0]; qq[1] = quat[i, 1]; qq[2] = quat[i, 2]; qq[3] = quat[i, 3]
        _extract_rotation(a, qq, 64)
        quat[i, 0] = qq[0]; quat[i, 1] = qq[1]; quat[i, 2] = qq[2]; quat[i, 3] = qq[3]
