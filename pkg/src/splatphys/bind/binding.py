"""Kernel-to-particle skinning.

Each Gaussian kernel binds to its m nearest particles at rest with
inverse-distance weights. Per frame the particle deltas (ΔT, ΔR) blend into
a kernel translation and rotation; the rotation of particles additionally
shifts the kernel by rotating its precomputed rest offsets:

    T' = Σ wᵢ ΔTᵢ
    R' = normalize(Σ wᵢ ±ΔRᵢ)             (sign-aligned to the first entry)
    Tq = Σ wᵢ (ΔRᵢ X_d ΔRᵢ⁻¹ − X_d)       with X_d = kernel rest − particle rest
    T  = T_r + T' + Tq,   R = R' ⊗ R_r

For any rigid motion applied uniformly to the particles this reproduces the
exact rigid transform of the kernel (Tq cancels the lever-arm error of T').
"""

import warnings

import numpy as np
from scipy.spatial import cKDTree

from splatphys import quatmath
from splatphys._kernels import impl as default_kernels
from splatphys.solver.particles import Phase


def default_m_for_phase(phase):
    """4 for deformable (smooth blending), 1 for rigid/granular/projectile."""
    return 4 if phase == Phase.DEFORMABLE else 1


class BindingTable:
    """Per kernel: m particle indices, normalized weights, rest offsets X_d
    and the kernel rest pose (T_r, R_r). Arrays are float32, ready to stream."""

    def __init__(self, indices, weights, offsets_xd, rest_pos, rest_rot):
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.weights = np.ascontiguousarray(weights, dtype=np.float32)
        self.offsets_xd = np.ascontiguousarray(offsets_xd, dtype=np.float32)
        self.rest_pos = np.ascontiguousarray(rest_pos, dtype=np.float32)
        self.rest_rot = np.ascontiguousarray(rest_rot, dtype=np.float32)
        n, m = self.indices.shape
        if self.weights.shape != (n, m) or self.offsets_xd.shape != (n, m, 3):
            raise ValueError("binding arrays disagree on (kernels, m)")
        wsum = self.weights.sum(axis=1)
        if np.any(np.abs(wsum - 1.0) > 1e-5):
            raise ValueError("weights must be normalized per kernel")

    def __len__(self):
        return len(self.indices)

    @property
    def m(self):
        return self.indices.shape[1]


def build_binding(object_scene, particles, m=4):
    """Bind every kernel to its m nearest particles at rest.

    Weights are inverse-distance, normalized; an exact coincidence (d = 0)
    collapses the weight onto that particle. m is capped at the particle
    count with a warning.
    """
    if m < 1:
        raise ValueError(f"m must be ≥ 1, got {m}")
    n_particles = len(particles.x0)
    if n_particles == 0:
        raise ValueError("cannot bind to an empty particle set")
    if m > n_particles:
        warnings.warn(
            f"m={m} exceeds particle count {n_particles}; reducing", RuntimeWarning, stacklevel=2
        )
        m = n_particles

    kernel_pos = object_scene.positions.astype(np.float64)
    tree = cKDTree(particles.x0)
    dist, idx = tree.query(kernel_pos, k=m)
    dist = np.atleast_2d(dist.reshape(len(kernel_pos), m))
    idx = np.atleast_2d(idx.reshape(len(kernel_pos), m))

    with np.errstate(divide="ignore"):
        inv = 1.0 / dist
    exact = dist < 1e-12
    any_exact = exact.any(axis=1)
    weights = np.where(any_exact[:, None], exact.astype(np.float64), inv)
    weights = weights / weights.sum(axis=1, keepdims=True)

    xd = kernel_pos[:, None, :] - particles.x0[idx]
    return BindingTable(
        indices=idx,
        weights=weights,
        offsets_xd=xd,
        rest_pos=object_scene.positions,
        rest_rot=object_scene.rotations,
    )


def particle_deltas(particles):
    """(ΔT, ΔR) float32 buffers for skinning/streaming: ΔT = x − x₀ and the
    per-particle rotation delta maintained by the engine."""
    d_t = (particles.x - particles.x0).astype(np.float32)
    d_r = particles.delta_rot.astype(np.float32)
    return d_t, d_r


def skin_kernel(entry_idx, binding, d_t, d_r):
    """Single-kernel reference path (the batched kernels are the fast path).

    Returns (T (3,), R (4,)) in float64.
    """
    i = entry_idx
    idx = binding.indices[i]
    w = binding.weights[i].astype(np.float64)
    xd = binding.offsets_xd[i].astype(np.float64)
    dT = np.asarray(d_t, dtype=np.float64)[idx]
    dR = np.asarray(d_r, dtype=np.float64)[idx]

    t_blend = (w[:, None] * dT).sum(axis=0)
    sign = np.where((dR * dR[0]).sum(axis=1) >= 0.0, 1.0, -1.0)
    q_blend = (w[:, None] * sign[:, None] * dR).sum(axis=0)
    norm = np.linalg.norm(q_blend)
    if norm < 1e-8:
        q_blend = dR[0]
    else:
        q_blend = q_blend / norm
    t_q = (w[:, None] * (quatmath.rotate(dR, xd) - xd)).sum(axis=0)

    t = binding.rest_pos[i].astype(np.float64) + t_blend + t_q
    r = quatmath.multiply(q_blend, binding.rest_rot[i].astype(np.float64))
    return t, r


def skin_all(binding, d_t, d_r, out_pos=None, out_rot=None, kernels=None):
    """Skin every kernel; returns (positions (N,3) f32, rotations (N,4) f32).

    Pure function of (binding, deltas); `out_*` buffers may be reused across
    frames to avoid allocation.
    """
    kern = kernels if kernels is not None else default_kernels
    n = len(binding)
    if out_pos is None:
        out_pos = np.empty((n, 3), dtype=np.float32)
    if out_rot is None:
        out_rot = np.empty((n, 4), dtype=np.float32)
    d_t = np.ascontiguousarray(d_t, dtype=np.float32)
    d_r = np.ascontiguousarray(d_r, dtype=np.float32)
    kern.skin_kernels(
        binding.indices, binding.weights, binding.offsets_xd,
        binding.rest_pos, binding.rest_rot, d_t, d_r, out_pos, out_rot,
    )
    return out_pos, out_rot


def transform_buffer(positions, rotations):
    """Little-endian float32 stream [tx ty tz qw qx qy qz] per kernel."""
    n = len(positions)
    buf = np.empty((n, 7), dtype="<f4")
    buf[:, :3] = positions
    buf[:, 3:] = rotations
    return buf.tobytes()
