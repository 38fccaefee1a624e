"""Gaussian splat scene data model and covariance math.

Scenes are stored struct-of-arrays in float32. In memory every kernel holds
*linear* scale (exp applied), opacity in [0,1] (sigmoid applied) and a unit
quaternion (w, x, y, z). The raw disk encodings (log-scale, logit-opacity)
are retained alongside so that save → load round-trips bit-identically; any
mutation refreshes them.
"""

from dataclasses import dataclass

import numpy as np

from splatphys import quatmath

SH_REST_DIM = 45  # three color channels x 15 coefficients for SH bands 1..3
OPACITY_EPS = 1e-6  # keeps logit finite when opacity saturates


def _logit(p):
    p = np.clip(np.asarray(p, dtype=np.float64), OPACITY_EPS, 1.0 - OPACITY_EPS)
    return np.log(p / (1.0 - p))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


@dataclass
class GaussianKernel:
    """Single-kernel view, mostly for tests and spot checks."""

    position: np.ndarray
    scale: np.ndarray
    rotation: np.ndarray
    opacity: float
    sh_dc: np.ndarray
    sh_rest: np.ndarray
    object_id: int
    feature: np.ndarray | None = None

    def covariance(self):
        return covariance(self.rotation, self.scale)

    def density(self, x):
        return evaluate_density(self.position, self.rotation, self.scale, x)

    def anisotropy_ratio(self):
        return float(np.max(self.scale) / np.min(self.scale))


class SplatScene:
    """A collection of Gaussian kernels plus optional identity features."""

    def __init__(
        self,
        positions,
        scales,
        rotations,
        opacities,
        sh_dc=None,
        sh_rest=None,
        object_ids=None,
        features=None,
        _scales_log=None,
        _opacity_logit=None,
    ):
        self.positions = np.ascontiguousarray(positions, dtype=np.float32)
        n = len(self.positions)
        self.scales = np.ascontiguousarray(scales, dtype=np.float32)
        self.rotations = np.ascontiguousarray(rotations, dtype=np.float32)
        self.opacities = np.ascontiguousarray(opacities, dtype=np.float32).reshape(n)
        self.sh_dc = (
            np.ascontiguousarray(sh_dc, dtype=np.float32)
            if sh_dc is not None
            else np.zeros((n, 3), dtype=np.float32)
        )
        self.sh_rest = (
            np.ascontiguousarray(sh_rest, dtype=np.float32)
            if sh_rest is not None
            else np.zeros((n, SH_REST_DIM), dtype=np.float32)
        )
        self.object_ids = (
            np.ascontiguousarray(object_ids, dtype=np.int32)
            if object_ids is not None
            else np.zeros(n, dtype=np.int32)
        )
        self.features = (
            np.ascontiguousarray(features, dtype=np.float32) if features is not None else None
        )

        if self.positions.shape != (n, 3):
            raise ValueError(f"positions must be (N,3), got {self.positions.shape}")
        if self.scales.shape != (n, 3):
            raise ValueError(f"scales must be (N,3), got {self.scales.shape}")
        if self.rotations.shape != (n, 4):
            raise ValueError(f"rotations must be (N,4) wxyz, got {self.rotations.shape}")
        if np.any(self.scales <= 0.0):
            raise ValueError("scales must be strictly positive in memory")
        if np.any(self.opacities < 0.0) or np.any(self.opacities > 1.0):
            raise ValueError("opacity must lie in [0,1] in memory")
        if self.features is not None and self.features.shape[0] != n:
            raise ValueError("features row count must match kernel count")

        # renormalize quaternions, but only when they actually deviate: an
        # already-unit f32 quaternion must keep its exact bits for lossless
        # round-trips
        norms = np.linalg.norm(self.rotations.astype(np.float64), axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero-norm rotation quaternion")
        off = np.abs(norms - 1.0) > 1e-6
        if np.any(off):
            fixed = self.rotations[off].astype(np.float64) / norms[off][:, None]
            self.rotations[off] = fixed.astype(np.float32)

        self._scales_log = (
            np.ascontiguousarray(_scales_log, dtype=np.float32)
            if _scales_log is not None
            else np.log(self.scales.astype(np.float64)).astype(np.float32)
        )
        self._opacity_logit = (
            np.ascontiguousarray(_opacity_logit, dtype=np.float32)
            if _opacity_logit is not None
            else _logit(self.opacities).astype(np.float32)
        )

    def __len__(self):
        return len(self.positions)

    @property
    def count(self):
        return len(self.positions)

    @property
    def feature_dim(self):
        return 0 if self.features is None else self.features.shape[1]

    @property
    def bounds(self):
        """Axis-aligned (min, max) over kernel centers."""
        if len(self) == 0:
            raise ValueError("empty scene has no bounds")
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def kernel(self, i):
        return GaussianKernel(
            position=self.positions[i],
            scale=self.scales[i],
            rotation=self.rotations[i],
            opacity=float(self.opacities[i]),
            sh_dc=self.sh_dc[i],
            sh_rest=self.sh_rest[i],
            object_id=int(self.object_ids[i]),
            feature=None if self.features is None else self.features[i],
        )

    def select(self, indices):
        """Sub-scene with the given kernel indices (order preserved)."""
        indices = np.asarray(indices, dtype=np.int64)
        return SplatScene(
            self.positions[indices],
            self.scales[indices],
            self.rotations[indices],
            self.opacities[indices],
            self.sh_dc[indices],
            self.sh_rest[indices],
            self.object_ids[indices],
            None if self.features is None else self.features[indices],
            _scales_log=self._scales_log[indices],
            _opacity_logit=self._opacity_logit[indices],
        )

    def copy(self):
        return self.select(np.arange(len(self)))

    @staticmethod
    def concatenate(scenes):
        scenes = [s for s in scenes if len(s) > 0]
        if not scenes:
            raise ValueError("nothing to concatenate")
        has_feat = all(s.features is not None for s in scenes)
        return SplatScene(
            np.concatenate([s.positions for s in scenes]),
            np.concatenate([s.scales for s in scenes]),
            np.concatenate([s.rotations for s in scenes]),
            np.concatenate([s.opacities for s in scenes]),
            np.concatenate([s.sh_dc for s in scenes]),
            np.concatenate([s.sh_rest for s in scenes]),
            np.concatenate([s.object_ids for s in scenes]),
            np.concatenate([s.features for s in scenes]) if has_feat else None,
            _scales_log=np.concatenate([s._scales_log for s in scenes]),
            _opacity_logit=np.concatenate([s._opacity_logit for s in scenes]),
        )

    def set_scales(self, indices, new_scales):
        """Mutate linear scales and refresh the disk encoding."""
        new_scales = np.asarray(new_scales, dtype=np.float32)
        if np.any(new_scales <= 0.0):
            raise ValueError("scales must stay strictly positive")
        self.scales[indices] = new_scales
        self._scales_log[indices] = np.log(new_scales.astype(np.float64)).astype(np.float32)


def covariance(rotation, scale):
    """Σ = R diag(s)² Rᵀ for one kernel or batched (..., 4)/(..., 3) inputs."""
    r = quatmath.to_matrix(np.asarray(rotation, dtype=np.float64))
    s = np.asarray(scale, dtype=np.float64)
    rs = r * s[..., None, :]  # columns scaled: R @ diag(s)
    return rs @ np.swapaxes(rs, -1, -2)


def evaluate_density(position, rotation, scale, x):
    """exp(−½ (x−p)ᵀ Σ⁻¹ (x−p)); 1 at the center, in (0,1] everywhere."""
    p = np.asarray(position, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    d = x - p
    # Σ⁻¹ = R diag(1/s²) Rᵀ, so the Mahalanobis term is |diag(1/s) Rᵀ d|²
    r = quatmath.to_matrix(np.asarray(rotation, dtype=np.float64))
    local = np.einsum("...ji,...j->...i", r, d)  # Rᵀ d
    z = local / np.asarray(scale, dtype=np.float64)
    return np.exp(-0.5 * np.sum(z * z, axis=-1))


def anisotropy_ratio(scales):
    """max(s)/min(s) per kernel; accepts one (3,) scale or an (N,3) array."""
    s = np.asarray(scales, dtype=np.float64)
    return np.max(s, axis=-1) / np.min(s, axis=-1)


def clamp_anisotropy(scene, r):
    """Raise small scale axes so that max(s)/min(s) ≤ r for every kernel.

    The largest axis is preserved; returns the number of modified kernels.
    """
    if r < 1.0:
        raise ValueError(f"anisotropy limit must be ≥ 1, got {r}")
    s = scene.scales.astype(np.float64)
    smax = s.max(axis=1)
    ratios = smax / s.min(axis=1)
    # small slack so a freshly clamped scene (ratio = r up to f32 rounding)
    # is not clamped again
    need = ratios > r * (1.0 + 1e-6)
    if not np.any(need):
        return 0
    floor = smax / r
    clamped = np.maximum(s[need], floor[need][:, None])
    scene.set_scales(np.flatnonzero(need), clamped)
    return int(np.count_nonzero(need))
