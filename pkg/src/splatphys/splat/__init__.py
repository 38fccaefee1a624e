from splatphys.splat.scene import (
    GaussianKernel,
    SplatScene,
    anisotropy_ratio,
    clamp_anisotropy,
    covariance,
    evaluate_density,
)
from splatphys.splat.ply import load_ply, save_ply
from splatphys.splat.render import render_reference, write_png, write_ppm

__all__ = [
    "GaussianKernel",
    "SplatScene",
    "anisotropy_ratio",
    "clamp_anisotropy",
    "covariance",
    "evaluate_density",
    "load_ply",
    "save_ply",
    "render_reference",
    "write_png",
    "write_ppm",
]
