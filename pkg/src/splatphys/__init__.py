"""splatphys: segmentation, PBD physics and particle-skinning for Gaussian splat scenes."""

__version__ = "0.1.0"

from splatphys._kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
