from splatphys.fill.grid import CellState, VoxelGrid, voxelize
from splatphys.fill.classify import (
    classify_above_surface_5dir,
    classify_interior_6dir,
    extract_surface,
)
from splatphys.fill.granular import fill_granular

__all__ = [
    "CellState",
    "VoxelGrid",
    "voxelize",
    "classify_interior_6dir",
    "classify_above_surface_5dir",
    "extract_surface",
    "fill_granular",
]
