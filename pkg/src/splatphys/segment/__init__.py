from splatphys.segment.cameras import CameraView, load_camera_views, load_mask_png, save_mask_png
from splatphys.segment.classifier import IdentityClassifier
from splatphys.segment.segment import (
    SegmentationResult,
    feature_stage,
    intersect_masks,
    mask_stage,
    project_center,
    remove_object,
    segment_object,
)

__all__ = [
    "CameraView",
    "IdentityClassifier",
    "SegmentationResult",
    "feature_stage",
    "intersect_masks",
    "load_camera_views",
    "load_mask_png",
    "mask_stage",
    "project_center",
    "remove_object",
    "save_mask_png",
    "segment_object",
]
