"""Camera views: pinhole intrinsics, world-to-camera pose and a label mask.

Cameras ship as a JSON array of
``{fx, fy, cx, cy, width, height, R (row-major 9 floats), t (3 floats),
mask_path}``; masks are 16-bit grayscale PNGs whose pixel value is the
object label (0 = background).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass
class CameraView:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # (3,3) world-to-camera
    translation: np.ndarray  # (3,)
    mask: np.ndarray | None = field(default=None, repr=False)  # (H,W) int labels

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if self.mask is not None:
            self.mask = np.asarray(self.mask)
            if self.mask.shape != (self.height, self.width):
                raise ValueError(
                    f"mask shape {self.mask.shape} does not match view "
                    f"{self.height}x{self.width}"
                )


def load_mask_png(path):
    img = Image.open(path)
    arr = np.array(img)
    if arr.ndim != 2:
        raise ValueError(f"mask {path} must be single-channel, got shape {arr.shape}")
    return arr.astype(np.int32)


def save_mask_png(mask, path):
    arr = np.asarray(mask)
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise ValueError("mask labels must fit uint16")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def load_camera_views(path):
    """Load the camera JSON array; mask paths resolve relative to the file."""
    path = Path(path)
    with open(path) as fh:
        records = json.load(fh)
    views = []
    for rec in records:
        mask = None
        if rec.get("mask_path"):
            mask = load_mask_png(path.parent / rec["mask_path"])
        views.append(
            CameraView(
                fx=rec["fx"],
                fy=rec["fy"],
                cx=rec["cx"],
                cy=rec["cy"],
                width=rec["width"],
                height=rec["height"],
                rotation=np.asarray(rec["R"], dtype=np.float64).reshape(3, 3),
                translation=np.asarray(rec["t"], dtype=np.float64),
                mask=mask,
            )
        )
    return views


def save_camera_views(views, path, mask_paths=None):
    """Write cameras (and optionally their masks) next to `path`."""
    path = Path(path)
    records = []
    for i, v in enumerate(views):
        rec = {
            "fx": v.fx,
            "fy": v.fy,
            "cx": v.cx,
            "cy": v.cy,
            "width": v.width,
            "height": v.height,
            "R": [float(x) for x in v.rotation.reshape(-1)],
            "t": [float(x) for x in v.translation],
        }
        if v.mask is not None:
            name = mask_paths[i] if mask_paths else f"mask_{i:03d}.png"
            save_mask_png(v.mask, path.parent / name)
            rec["mask_path"] = name
        records.append(rec)
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2)
