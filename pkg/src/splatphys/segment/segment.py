"""Two-stage feature-mask object segmentation.

Stage one thresholds the classifier softmax per kernel; stage two projects
kernel centers into every view and votes against the label masks. The final
set is the intersection of the two.
"""

from dataclasses import dataclass, field

import numpy as np

BEHIND = None  # marker returned by project_center for z ≤ 0


@dataclass
class SegmentationResult:
    object_id: int
    feature_set: np.ndarray
    mask_set: np.ndarray
    final_set: np.ndarray
    proportions: np.ndarray
    empty_stage: str | None = field(default=None)

    def __post_init__(self):
        final = set(self.final_set.tolist())
        if not final <= set(self.feature_set.tolist()):
            raise ValueError("final_set must be a subset of feature_set")
        if not final <= set(self.mask_set.tolist()):
            raise ValueError("final_set must be a subset of mask_set")


def feature_stage(scene, classifier, object_id, sigma1):
    """Kernels whose softmax score for `object_id` exceeds sigma1."""
    if not 0.0 < sigma1 < 1.0:
        raise ValueError(f"sigma1 must lie in (0,1), got {sigma1}")
    if scene.features is None:
        raise RuntimeError("scene carries no identity features")
    if not 0 <= object_id < classifier.num_classes:
        raise ValueError(
            f"object_id {object_id} out of range for {classifier.num_classes} classes"
        )
    probs = classifier.probabilities(scene.features)
    return np.nonzero(probs[:, object_id] > sigma1)[0].astype(np.int64)


def project_center(position, view):
    """Pinhole projection of a world point; None when at/behind the camera."""
    p = np.asarray(position, dtype=np.float64)
    cam = view.rotation @ p + view.translation
    if cam[2] <= 0.0:
        return BEHIND
    u = view.fx * cam[0] / cam[2] + view.cx
    v = view.fy * cam[1] / cam[2] + view.cy
    return u, v, cam[2]


def _project_all(positions, view):
    cam = positions @ view.rotation.T + view.translation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = view.fx * cam[:, 0] / z + view.cx
        v = view.fy * cam[:, 1] / z + view.cy
    return u, v, z


def mask_stage(scene, views, object_id, sigma2):
    """Multi-view mask voting.

    A kernel votes 1 in view j when its projected center lands on a mask
    pixel labeled `object_id` (nearest pixel, floor). Behind-camera and
    out-of-frame projections vote 0 but still count in the denominator.
    Returns (selected indices, per-kernel vote proportion).
    """
    if not 0.0 < sigma2 < 1.0:
        raise ValueError(f"sigma2 must lie in (0,1), got {sigma2}")
    views = list(views)
    if not views:
        raise ValueError("mask_stage needs at least one view")
    for v in views:
        if v.mask is None:
            raise ValueError("every view used for voting needs a mask")

    positions = scene.positions.astype(np.float64)
    votes = np.zeros(len(scene), dtype=np.int64)
    for view in views:
        u, v, z = _project_all(positions, view)
        ui = np.floor(u).astype(np.int64)
        vi = np.floor(v).astype(np.int64)
        ok = (z > 0.0) & (ui >= 0) & (ui < view.width) & (vi >= 0) & (vi < view.height)
        hit = np.zeros(len(scene), dtype=bool)
        hit[ok] = view.mask[vi[ok], ui[ok]] == object_id
        votes += hit

    proportions = votes / float(len(views))
    selected = np.nonzero(proportions > sigma2)[0].astype(np.int64)
    return selected, proportions


def segment_object(scene, classifier, views, object_id, sigma1=0.3, sigma2=0.3):
    """Intersection of the feature and mask stages."""
    feat = feature_stage(scene, classifier, object_id, sigma1)
    masked, proportions = mask_stage(scene, views, object_id, sigma2)
    final = np.intersect1d(feat, masked).astype(np.int64)
    empty_stage = None
    if len(feat) == 0:
        empty_stage = "feature"
    elif len(masked) == 0:
        empty_stage = "mask"
    return SegmentationResult(
        object_id=object_id,
        feature_set=feat,
        mask_set=masked,
        final_set=final,
        proportions=proportions,
        empty_stage=empty_stage,
    )


def remove_object(scene, final_set):
    """Split the scene into (object, remainder); a disjoint partition."""
    final_set = np.asarray(final_set, dtype=np.int64)
    n = len(scene)
    if len(final_set) and (final_set.min() < 0 or final_set.max() >= n):
        raise IndexError(f"kernel index out of range 0..{n - 1}")
    keep = np.ones(n, dtype=bool)
    keep[final_set] = False
    return scene.select(final_set), scene.select(np.nonzero(keep)[0])


def intersect_masks(a, b):
    """Pixelwise AND of two label masks: keeps a's label where b is nonzero.

    Utility for external inpainting pipelines that need the removal-mask
    intersection.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return np.where((a > 0) & (b > 0), a, 0)
