"""CPU reference rasterizer for splat scenes.

Projects every kernel to a 2D Gaussian with the perspective-affine (EWA)
approximation, depth-sorts, and alpha-blends front to back. Deliberately
simple: DC color only (no view-dependent SH), per-splat 3σ pixel footprint,
no screen-space dilation. This is the test oracle and frame exporter, not a
real-time path.
"""

import numpy as np

from splatphys.splat.scene import covariance

SH_C0 = 0.28209479177387814  # Y_0^0
ALPHA_CLAMP = 0.999
SIGMA_CUTOFF = 3.0
T_MIN = 1e-4  # early-out transmittance


def dc_color(sh_dc):
    """View-independent base color from the DC SH coefficients."""
    return np.clip(0.5 + SH_C0 * np.asarray(sh_dc, dtype=np.float64), 0.0, None)


def render_reference(scene, view, background=None):
    """Render the scene from a CameraView into an (H, W, 4) float32 image.

    Alpha is the accumulated coverage 1−T. `background` (3,) fills the color
    of fully transparent pixels if given.
    """
    w, h = view.width, view.height
    if w <= 0 or h <= 0:
        raise ValueError(f"zero-area image: {w}x{h}")
    img = np.zeros((h, w, 3), dtype=np.float64)
    trans = np.ones((h, w), dtype=np.float64)

    if len(scene) > 0:
        r_wc = np.asarray(view.rotation, dtype=np.float64)
        t_wc = np.asarray(view.translation, dtype=np.float64)
        cam = scene.positions.astype(np.float64) @ r_wc.T + t_wc
        zc = cam[:, 2]
        visible = np.nonzero(zc > 1e-6)[0]
        order = visible[np.argsort(zc[visible], kind="stable")]

        cov_world = covariance(scene.rotations.astype(np.float64), scene.scales.astype(np.float64))
        colors = dc_color(scene.sh_dc)
        opac = scene.opacities.astype(np.float64)

        for k in order:
            x, y, z = cam[k]
            u = view.fx * x / z + view.cx
            v = view.fy * y / z + view.cy

            jac = np.array(
                [
                    [view.fx / z, 0.0, -view.fx * x / (z * z)],
                    [0.0, view.fy / z, -view.fy * y / (z * z)],
                ]
            )
            jw = jac @ r_wc
            cov2 = jw @ cov_world[k] @ jw.T

            # 3σ bounding box from the largest eigenvalue
            tr = cov2[0, 0] + cov2[1, 1]
            det = cov2[0, 0] * cov2[1, 1] - cov2[0, 1] * cov2[1, 0]
            lam_max = 0.5 * tr + np.sqrt(max(0.25 * tr * tr - det, 0.0))
            radius = SIGMA_CUTOFF * np.sqrt(max(lam_max, 0.0))
            if det <= 0.0 or radius <= 0.0:
                continue

            x0 = max(int(np.floor(u - radius)), 0)
            x1 = min(int(np.ceil(u + radius)) + 1, w)
            y0 = max(int(np.floor(v - radius)), 0)
            y1 = min(int(np.ceil(v + radius)) + 1, h)
            if x0 >= x1 or y0 >= y1:
                continue

            inv = np.linalg.inv(cov2)
            px, py = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
            du = px - u
            dv = py - v
            maha = inv[0, 0] * du * du + (inv[0, 1] + inv[1, 0]) * du * dv + inv[1, 1] * dv * dv
            gauss = np.exp(-0.5 * maha)
            delta = np.minimum(opac[k] * gauss, ALPHA_CLAMP)

            t_tile = trans[y0:y1, x0:x1]
            contrib = delta * t_tile
            live = t_tile > T_MIN
            img[y0:y1, x0:x1][live] += contrib[live, None] * colors[k]
            trans[y0:y1, x0:x1] = np.where(live, t_tile * (1.0 - delta), t_tile)

    alpha = 1.0 - trans
    if background is not None:
        img = img + trans[..., None] * np.asarray(background, dtype=np.float64)
    return np.concatenate([img, alpha[..., None]], axis=-1).astype(np.float32)


def write_png(image, path):
    from PIL import Image

    rgba = np.clip(np.asarray(image) * 255.0, 0, 255).astype(np.uint8)
    Image.fromarray(rgba, mode="RGBA").save(path)


def write_ppm(image, path):
    """Plain PPM (P6), RGB only."""
    rgb = np.clip(np.asarray(image)[..., :3] * 255.0, 0, 255).astype(np.uint8)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
