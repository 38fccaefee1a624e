"""Reference renderer oracle behavior."""

import numpy as np
import pytest

from conftest import look_at_view, point_scene
from splatphys.splat.render import dc_color, render_reference, write_png, write_ppm
from splatphys.splat.scene import SplatScene


def _empty_scene():
    return SplatScene(
        np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)), np.zeros(0), np.zeros((0, 3))
    )


def test_empty_scene_is_transparent():
    view = look_at_view([0, 0, -2], [0, 0, 0], width=32, height=32)
    img = render_reference(_empty_scene(), view)
    assert img.shape == (32, 32, 4)
    np.testing.assert_array_equal(img, 0.0)


def test_zero_area_image_rejected():
    view = look_at_view([0, 0, -2], [0, 0, 0], width=32, height=32)
    view.width = 0
    with pytest.raises(ValueError, match="zero-area"):
        render_reference(_empty_scene(), view)


def test_center_pixel_alpha_equals_peak_splat_alpha():
    # kernel on the optical axis, center projects exactly onto a pixel center
    view = look_at_view([0, 0, -2], [0, 0, 0], width=64, height=64, fx=64.0)
    view.cx, view.cy = 32.0, 32.0
    scene = point_scene([[0, 0, 0]], scale=0.08, opacity=0.7)
    img = render_reference(scene, view)
    assert np.isclose(img[32, 32, 3], 0.7, atol=1e-6)


def test_disjoint_kernels_add():
    view = look_at_view([0, 0, -3], [0, 0, 0], width=96, height=96, fx=96.0)
    a = point_scene([[-0.8, 0, 0]], color=[0.5, 0, 0], scale=0.02, opacity=0.9)
    b = point_scene([[0.8, 0, 0]], color=[0, 0.5, 0], scale=0.02, opacity=0.9)
    both = SplatScene.concatenate([a, b])
    img_a = render_reference(a, view)
    img_b = render_reference(b, view)
    img_ab = render_reference(both, view)
    np.testing.assert_allclose(img_ab, img_a + img_b, atol=1e-5)


def test_blending_formula_for_stacked_kernels():
    # N aligned kernels, identical color c: blended color is c·(1−∏(1−δᵢ))
    view = look_at_view([0, 0, -2], [0, 0, 0], width=64, height=64, fx=64.0)
    view.cx, view.cy = 32.0, 32.0
    opacities = [0.3, 0.5, 0.2]
    scenes = [
        point_scene([[0, 0, 0.2 * i]], color=[0.4, 0.1, 0.2], scale=0.05, opacity=o)
        for i, o in enumerate(opacities)
    ]
    img = render_reference(SplatScene.concatenate(scenes), view)
    expect_alpha = 1.0 - np.prod([1.0 - o for o in opacities])
    assert np.isclose(img[32, 32, 3], expect_alpha, atol=1e-4)
    expect_color = dc_color([0.4, 0.1, 0.2]) * expect_alpha
    np.testing.assert_allclose(img[32, 32, :3], expect_color, atol=1e-4)


def test_image_export(tmp_path):
    view = look_at_view([0, 0, -2], [0, 0, 0], width=16, height=16)
    img = render_reference(point_scene([[0, 0, 0]], scale=0.1), view)
    write_png(img, tmp_path / "out.png")
    write_ppm(img, tmp_path / "out.ppm")
    assert (tmp_path / "out.png").stat().st_size > 0
    header = (tmp_path / "out.ppm").read_bytes()[:9]
    assert header.startswith(b"P6\n16 16\n")
