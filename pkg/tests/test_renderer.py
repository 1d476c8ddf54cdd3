import numpy as np
import pytest

from spatialkit.errors import EmptyCloudError
from spatialkit.geometry import (
    ExtrinsicPose,
    Intrinsics,
    PointCloud,
    build_point_cloud,
)
from spatialkit.renderer import (
    RenderOptions,
    project_point,
    project_points,
    synthesize_novel_view,
)

INTR = Intrinsics(fx=80.0, fy=80.0, cx=47.5, cy=35.5, width=96, height=72)
POSE = ExtrinsicPose.identity()


def _cloud(points, colors=None):
    points = np.asarray(points, dtype=np.float64)
    if colors is None:
        colors = np.tile([1.0, 0.0, 0.0], (len(points), 1))
    return PointCloud(points, np.asarray(colors, dtype=np.float64))


def test_project_point_center():
    uvz = project_point([0.0, 0.0, 2.0], POSE, INTR)
    assert uvz == (INTR.cx, INTR.cy, 2.0)


def test_project_point_behind_camera():
    assert project_point([0.0, 0.0, -1.0], POSE, INTR) is None


def test_project_points_matches_scalar():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(50, 3)) + [0, 0, 3.0]
    uv, z, vis = project_points(pts, POSE, INTR)
    for i in range(len(pts)):
        u, v, zz = project_point(pts[i], POSE, INTR)
        assert vis[i]
        assert np.allclose(uv[i], [u, v])
        assert np.isclose(z[i], zz)


def test_render_single_point_square_splat():
    img = synthesize_novel_view(
        _cloud([[0.0, 0.0, 2.0]]), POSE, INTR,
        RenderOptions(width=96, height=72, point_radius=1))
    u, v = int(round(INTR.cx)), int(round(INTR.cy))
    patch = img.pixels[v - 1:v + 2, u - 1:u + 2]
    assert (patch == [1.0, 0.0, 0.0]).all()
    assert img.pixels[v - 2, u].sum() == 0.0
    assert img.coverage_fraction == pytest.approx(9 / (96 * 72))


def test_render_nearest_point_wins():
    pts = [[0.0, 0.0, 2.0], [0.0, 0.0, 1.0]]
    colors = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    img = synthesize_novel_view(
        _cloud(pts, colors), POSE, INTR,
        RenderOptions(width=96, height=72, point_radius=0))
    u, v = int(round(INTR.cx)), int(round(INTR.cy))
    assert (img.pixels[v, u] == [0.0, 1.0, 0.0]).all()


def test_render_depth_tie_goes_to_lowest_index():
    pts = [[0.0, 0.0, 2.0], [0.0, 0.0, 2.0]]
    colors = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    img = synthesize_novel_view(
        _cloud(pts, colors), POSE, INTR,
        RenderOptions(width=96, height=72, point_radius=0))
    u, v = int(round(INTR.cx)), int(round(INTR.cy))
    assert (img.pixels[v, u] == [1.0, 0.0, 0.0]).all()


def test_render_background_color():
    img = synthesize_novel_view(
        _cloud([[0.0, 0.0, 2.0]]), POSE, INTR,
        RenderOptions(width=96, height=72, background=(0.2, 0.3, 0.4)))
    assert (img.pixels[0, 0] == [0.2, 0.3, 0.4]).all()


def test_render_near_clip_culls():
    img = synthesize_novel_view(
        _cloud([[0.0, 0.0, 1e-6]]), POSE, INTR,
        RenderOptions(width=96, height=72, near_clip=1e-4))
    assert img.coverage_fraction == 0.0


def test_render_empty_cloud_raises():
    with pytest.raises((EmptyCloudError, ValueError)):
        synthesize_novel_view(
            PointCloud(np.zeros((0, 3)), np.zeros((0, 3))), POSE, INTR)


def test_render_deterministic(small_scene):
    bundle, _ = small_scene
    cloud = build_point_cloud(bundle)
    frame = bundle.frames[0]
    a = synthesize_novel_view(cloud, frame.pose, frame.intrinsics)
    b = synthesize_novel_view(cloud, frame.pose, frame.intrinsics)
    assert (a.pixels == b.pixels).all()
    assert a.coverage_fraction == b.coverage_fraction


def test_self_view_matches_source(small_scene):
    """Rendering a frame from its own pose reproduces the frame closely."""
    bundle, _ = small_scene
    cloud = build_point_cloud(bundle)
    frame = bundle.frames[0]
    options = RenderOptions(width=frame.intrinsics.width,
                            height=frame.intrinsics.height, point_radius=0)
    img = synthesize_novel_view(cloud, frame.pose, frame.intrinsics, options)
    assert img.coverage_fraction >= 0.9
    source = frame.image.astype(np.float64) / 255.0
    err = np.abs(img.pixels - source).mean()
    assert err <= 2.0 / 255.0


def test_coverage_in_unit_interval(small_scene):
    bundle, _ = small_scene
    cloud = build_point_cloud(bundle, stride=4)
    img = synthesize_novel_view(cloud, bundle.frames[0].pose,
                                bundle.frames[0].intrinsics)
    assert 0.0 <= img.coverage_fraction <= 1.0


def test_render_options_validation():
    with pytest.raises(ValueError):
        RenderOptions(width=0, height=10)
    with pytest.raises(ValueError):
        RenderOptions(width=10, height=10, point_radius=-1)
    with pytest.raises(ValueError):
        RenderOptions(width=10, height=10, near_clip=0.0)


def test_to_u8_round_trip():
    img = synthesize_novel_view(
        _cloud([[0.0, 0.0, 2.0]], [[0.5, 0.25, 1.0]]), POSE, INTR,
        RenderOptions(width=96, height=72, point_radius=0))
    u, v = int(round(INTR.cx)), int(round(INTR.cy))
    assert tuple(img.to_u8()[v, u]) == (128, 64, 255)
