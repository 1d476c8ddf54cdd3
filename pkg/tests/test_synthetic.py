import numpy as np
import pytest

from spatialkit.geometry import build_point_cloud, classify_motion
from spatialkit.synthetic import (
    EIGHT_SECTOR_LABELS,
    SECTOR_CENTERS,
    SceneObject,
    SyntheticSceneSpec,
    default_objects,
    named_trajectory,
    sector_trajectory,
    synthesize_scene,
)


def test_sector_labels_cover_all_eight():
    assert len(EIGHT_SECTOR_LABELS) == 8
    assert set(EIGHT_SECTOR_LABELS) == set(SECTOR_CENTERS)


@pytest.mark.parametrize("label", EIGHT_SECTOR_LABELS)
@pytest.mark.parametrize("offset", [-10.0, 0.0, 10.0])
def test_sector_trajectory_classifies_as_constructed(label, offset):
    """Constructed headings land in their sector per the motion classifier."""
    poses, expected = sector_trajectory(label, offset_deg=offset)
    assert expected == label
    assert str(classify_motion(poses[0], poses[1])) == label


def test_sector_trajectory_rejects_out_of_sector_offset():
    with pytest.raises(ValueError):
        sector_trajectory("forward", offset_deg=30.0)


def test_eight_sector_trajectory_labels():
    poses, labels = named_trajectory("eight-sector")
    assert len(poses) == 9
    assert labels == list(EIGHT_SECTOR_LABELS)
    for i, label in enumerate(labels):
        assert str(classify_motion(poses[i], poses[i + 1])) == label


def test_lateral_and_approach_labels():
    _, lateral = named_trajectory("lateral")
    _, approach = named_trajectory("approach")
    assert set(lateral) == {"right"}
    assert set(approach) == {"forward"}


def test_orbit_chords_head_right():
    poses, labels = named_trajectory("orbit")
    for i, label in enumerate(labels):
        assert str(classify_motion(poses[i], poses[i + 1])) == label
    assert set(labels) == {"right"}


def test_unknown_trajectory():
    with pytest.raises(ValueError):
        named_trajectory("zigzag")


def test_depth_is_exact_ray_length(small_scene):
    """Back-projected points sit on analytic surfaces, so depth is exact."""
    bundle, gt = small_scene
    cloud = build_point_cloud(bundle)
    assert gt.surface_distance(cloud.points).max() < 1e-9


def test_depth_positive_and_finite(small_scene):
    bundle, _ = small_scene
    for frame in bundle.frames:
        v = frame.depth.values
        assert np.isfinite(v).all()
        assert (v > 0).all()


def test_texture_is_function_of_position(small_scene):
    """The same world point shades identically across frames."""
    bundle, _ = small_scene
    # frames of the lateral track share large parts of the back wall
    c0 = build_point_cloud(bundle)
    pts = c0.points
    # pick pairs of nearly identical world points from different frames
    n = bundle.frames[0].depth.values.size
    a_pts, a_col = pts[:n], c0.colors[:n]
    b_pts, b_col = pts[n:2 * n], c0.colors[n:2 * n]
    # brute-force a few matches
    rng = np.random.default_rng(0)
    checked = 0
    for i in rng.choice(n, size=400, replace=False):
        d = np.linalg.norm(b_pts - a_pts[i], axis=1)
        j = d.argmin()
        if d[j] < 0.02:
            # quantization plus Lipschitz slack over the 0.02 gap
            assert np.abs(a_col[i] - b_col[j]).max() < 0.1
            checked += 1
    assert checked > 20


def test_object_must_fit_in_room():
    with pytest.raises(ValueError):
        SyntheticSceneSpec(objects=(
            SceneObject("sphere", center=(3.9, 0, 0), size=1.0,
                        color=(1, 0, 0)),))


def test_synthesize_scene_shapes():
    spec = SyntheticSceneSpec(objects=default_objects(), trajectory="approach",
                              width=64, height=48)
    bundle, gt = synthesize_scene(spec)
    assert bundle.width == 64 and bundle.height == 48
    assert len(bundle.frames) == 4
    assert gt.motion_labels == ["forward"] * 3
    assert len(gt.object_pixels) == 4
