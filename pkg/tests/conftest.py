import pytest

from spatialkit.synthetic import (
    SyntheticSceneSpec,
    default_objects,
    synthesize_scene,
)


@pytest.fixture(scope="session")
def orbit_scene():
    """Full-size orbit scene used by fidelity and renderer tests."""
    spec = SyntheticSceneSpec(objects=default_objects(), trajectory="orbit",
                              width=256, height=192)
    bundle, gt = synthesize_scene(spec)
    return bundle, gt


@pytest.fixture(scope="session")
def small_scene():
    """Fast low-resolution scene for plumbing tests."""
    spec = SyntheticSceneSpec(objects=default_objects(), trajectory="lateral",
                              width=96, height=72)
    bundle, gt = synthesize_scene(spec)
    return bundle, gt


@pytest.fixture(scope="session")
def bench_fixture(tmp_path_factory):
    from spatialkit.fixtures import build_bench_fixture

    root = tmp_path_factory.mktemp("bench_fixture")
    return build_bench_fixture(root)
