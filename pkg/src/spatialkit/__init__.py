"""Multi-view spatial reasoning toolkit.

Reconstruction bundles, point-cloud geometry, novel-view rendering, a
sandboxed visual-programming language, and a two-stage answering agent.
"""

from .bundle import (
    Frame,
    ReconstructionBundle,
    estimate_depth,
    load_bundle,
    reconstruct_remote,
    save_bundle,
)
from .geometry import (
    DEFAULT_MOVE_STEP,
    DEFAULT_ROTATE_DEG,
    EPS_MOVE,
    DepthMap,
    ExtrinsicPose,
    Intrinsics,
    MotionLabel,
    PointCloud,
    back_project,
    build_point_cloud,
    cam_to_world,
    camera_center,
    classify_motion,
    describe_camera_motion,
    discretize_motion,
    egocentric_displacement,
    move_backward,
    move_forward,
    rotate_left,
    rotate_right,
    turn_around,
    world_to_cam,
    yaw_angle,
)
from .renderer import RenderedImage, RenderOptions, synthesize_novel_view
from .scene import Scene, expand_image_paths

__version__ = "0.1.0"
