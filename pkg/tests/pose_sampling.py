import numpy as np


def random_pose(rng):
    """Uniform random world-to-camera pose; rotation via QR sign fix."""
    from spatialkit.geometry import ExtrinsicPose

    a = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    t = rng.standard_normal(3) * 3.0
    return ExtrinsicPose(q, t)
