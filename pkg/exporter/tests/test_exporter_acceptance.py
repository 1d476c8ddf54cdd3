"""Exporter release gate, validated through the downstream consumer.

The bundle format and wire protocol are the only coupling to spatialkit,
so the checks here go through spatialkit's own loader and remote client.
"""

import json
import socket
import threading
import time

import numpy as np

from recon_exporter import create_app, export

from spatialkit.bundle import load_bundle, reconstruct_remote


def _verdict(capsys, name, ok, detail=""):
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"[{status}] {name}{suffix}")
    assert ok, f"{name}{': ' + detail if detail else ''}"


def test_criterion_bundle_passes_consumer_validation(capsys, sample_images,
                                                     vggt_config, tmp_path):
    out = export(sample_images, vggt_config, tmp_path / "b")
    bundle = load_bundle(out)
    ok = len(bundle.frames) == 3 and bundle.units == "normalized"
    _verdict(capsys, "exporter bundle passes load_bundle", ok,
             f"{len(bundle.frames)} frames, units {bundle.units}")


def test_criterion_reprojection_consistency(capsys, sample_images,
                                            vggt_config, tmp_path):
    """Frame-0 pixels land within 3 px (median) of the true frame-1 pixels.

    The fixture backbone's scene is a plane at depth 2 with a 0.1-unit
    lateral baseline, so the true correspondence is a pure horizontal
    shift of fx * baseline / depth pixels.
    """
    bundle = load_bundle(export(sample_images, vggt_config, tmp_path / "b"))
    f0, f1 = bundle.frames[0], bundle.frames[1]
    intr = f0.intrinsics
    w, h = intr.width, intr.height

    u, v = np.meshgrid(np.arange(w, dtype=np.float64),
                       np.arange(h, dtype=np.float64))
    d = f0.depth.values
    cam0 = np.stack([d * (u - intr.cx) / intr.fx,
                     d * (v - intr.cy) / intr.fy, d], axis=-1)
    world = (cam0 - f0.pose.t) @ f0.pose.R
    cam1 = world @ f1.pose.R.T + f1.pose.t
    u1 = intr.fx * cam1[..., 0] / cam1[..., 2] + intr.cx
    v1 = intr.fy * cam1[..., 1] / cam1[..., 2] + intr.cy

    u1_true = u - intr.fx * 0.1 / 2.0
    errors = np.hypot(u1 - u1_true, v1 - v)
    median = float(np.median(errors))
    _verdict(capsys, "frame-0 to frame-1 reprojection", median < 3.0,
             f"median error {median:.4f} px")


def test_criterion_service_matches_file_mode(capsys, sample_images,
                                             vggt_config, tmp_path):
    """Service round trip equals file-mode export within 1e-6 on manifest numerics."""
    import uvicorn

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    server = uvicorn.Server(uvicorn.Config(create_app(vggt_config),
                                           host="127.0.0.1", port=port,
                                           log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        assert time.monotonic() < deadline, "service did not start"
        time.sleep(0.01)
    try:
        images = sorted(sample_images.glob("*.png"), key=lambda p: p.name)
        remote = reconstruct_remote(images, f"http://127.0.0.1:{port}")
    finally:
        server.should_exit = True
        thread.join(timeout=5.0)

    local_dir = export(sample_images, vggt_config, tmp_path / "local")
    local = load_bundle(local_dir)
    manifest = json.loads((local_dir / "manifest.json").read_text())

    ok = (remote.units == local.units
          and remote.width == local.width and remote.height == local.height
          and len(remote.frames) == len(local.frames)
          == len(manifest["frames"]))
    worst = 0.0
    for rf, lf in zip(remote.frames, local.frames):
        worst = max(worst,
                    float(np.abs(rf.intrinsics.matrix
                                 - lf.intrinsics.matrix).max()),
                    float(np.abs(rf.pose.matrix34 - lf.pose.matrix34).max()),
                    float(np.abs(rf.depth.values - lf.depth.values).max()))
    ok = ok and worst <= 1e-6
    _verdict(capsys, "service round trip equals file mode", ok,
             f"max numeric delta {worst:.2e}")
