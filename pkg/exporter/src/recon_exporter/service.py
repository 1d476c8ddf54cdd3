"""HTTP wrapper around export(): POST /reconstruct returns a zipped bundle.

Responses: 200 with application/zip on success, 400 on malformed multipart
or missing images, 413 when the request exceeds the configured byte cap,
500 on inference failure. One inference runs at a time per process.
"""

from __future__ import annotations

import tempfile
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response

from .backbone import load_backbone
from .errors import ExporterError
from .export import export, zip_bundle


def create_app(config, backbone=None):
    if backbone is None:
        backbone = load_backbone(config)
    app = FastAPI(title="recon-exporter")
    inference_lock = threading.Lock()

    @app.post("/reconstruct")
    async def reconstruct(request: Request):
        length = request.headers.get("content-length")
        if length and int(length) > config.max_request_bytes:
            return Response(status_code=413,
                            content="request exceeds the configured size cap")
        try:
            form = await request.form()
            uploads = form.getlist("images")
        except Exception:
            return Response(status_code=400, content="malformed multipart body")
        uploads = [u for u in uploads if hasattr(u, "read")]
        if not uploads:
            return Response(status_code=400,
                            content="no 'images' files in multipart body")

        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            incoming = tmp / "incoming"
            incoming.mkdir()
            total = 0
            paths = []
            for i, upload in enumerate(uploads):
                data = await upload.read()
                total += len(data)
                if total > config.max_request_bytes:
                    return Response(
                        status_code=413,
                        content="request exceeds the configured size cap")
                # index prefix keeps received order under sorted-filename export
                name = f"{i:04d}_{Path(upload.filename or 'image.png').name}"
                path = incoming / name
                path.write_bytes(data)
                paths.append(path)
            try:
                with inference_lock:
                    bundle_dir = export(paths, config, tmp / "bundle",
                                        backbone=backbone)
                payload = zip_bundle(bundle_dir)
            except (ExporterError, ValueError, OSError) as e:
                return Response(status_code=500,
                                content=f"reconstruction failed: {e}")
        return Response(content=payload, media_type="application/zip")

    return app


def serve(config, port, host="127.0.0.1", backbone=None):
    import uvicorn

    uvicorn.run(create_app(config, backbone=backbone), host=host, port=port)
