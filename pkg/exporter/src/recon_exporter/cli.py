"""recon-exporter command line.

Exit codes: 0 success, 1 generic contract failure, 2 usage error,
3 model-load failure, 4 inference failure, 5 write failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import MODEL_UNITS, ExporterConfig
from .errors import ExporterError
from .export import export


def _config_from_args(args):
    resolution = None
    if args.resolution:
        w, h = (int(x) for x in args.resolution.lower().split("x"))
        resolution = (w, h)
    return ExporterConfig(model_tag=args.model, device=args.device,
                          resolution=resolution,
                          max_request_bytes=args.max_request_bytes,
                          seed=args.seed)


def cmd_export(args):
    out = export(args.images, _config_from_args(args), args.out)
    print(out)
    return 0


def cmd_serve(args):
    from .service import serve

    serve(_config_from_args(args), port=args.port, host=args.host)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="recon-exporter",
        description="Run a reconstruction backbone over images and emit a "
                    "bundle directory, or serve POST /reconstruct.")
    parser.add_argument("--model", choices=sorted(MODEL_UNITS),
                        default="vggt-class")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--resolution", help="force WxH output resolution")
    parser.add_argument("--max-request-bytes", type=int,
                        default=32 * 1024 * 1024)
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="write a bundle directory")
    p.add_argument("--images", required=True,
                   help="image directory (frames in sorted filename order)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="serve POST /reconstruct")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExporterError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
