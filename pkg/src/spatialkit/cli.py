"""Command-line entry point exposing every pipeline stage.

Exit codes: 0 success, 1 contract failure, 2 usage error. Diagnostics go
to standard error; machine output goes to standard output or --out files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import SpatialError
from . import geometry
from .bundle import load_bundle, reconstruct_remote, save_bundle
from .geometry import build_point_cloud, describe_camera_motion
from .renderer import RenderOptions, synthesize_novel_view
from .scene import Scene, expand_image_paths

_POSE_OPS = {
    "rotate-left": geometry.rotate_left,
    "rotate-right": geometry.rotate_right,
    "move-forward": geometry.move_forward,
    "move-backward": geometry.move_backward,
    "turn-around": geometry.turn_around,
}


class _PoseOpAction(argparse.Action):
    """Collects pose-op flags preserving their left-to-right order."""

    def __call__(self, parser, namespace, values, option_string=None):
        ops = getattr(namespace, "pose_ops", None) or []
        name = option_string.lstrip("-")
        ops.append((name, values))
        namespace.pose_ops = ops


def _add_pose_flags(p):
    p.add_argument("--rotate-left", action=_PoseOpAction, type=float,
                   nargs="?", const=geometry.DEFAULT_ROTATE_DEG,
                   metavar="DEG",
                   help="pan left, default 45 degrees")
    p.add_argument("--rotate-right", action=_PoseOpAction, type=float,
                   nargs="?", const=geometry.DEFAULT_ROTATE_DEG,
                   metavar="DEG",
                   help="pan right, default 45 degrees")
    p.add_argument("--move-forward", action=_PoseOpAction, type=float,
                   nargs="?", const=geometry.DEFAULT_MOVE_STEP,
                   metavar="DIST",
                   help="step forward, default 0.3 units")
    p.add_argument("--move-backward", action=_PoseOpAction, type=float,
                   nargs="?", const=geometry.DEFAULT_MOVE_STEP,
                   metavar="DIST",
                   help="step backward, default 0.3 units")
    p.add_argument("--turn-around", action=_PoseOpAction, nargs=0,
                   help="rotate 180 degrees in place")


def _apply_config_file(args, parser_defaults):
    """Overlay a flat JSON config file under the explicit flags."""
    if not getattr(args, "config", None):
        return args
    overlay = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key, value in overlay.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)
    return args


def cmd_reconstruct(args):
    if args.backend == "synthetic":
        from .synthetic import SyntheticSceneSpec, default_objects, synthesize_scene

        spec = SyntheticSceneSpec(objects=default_objects(),
                                  trajectory=args.trajectory,
                                  units=args.units)
        bundle, _ = synthesize_scene(spec)
    elif args.backend == "http":
        if not args.endpoint:
            raise SystemExit(2)
        images = expand_image_paths(args.images)
        bundle = reconstruct_remote(images, args.endpoint)
    else:  # file: validate an existing bundle and re-emit canonically
        bundle = load_bundle(args.images)
    save_bundle(bundle, args.out)
    print(args.out)
    return 0


def cmd_describe_motion(args):
    bundle = load_bundle(args.bundle)
    print(describe_camera_motion(bundle.extrinsics, units=bundle.units))
    return 0


def cmd_render(args):
    bundle = load_bundle(args.bundle)
    if not 0 <= args.pose_from < len(bundle.frames):
        print(f"error: --pose-from {args.pose_from} out of range "
              f"for {len(bundle.frames)} frames", file=sys.stderr)
        return 1
    pose = bundle.frames[args.pose_from].pose
    for name, value in getattr(args, "pose_ops", None) or []:
        op = _POSE_OPS[name]
        pose = op(pose) if value is None or value == [] else op(pose, value)
    cloud = build_point_cloud(bundle)
    intr = bundle.frames[args.pose_from].intrinsics
    options = RenderOptions(width=intr.width, height=intr.height,
                            point_radius=args.radius)
    rendered = synthesize_novel_view(cloud, pose, intr, options)
    rendered.save_png(args.out)
    print(args.out)
    return 0


def _run_program_source(source, scene, bundle):
    from .lang import execute, parse_source

    ast = parse_source(source)
    return execute(ast, scene, lambda _scene: bundle)


def cmd_run_program(args):
    from .lang import ProgramSource, serialize_trace

    source = ProgramSource(text=Path(args.program).read_text(encoding="utf-8"),
                           origin="cli")
    bundle = load_bundle(args.bundle)
    if args.images:
        image_paths = expand_image_paths(args.images)
    else:
        image_paths = sorted(
            str(p) for p in (Path(args.bundle) / "images").glob("*.png"))
    scene = Scene(question=args.question, image_paths=image_paths)
    output = _run_program_source(source, scene, bundle)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if output.kind == "text":
        print(output.payload)
    else:
        for i, img in enumerate(output.images):
            dest = out_dir / f"output_{i:02d}.png"
            if img.kind == "rendered":
                img.rendered.save_png(dest)
            else:
                from shutil import copyfile
                copyfile(img.path, dest)
            print(dest)
    print(serialize_trace(output.trace))
    return 0


def cmd_ask(args):
    from .agent import AgentConfig, HttpChatClient, MockChatClient, solve
    from .lang import serialize_trace

    config = AgentConfig(codegen_model=args.model, answer_model=args.model,
                         example_count=args.examples)
    if args.mock:
        client = MockChatClient(args.mock)
    else:
        client = HttpChatClient(base_url=args.endpoint)
    scene = Scene(question=args.question,
                  image_paths=expand_image_paths(args.images))
    bundle = load_bundle(args.bundle) if args.bundle else None

    def provider(_scene):
        if bundle is None:
            raise SpatialError("no bundle available; pass --bundle")
        return bundle

    outcome = solve(scene, provider, client, config)
    trace_path = None
    if outcome.trace:
        trace_path = str(Path(args.trace_out))
        Path(trace_path).write_text(serialize_trace(outcome.trace) + "\n",
                                    encoding="utf-8")
    print(json.dumps({
        "answer": outcome.answer.raw_text,
        "choice": outcome.answer.choice,
        "stage": outcome.answer.stage,
        "failure_stage": outcome.failure_stage,
        "program": outcome.program_text,
        "output_kind": outcome.output_kind,
        "output_text": outcome.output_text,
        "trace_path": trace_path,
        "timings": outcome.timings,
        "error": outcome.error,
    }, indent=2))
    return 0


def cmd_bench(args):
    from .agent import AgentConfig, HttpChatClient, MockChatClient
    from .bench import agent_pipeline, load_dataset, run_bench

    config = AgentConfig(codegen_model=args.model, answer_model=args.model,
                         example_count=args.examples)
    items = load_dataset(args.dataset, format=args.format,
                         images_root=args.images_root)
    if args.mock:
        client = MockChatClient(args.mock)
    else:
        client = HttpChatClient(base_url=args.endpoint)

    bundles = {}

    def resolver(item):
        if item.id not in bundles:
            if not args.bundles_root:
                raise SpatialError(
                    f"item {item.id}: no --bundles-root configured")
            bundles[item.id] = load_bundle(Path(args.bundles_root) / item.id)
        return bundles[item.id]

    pipeline = agent_pipeline(client, config, resolver)
    out = Path(args.out)
    results_path = out.with_suffix(".results.jsonl")
    report, _, wall = run_bench(items, pipeline,
                                parallelism=args.parallelism,
                                results_path=results_path,
                                resume=args.resume)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    payload["wall_seconds"] = wall
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(report.table())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spatialkit",
        description="Multi-view spatial reasoning toolkit. Pose defaults: "
                    "45 degree rotation steps, 0.3 unit movement steps.")
    parser.add_argument("--config", help="flat JSON config file overlay")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="produce a bundle directory")
    p.add_argument("--images", help="image dir/list, or bundle dir for the "
                                    "file backend")
    p.add_argument("--backend", choices=("file", "http", "synthetic"),
                   default="file")
    p.add_argument("--endpoint", help="reconstruction service URL (http)")
    p.add_argument("--trajectory", default="orbit",
                   help="synthetic trajectory pattern")
    p.add_argument("--units", default="normalized",
                   choices=("normalized", "metric-meters"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("describe-motion",
                       help="print the egocentric camera-motion description")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_describe_motion)

    p = sub.add_parser(
        "render",
        help="render a novel view; pose flags apply left to right "
             "(defaults: 45 degrees, 0.3 units)")
    p.add_argument("--bundle", required=True)
    p.add_argument("--pose-from", type=int, default=0,
                   help="frame index supplying the starting pose")
    p.add_argument("--radius", type=int, default=2, help="point splat radius")
    _add_pose_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("run-program", help="execute a program file")
    p.add_argument("program", help="program source file")
    p.add_argument("--bundle", required=True)
    p.add_argument("--images", help="scene images (default: bundle images)")
    p.add_argument("--question", default="")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_run_program)

    p = sub.add_parser("ask", help="run the full agent on one question")
    p.add_argument("--images", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--bundle")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--examples", type=int, choices=(0, 2, 4), default=2)
    p.add_argument("--mock", help="chat fixture file for offline replay")
    p.add_argument("--endpoint", help="chat completions base URL")
    p.add_argument("--trace-out", default="trace.jsonl")
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("bench", help="run and score a benchmark dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("mindcube", "omni3d"),
                   default="mindcube")
    p.add_argument("--images-root")
    p.add_argument("--bundles-root",
                   help="precomputed bundle directories, one per item id")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--examples", type=int, choices=(0, 2, 4), default=2)
    p.add_argument("--mock", help="chat fixture file for offline replay")
    p.add_argument("--endpoint", help="chat completions base URL")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--resume", action="store_true",
                   help="skip items already present in the results log")
    p.set_defaults(func=cmd_bench)

    return parser


def _all_defaults(parser):
    defaults = {}
    stack = [parser]
    while stack:
        p = stack.pop()
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
            else:
                defaults[action.dest] = action.default
    return defaults


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = _all_defaults(parser)
    try:
        args = _apply_config_file(args, defaults)
        return args.func(args)
    except SpatialError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
