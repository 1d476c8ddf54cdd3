"""Sandboxed tree-walking interpreter with hard resource budgets.

The program gets exactly the spatial tool surface (the `pySpatial`
namespace), `range`, `len`, list indexing/append, and field access on the
scene/reconstruction values. Execution always terminates: every statement
and expression costs a step, loops are iteration-capped, rendering is
budgeted, and a wall clock backstops everything.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .. import geometry, renderer
from ..errors import (
    ImageBudgetError,
    IndexOutOfRangeError,
    LoopLimitError,
    StepLimitError,
    TypeMismatchError,
    UnknownNameError,
    WallClockError,
)
from . import parser as P


@dataclass(frozen=True)
class ProgramSource:
    """Agent-generated program text plus where it came from."""

    text: str
    origin: str = "agent"  # agent | fixture | cli
    reasoning: str = ""  # free-form text preceding the extracted code block

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("program source must be non-empty")
        if self.origin not in ("agent", "fixture", "cli"):
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class ExecutionLimits:
    max_steps: int = 100_000
    max_rendered_images: int = 32
    max_loop_iterations: int = 10_000
    wall_clock_budget: float = 30.0

    def __post_init__(self):
        if min(self.max_steps, self.max_rendered_images,
               self.max_loop_iterations) <= 0 or self.wall_clock_budget <= 0:
            raise ValueError("all execution limits must be positive")


@dataclass
class ProgramOutput:
    kind: str  # text | image | image_list
    payload: object
    trace: list

    @property
    def images(self):
        if self.kind == "image":
            return [self.payload]
        if self.kind == "image_list":
            return list(self.payload)
        return []


def serialize_trace(trace):
    """Trace as line-delimited JSON records."""
    return "\n".join(json.dumps(rec) for rec in trace)


# --- runtime values --------------------------------------------------------------


class ImageValue:
    """An image the program can handle: an input frame or a rendered view."""

    def __init__(self, kind, frame_index=None, rendered=None, path=None):
        self.kind = kind  # "source" | "rendered"
        self.frame_index = frame_index
        self.rendered = rendered
        self.path = path

    def describe(self):
        if self.kind == "source":
            return f"<input image {self.frame_index}>"
        return "<rendered image>"


class DepthValue:
    def __init__(self, depth, frame_index):
        self.depth = depth
        self.frame_index = frame_index

    def describe(self):
        v = self.depth.values
        finite = v[np.isfinite(v)]
        return (f"<depth map {self.depth.width}x{self.depth.height}, "
                f"min {finite.min():.3f}, max {finite.max():.3f}, "
                f"mean {finite.mean():.3f}>")


class SceneValue:
    """What `input_scene` exposes inside a program."""

    def __init__(self, question, images):
        self.question = question
        self.images = images  # list of ImageValue


class ReconValue:
    def __init__(self, bundle, point_cloud):
        self.bundle = bundle
        self.point_cloud = point_cloud
        self.extrinsics = list(bundle.extrinsics)
        self.intrinsics = bundle.frames[0].intrinsics


class RangeValue:
    """Lazy range; iterated with the loop cap, never materialized."""

    def __init__(self, start, stop, step):
        self.start, self.stop, self.step = start, stop, step

    def __len__(self):
        r = range(self.start, self.stop, self.step)
        return len(r)


def scene_value_from(scene):
    images = [ImageValue("source", frame_index=i, path=p)
              for i, p in enumerate(scene.image_paths)]
    return SceneValue(scene.question, images)


def render_text(value):
    """Total text rendering used when a program returns a non-image value."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool) or value is None:
        return repr(value)
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, ImageValue):
        return value.describe()
    if isinstance(value, DepthValue):
        return value.describe()
    if isinstance(value, geometry.ExtrinsicPose):
        rows = ["  ".join(f"{x: .6f}" for x in row) for row in value.matrix34]
        return "<pose [R|t]>\n" + "\n".join(rows)
    if isinstance(value, geometry.PointCloud):
        return f"<point cloud with {len(value)} points>"
    if isinstance(value, ReconValue):
        return (f"<reconstruction of {len(value.extrinsics)} views, "
                f"{len(value.point_cloud)} points>")
    if isinstance(value, SceneValue):
        return f"<scene with {len(value.images)} images>"
    if isinstance(value, RangeValue):
        return f"range({value.start}, {value.stop}, {value.step})"
    if isinstance(value, list):
        return "[" + ", ".join(render_text(v) for v in value) + "]"
    return f"<{type(value).__name__}>"


def classify_output(value, trace):
    if isinstance(value, ImageValue):
        return ProgramOutput("image", value, trace)
    if isinstance(value, list) and value \
            and all(isinstance(v, ImageValue) for v in value):
        return ProgramOutput("image_list", value, trace)
    return ProgramOutput("text", render_text(value), trace)


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    def __init__(self, scene, bundle_provider, limits):
        self.scene = scene
        self.bundle_provider = bundle_provider
        self.limits = limits
        self.steps = 0
        self.rendered = 0
        self.trace = []
        self._bundle = None
        self._cloud = None
        self._deadline = None
        self.tools = ToolNamespace(self)

    # budgets ---------------------------------------------------------------
    def tick(self, node):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise StepLimitError(
                f"step budget of {self.limits.max_steps} exhausted",
                node.line, node.col, self.trace)
        if self.steps % 256 == 0 and time.monotonic() > self._deadline:
            raise WallClockError(
                f"wall clock budget of {self.limits.wall_clock_budget}s "
                "exhausted", node.line, node.col, self.trace)

    def fail(self, exc_cls, message, node):
        raise exc_cls(message, node.line, node.col, self.trace)

    # scene/bundle access ------------------------------------------------------
    def bundle(self, node):
        if self._bundle is None:
            self._bundle = self.bundle_provider(self.scene)
        return self._bundle

    def cloud(self, node):
        if self._cloud is None:
            self._cloud = geometry.build_point_cloud(self.bundle(node))
        return self._cloud

    def record(self, call, args_summary, output_kind):
        self.trace.append({
            "step": self.steps,
            "call": call,
            "args_summary": args_summary,
            "output_kind": output_kind,
        })

    # execution ---------------------------------------------------------------
    def run(self, module):
        self._deadline = time.monotonic() + self.limits.wall_clock_budget
        func = module.func
        env = {func.param: scene_value_from(self.scene)}
        try:
            self.exec_block(func.body, env)
            result = None
        except _ReturnSignal as r:
            result = r.value
        return classify_output(result, self.trace)

    def exec_block(self, stmts, env):
        for stmt in stmts:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt, env):
        self.tick(stmt)
        if isinstance(stmt, P.Assign):
            env[stmt.target] = self.eval(stmt.value, env)
        elif isinstance(stmt, P.ExprStmt):
            self.eval(stmt.value, env)
        elif isinstance(stmt, P.Return):
            value = self.eval(stmt.value, env) if stmt.value is not None else None
            raise _ReturnSignal(value)
        elif isinstance(stmt, P.Pass):
            pass
        elif isinstance(stmt, P.For):
            self.exec_for(stmt, env)
        elif isinstance(stmt, P.If):
            for cond, body in stmt.branches:
                if self.truthy(self.eval(cond, env), cond):
                    self.exec_block(body, env)
                    return
            if stmt.orelse:
                self.exec_block(stmt.orelse, env)
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def exec_for(self, stmt, env):
        iterable = self.eval(stmt.iterable, env)
        if isinstance(iterable, RangeValue):
            items = range(iterable.start, iterable.stop, iterable.step)
        elif isinstance(iterable, list):
            items = iterable
        else:
            self.fail(TypeMismatchError,
                      "for-loops iterate over range(...) or list values only",
                      stmt)
        count = 0
        for item in items:
            count += 1
            if count > self.limits.max_loop_iterations:
                self.fail(LoopLimitError,
                          f"loop iteration cap of "
                          f"{self.limits.max_loop_iterations} exceeded", stmt)
            env[stmt.var] = item
            self.exec_block(stmt.body, env)

    def truthy(self, value, node):
        if isinstance(value, (bool, int, float, str, list)) or value is None:
            return bool(value)
        self.fail(TypeMismatchError,
                  f"value of type {type(value).__name__} has no truth value",
                  node)

    # expression evaluation -----------------------------------------------------
    def eval(self, node, env):
        self.tick(node)
        if isinstance(node, P.Name):
            if node.id in env:
                return env[node.id]
            if node.id == "pySpatial":
                return self.tools
            if node.id in ("range", "len"):
                return _Builtin(node.id)
            self.fail(UnknownNameError, f"unknown name {node.id!r}", node)
        if isinstance(node, (P.Num, P.Str, P.Const)):
            return node.value
        if isinstance(node, P.ListLit):
            return [self.eval(i, env) for i in node.items]
        if isinstance(node, P.Attr):
            return self.eval_attr(node, env)
        if isinstance(node, P.Index):
            return self.eval_index(node, env)
        if isinstance(node, P.Call):
            return self.eval_call(node, env)
        if isinstance(node, P.UnaryOp):
            return self.eval_unary(node, env)
        if isinstance(node, P.BinOp):
            return self.eval_binop(node, env)
        if isinstance(node, P.BoolOp):
            left = self.eval(node.left, env)
            if node.op == "and":
                if not self.truthy(left, node.left):
                    return left
                return self.eval(node.right, env)
            if self.truthy(left, node.left):
                return left
            return self.eval(node.right, env)
        if isinstance(node, P.Compare):
            return self.eval_compare(node, env)
        raise TypeError(f"unknown expression {node!r}")

    def eval_attr(self, node, env):
        obj = self.eval(node.obj, env)
        if isinstance(obj, ToolNamespace):
            return obj.lookup(node.name, node)
        if isinstance(obj, SceneValue):
            if node.name in ("question", "images"):
                return getattr(obj, node.name)
            self.fail(UnknownNameError,
                      f"scene has no attribute {node.name!r}", node)
        if isinstance(obj, ReconValue):
            if node.name in ("extrinsics", "point_cloud", "intrinsics"):
                return getattr(obj, node.name)
            self.fail(UnknownNameError,
                      f"reconstruction has no attribute {node.name!r}", node)
        if isinstance(obj, list) and node.name == "append":
            return _ListAppend(obj)
        self.fail(UnknownNameError,
                  f"{type(obj).__name__} has no attribute {node.name!r}", node)

    def eval_index(self, node, env):
        obj = self.eval(node.obj, env)
        idx = self.eval(node.index, env)
        if not isinstance(obj, (list, str)):
            self.fail(TypeMismatchError,
                      f"{type(obj).__name__} is not indexable", node)
        if not isinstance(idx, int) or isinstance(idx, bool):
            self.fail(TypeMismatchError, "index must be an integer", node)
        try:
            return obj[idx]
        except IndexError:
            self.fail(IndexOutOfRangeError,
                      f"index {idx} out of range for length {len(obj)}", node)

    def eval_call(self, node, env):
        func = self.eval(node.func, env)
        args = [self.eval(a, env) for a in node.args]
        kwargs = {k: self.eval(v, env) for k, v in node.kwargs}
        if isinstance(func, _Builtin):
            return self.call_builtin(func.name, args, kwargs, node)
        if isinstance(func, _ListAppend):
            if len(args) != 1 or kwargs:
                self.fail(TypeMismatchError,
                          "append takes exactly one argument", node)
            func.target.append(args[0])
            return None
        if isinstance(func, BoundTool):
            return func.call(args, kwargs, node)
        self.fail(TypeMismatchError,
                  f"{type(func).__name__} is not callable", node)

    def call_builtin(self, name, args, kwargs, node):
        if kwargs:
            self.fail(TypeMismatchError,
                      f"{name} takes no keyword arguments", node)
        if name == "len":
            if len(args) != 1 or not isinstance(args[0], (list, str, RangeValue)):
                self.fail(TypeMismatchError,
                          "len expects one list, string, or range", node)
            return len(args[0])
        if name == "range":
            if not 1 <= len(args) <= 3 or not all(
                    isinstance(a, int) and not isinstance(a, bool) for a in args):
                self.fail(TypeMismatchError,
                          "range expects 1-3 integer arguments", node)
            if len(args) == 1:
                return RangeValue(0, args[0], 1)
            if len(args) == 2:
                return RangeValue(args[0], args[1], 1)
            if args[2] == 0:
                self.fail(TypeMismatchError, "range step must not be zero", node)
            return RangeValue(args[0], args[1], args[2])
        raise AssertionError(name)

    def eval_unary(self, node, env):
        value = self.eval(node.operand, env)
        if node.op == "not":
            return not self.truthy(value, node.operand)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(TypeMismatchError,
                      f"unary {node.op!r} needs a number", node)
        return value if node.op == "+" else -value

    def eval_binop(self, node, env):
        left = self.eval(node.left, env)
        right = self.eval(node.right, env)
        op = node.op
        if op == "+":
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            if isinstance(left, list) and isinstance(right, list):
                return left + right
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                   for v in (left, right)):
            self.fail(TypeMismatchError,
                      f"operator {op!r} not defined for "
                      f"{type(left).__name__} and {type(right).__name__}", node)
        try:
            if op == "+":
                return left + right
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if op == "/":
                return left / right
            if op == "//":
                return left // right
            if op == "%":
                return left % right
            if op == "**":
                if abs(right) > 1024:
                    self.fail(TypeMismatchError, "exponent too large", node)
                return left ** right
        except ZeroDivisionError:
            self.fail(TypeMismatchError, "division by zero", node)
        raise AssertionError(op)

    def eval_compare(self, node, env):
        left = self.eval(node.left, env)
        right = self.eval(node.right, env)
        op = node.op
        if op in ("==", "!="):
            try:
                eq = left == right
            except Exception:
                eq = left is right
            return eq if op == "==" else not eq
        if not all(isinstance(v, (int, float, str)) for v in (left, right)) \
                or isinstance(left, str) != isinstance(right, str):
            self.fail(TypeMismatchError,
                      f"cannot order {type(left).__name__} and "
                      f"{type(right).__name__}", node)
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        raise AssertionError(op)


class _Builtin:
    def __init__(self, name):
        self.name = name


class _ListAppend:
    def __init__(self, target):
        self.target = target


class BoundTool:
    def __init__(self, ns, name):
        self.ns = ns
        self.name = name

    def call(self, args, kwargs, node):
        return self.ns.dispatch(self.name, args, kwargs, node)


class ToolNamespace:
    """The `pySpatial` builtin table; calls outside it are unknown names."""

    TOOLS = frozenset({
        "reconstruct", "describe_camera_motion", "synthesize_novel_view",
        "rotate_right", "rotate_left", "move_forward", "move_backward",
        "turn_around", "estimate_depth",
    })

    def __init__(self, interp):
        self.interp = interp

    def lookup(self, name, node):
        if name not in self.TOOLS:
            self.interp.fail(UnknownNameError,
                             f"pySpatial has no tool {name!r}", node)
        return BoundTool(self, name)

    def _expect_pose(self, args, name, node):
        if not args or not isinstance(args[0], geometry.ExtrinsicPose):
            self.interp.fail(TypeMismatchError,
                             f"pySpatial.{name} expects a camera pose", node)
        return args[0]

    def _number_kwarg(self, kwargs, key, default, name, node):
        value = kwargs.pop(key, default)
        if kwargs:
            extra = ", ".join(kwargs)
            self.interp.fail(TypeMismatchError,
                             f"pySpatial.{name}: unexpected arguments {extra}",
                             node)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.interp.fail(TypeMismatchError,
                             f"pySpatial.{name}: {key} must be a number", node)
        return float(value)

    def dispatch(self, name, args, kwargs, node):
        interp = self.interp
        result = self._dispatch(name, list(args), dict(kwargs), node)
        kind = {
            "reconstruct": "reconstruction",
            "describe_camera_motion": "text",
            "synthesize_novel_view": "image",
            "estimate_depth": "depth",
        }.get(name, "pose")
        interp.record(f"pySpatial.{name}", self._summary(args, kwargs), kind)
        return result

    @staticmethod
    def _summary(args, kwargs):
        parts = [render_text(a).splitlines()[0] for a in args]
        parts += [f"{k}={render_text(v)}" for k, v in kwargs.items()]
        return ", ".join(parts)

    def _dispatch(self, name, args, kwargs, node):
        interp = self.interp
        if name == "reconstruct":
            if len(args) != 1 or not isinstance(args[0], SceneValue) or kwargs:
                interp.fail(TypeMismatchError,
                            "pySpatial.reconstruct expects the scene", node)
            bundle = interp.bundle(node)
            return ReconValue(bundle, interp.cloud(node))
        if name == "describe_camera_motion":
            if len(args) != 1 or kwargs:
                interp.fail(TypeMismatchError,
                            "pySpatial.describe_camera_motion expects a "
                            "reconstruction", node)
            arg = args[0]
            if isinstance(arg, ReconValue):
                poses = arg.extrinsics
                units = arg.bundle.units
            elif isinstance(arg, list) and arg and all(
                    isinstance(p, geometry.ExtrinsicPose) for p in arg):
                poses = arg
                units = interp.bundle(node).units
            else:
                interp.fail(TypeMismatchError,
                            "pySpatial.describe_camera_motion expects a "
                            "reconstruction or pose list", node)
            try:
                return geometry.describe_camera_motion(poses, units=units)
            except geometry.InsufficientViewsError as e:
                interp.fail(TypeMismatchError, str(e), node)
        if name == "synthesize_novel_view":
            if len(args) != 2 or kwargs:
                interp.fail(TypeMismatchError,
                            "pySpatial.synthesize_novel_view expects "
                            "(reconstruction, pose)", node)
            recon, pose = args
            if not isinstance(recon, ReconValue) \
                    or not isinstance(pose, geometry.ExtrinsicPose):
                interp.fail(TypeMismatchError,
                            "pySpatial.synthesize_novel_view expects "
                            "(reconstruction, pose)", node)
            if interp.rendered >= interp.limits.max_rendered_images:
                interp.fail(ImageBudgetError,
                            f"render budget of "
                            f"{interp.limits.max_rendered_images} images "
                            "exhausted", node)
            interp.rendered += 1
            image = renderer.synthesize_novel_view(
                recon.point_cloud, pose, recon.intrinsics)
            return ImageValue("rendered", rendered=image)
        if name in ("rotate_right", "rotate_left"):
            pose = self._expect_pose(args, name, node)
            angle = self._number_kwarg(
                dict(kwargs) if kwargs else
                ({"angle": args[1]} if len(args) > 1 else {}),
                "angle", geometry.DEFAULT_ROTATE_DEG, name, node)
            fn = geometry.rotate_right if name == "rotate_right" \
                else geometry.rotate_left
            return fn(pose, angle)
        if name in ("move_forward", "move_backward"):
            pose = self._expect_pose(args, name, node)
            distance = self._number_kwarg(
                dict(kwargs) if kwargs else
                ({"distance": args[1]} if len(args) > 1 else {}),
                "distance", geometry.DEFAULT_MOVE_STEP, name, node)
            if distance < 0:
                interp.fail(TypeMismatchError,
                            f"pySpatial.{name}: distance must be >= 0", node)
            fn = geometry.move_forward if name == "move_forward" \
                else geometry.move_backward
            return fn(pose, distance)
        if name == "turn_around":
            pose = self._expect_pose(args, name, node)
            if len(args) > 1 or kwargs:
                interp.fail(TypeMismatchError,
                            "pySpatial.turn_around takes only a pose", node)
            return geometry.turn_around(pose)
        if name == "estimate_depth":
            if len(args) != 1 or kwargs or not isinstance(args[0], ImageValue):
                interp.fail(TypeMismatchError,
                            "pySpatial.estimate_depth expects an input image",
                            node)
            img = args[0]
            if img.kind != "source":
                interp.fail(TypeMismatchError,
                            "pySpatial.estimate_depth works on input images, "
                            "not rendered views", node)
            bundle = interp.bundle(node)
            if img.frame_index >= len(bundle.frames):
                interp.fail(IndexOutOfRangeError,
                            f"no depth for image {img.frame_index}", node)
            return DepthValue(bundle.frames[img.frame_index].depth,
                              img.frame_index)
        raise AssertionError(name)


def builtin_table():
    """Names callable from programs, for documentation and prompt checks."""
    return {
        "namespaces": {"pySpatial": sorted(ToolNamespace.TOOLS)},
        "functions": ["range", "len"],
        "attributes": {
            "scene": ["images", "question"],
            "reconstruction": ["extrinsics", "point_cloud", "intrinsics"],
            "list": ["append"],
        },
    }


def execute(ast, scene, bundle_provider, limits=None):
    """Run `program(input_scene)` under the sandbox contract.

    Deterministic given (ast, bundle, limits); raises located runtime errors
    carrying the partial trace.
    """
    limits = limits or ExecutionLimits()
    interp = Interpreter(scene, bundle_provider, limits)
    return interp.run(ast)
