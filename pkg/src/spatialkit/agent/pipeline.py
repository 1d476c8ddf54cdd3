"""Two-stage agent: program generation, then evidence-grounded answering.

Stage one asks the code model for a program against the spatial tool API and
repairs parse failures with error feedback. Stage two shows the answer model
the original images, the program, and its output. Any tagged failure falls
back to answering from the images alone; the pipeline always returns an
Answer.
"""

from __future__ import annotations

import io
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import (
    CodegenFailureError,
    ExtractionError,
    SpatialError,
    SplSyntaxError,
    TransportError,
)
from ..lang import ExecutionLimits, ProgramSource, execute, parse_source
from . import prompts
from .client import ChatRequest

FAILURE_STAGES = ("reconstruction", "program-generation", "execution", "answer")


@dataclass(frozen=True)
class AgentConfig:
    codegen_model: str = "gpt-4o"
    answer_model: str = "gpt-4o"
    example_count: int = 2
    retry_budget: int = 2
    temperature: float = 0.0
    max_tokens: int = 2048
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)

    def __post_init__(self):
        if self.example_count not in (0, 2, 4):
            raise ValueError("example_count must be 0, 2, or 4")
        if self.retry_budget < 0:
            raise ValueError("retry budget must be >= 0")


@dataclass(frozen=True)
class Answer:
    raw_text: str
    choice: object  # option key, float, or free text
    stage: str  # with_clue | without_clue

    def __post_init__(self):
        if self.stage not in ("with_clue", "without_clue"):
            raise ValueError(f"unknown answer stage {self.stage!r}")


def build_codegen_prompt(question, config):
    """Ordered text parts of the code-generation prompt; pure in its inputs."""
    parts = [prompts.TASK_DESCRIPTION, prompts.API_SPECIFICATION]
    parts.extend(prompts.EXAMPLE_PROBLEMS[:config.example_count])
    parts.append(prompts.CODE_GENERATION_PROMPT)
    parts.append(f"Question: {question}")
    return parts


_FENCE_RE = re.compile(r"```python\s*\n(.*?)```", re.DOTALL)
_ANY_FENCE_RE = re.compile(r"```\s*\n(.*?)```", re.DOTALL)


def extract_program(response_text, origin="agent"):
    """Pull the first fenced code block out of a model response.

    Prefers ```python blocks; falls back to any fenced block. Text before
    the block is kept as the reasoning metadata.
    """
    m = _FENCE_RE.search(response_text)
    if m is None:
        m = _ANY_FENCE_RE.search(response_text)
    if m is None:
        raise ExtractionError("response contains no fenced code block")
    reasoning = response_text[:m.start()].strip()
    return ProgramSource(text=m.group(1), origin=origin, reasoning=reasoning)


def _scene_image_bytes(scene):
    return tuple(Path(p).read_bytes() for p in scene.image_paths)


def generate_program(scene, config, client):
    """Ask the code model for a program; repair parse failures with feedback.

    Returns (source, ast, request_count). Raises CodegenFailureError once the
    retry budget is spent; transport errors propagate.
    """
    texts = list(build_codegen_prompt(scene.question, config))
    images = _scene_image_bytes(scene)
    attempts = 0
    last_error = None
    while attempts <= config.retry_budget:
        attempts += 1
        response = client.send(ChatRequest(
            model=config.codegen_model,
            system="",
            texts=tuple(texts),
            images=images,
            temperature=config.temperature,
            max_tokens=config.max_tokens,
        ))
        try:
            source = extract_program(response.text)
            ast = parse_source(source)
            return source, ast, attempts
        except (ExtractionError, SplSyntaxError) as e:
            last_error = e
            texts.append(
                "The previous program was rejected with this error:\n"
                f"{e}\nPlease fix it and return the corrected program in a "
                "```python ``` block.")
    raise CodegenFailureError(
        f"no parseable program after {attempts} attempts ({last_error})",
        attempts=attempts)


def _rendered_png(image_value):
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(image_value.rendered.to_u8(), mode="RGB").save(
        buf, format="PNG")
    return buf.getvalue()


def answer_with_clue(scene, output, program, client, config, answer_space=None):
    """Answer using the program text and its executed output as evidence."""
    texts = [
        prompts.ANSWER_BACKGROUND,
        f"Question: {scene.question}",
        f"The generated program:\n```python\n{program.text}\n```",
    ]
    images = list(_scene_image_bytes(scene))
    if output.kind == "text":
        texts.append(f"Execution output:\n{output.payload}")
    else:
        rendered = output.images
        texts.append(
            f"Execution produced {len(rendered)} rendered view(s), attached "
            "after the original input images.")
        images.extend(_rendered_png(img) for img in rendered)
    texts.append(prompts.ANSWER_PROMPT)
    response = client.send(ChatRequest(
        model=config.answer_model,
        system="",
        texts=tuple(texts),
        images=tuple(images),
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    ))
    return Answer(raw_text=response.text,
                  choice=parse_choice(response.text, answer_space),
                  stage="with_clue")


def answer_without_clue(scene, client, config, answer_space=None):
    """Fallback path: answer from the question and images alone."""
    texts = [
        prompts.WITHOUT_VISUAL_CLUE_BACKGROUND,
        f"Question: {scene.question}",
    ]
    response = client.send(ChatRequest(
        model=config.answer_model,
        system="",
        texts=tuple(texts),
        images=_scene_image_bytes(scene),
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    ))
    return Answer(raw_text=response.text,
                  choice=parse_choice(response.text, answer_space),
                  stage="without_clue")


_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")
_ANSWER_IS_RE = re.compile(r"answer\s+is\s*:?\s*\"?([^\s.,;:!\"]+)",
                           re.IGNORECASE)


def parse_choice(text, answer_space=None):
    """Extract the chosen option from free-form model text.

    answer_space: a dict of option key -> option text for multiple choice,
    the string "numeric" for numeric questions, or None for free text.
    First matching rule wins: standalone option token, "answer is X",
    verbatim option-text substring (longest), first number in the final
    sentence for numeric spaces; otherwise the stripped text.
    """
    stripped = text.strip()
    if isinstance(answer_space, dict) and answer_space:
        keys = list(answer_space.keys())
        # rule 1: standalone option token
        for token in re.findall(r"[A-Za-z]+", text):
            for key in keys:
                if len(key) == 1 and token == key:
                    return key
                if len(key) > 1 and token.lower() == key.lower():
                    return key
        # rule 2: "answer is X"
        m = _ANSWER_IS_RE.search(text)
        if m:
            candidate = m.group(1)
            for key in keys:
                if candidate.lower() == key.lower():
                    return key
            for key, option_text in answer_space.items():
                if option_text and candidate.lower() in option_text.lower():
                    return key
        # rule 3: longest verbatim option-text substring
        best = None
        for key, option_text in answer_space.items():
            if option_text and option_text.lower() in text.lower():
                if best is None or len(option_text) > len(answer_space[best]):
                    best = key
        if best is not None:
            return best
        return stripped
    if answer_space == "numeric":
        sentences = re.split(r"(?<=[!?])\s+|(?<=\.)\s+", stripped)
        tail = sentences[-1] if sentences else stripped
        m = _NUMBER_RE.search(tail) or _NUMBER_RE.search(stripped)
        if m:
            return float(m.group(0))
        return stripped
    return stripped


@dataclass
class PipelineOutcome:
    answer: Answer
    failure_stage: str | None
    timings: dict  # codegen / execution / answer seconds
    program_text: str | None = None
    output_kind: str | None = None
    output_text: str | None = None
    trace: list = field(default_factory=list)
    error: str | None = None

    @property
    def succeeded(self):
        return self.failure_stage is None


def _stage_of(exc):
    stage = getattr(exc, "stage", None)
    return stage if stage in FAILURE_STAGES else "execution"


def solve(scene, bundle_provider, client, config, answer_space=None):
    """Run the full per-query pipeline; total — always returns an outcome."""
    timings = {"codegen": 0.0, "execution": 0.0, "answer": 0.0}
    failure = None
    error = None
    program = None
    ast = None
    output = None

    t0 = time.monotonic()
    try:
        program, ast, _ = generate_program(scene, config, client)
    except (CodegenFailureError, TransportError) as e:
        failure, error = "program-generation", str(e)
    timings["codegen"] = time.monotonic() - t0

    if failure is None:
        t0 = time.monotonic()
        try:
            output = execute(ast, scene, bundle_provider, config.limits)
        except SpatialError as e:
            failure, error = _stage_of(e), str(e)
        timings["execution"] = time.monotonic() - t0

    t0 = time.monotonic()
    try:
        if failure is None:
            answer = answer_with_clue(scene, output, program, client, config,
                                      answer_space)
        else:
            answer = answer_without_clue(scene, client, config, answer_space)
    except SpatialError as e:
        if failure is None:
            failure, error = "answer", str(e)
            try:
                answer = answer_without_clue(scene, client, config, answer_space)
            except SpatialError as e2:
                answer = Answer(raw_text="", choice=None, stage="without_clue")
                error = f"{error}; fallback also failed: {e2}"
        else:
            answer = Answer(raw_text="", choice=None, stage="without_clue")
            error = f"{error}; fallback also failed: {e}"
    timings["answer"] = time.monotonic() - t0

    return PipelineOutcome(
        answer=answer,
        failure_stage=failure,
        timings=timings,
        program_text=program.text if program else None,
        output_kind=output.kind if output else None,
        output_text=output.payload if output and output.kind == "text" else None,
        trace=list(output.trace) if output else [],
        error=error,
    )
