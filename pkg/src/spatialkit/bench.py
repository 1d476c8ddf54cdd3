"""Benchmark harness: dataset loading, scoring, and a resumable runner.

Scoring is a pure function of (results, items), so re-scoring a results log
reproduces the report bit-identically. The runner appends one JSON line per
completed item and can resume a crashed run by skipping ids already logged.
"""

from __future__ import annotations

import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DatasetError
from .scene import Scene

CATEGORIES = ("rotation", "among", "around", "other")
ANSWER_TYPES = ("multi-choice", "yes-no", "numeric-count", "numeric-other")

# relative-error thresholds for mean relative accuracy, pinned for audit
MRA_THRESHOLDS = tuple(0.50 + 0.05 * i for i in range(10))


@dataclass(frozen=True)
class BenchItem:
    id: str
    question: str
    options: dict  # ordered letter -> text; empty for numeric items
    image_paths: tuple
    category: str
    ground_truth: object  # option key or number
    answer_type: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.answer_type not in ANSWER_TYPES:
            raise ValueError(f"unknown answer type {self.answer_type!r}")
        if self.answer_type in ("multi-choice", "yes-no"):
            if self.options and self.ground_truth not in self.options:
                raise ValueError(
                    f"item {self.id}: ground truth {self.ground_truth!r} "
                    "not among options")
        else:
            import math
            if not math.isfinite(float(self.ground_truth)):
                raise ValueError(f"item {self.id}: non-finite ground truth")

    def answer_space(self):
        if self.answer_type in ("multi-choice", "yes-no"):
            return dict(self.options) if self.options else None
        return "numeric"


@dataclass(frozen=True)
class BenchResult:
    item_id: str
    prediction: object
    correct: object  # bool, MRA float in [0,1], or None when excluded
    timings: dict  # codegen / execution / answer seconds
    failure_stage: str | None = None
    answer_stage: str = "with_clue"

    def __post_init__(self):
        for v in self.timings.values():
            if v < 0:
                raise ValueError("timings must be non-negative")

    def to_json(self):
        return json.dumps({
            "item_id": self.item_id,
            "prediction": self.prediction,
            "correct": self.correct,
            "timings": self.timings,
            "failure_stage": self.failure_stage,
            "answer_stage": self.answer_stage,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line):
        rec = json.loads(line)
        return cls(item_id=rec["item_id"], prediction=rec["prediction"],
                   correct=rec["correct"], timings=rec["timings"],
                   failure_stage=rec.get("failure_stage"),
                   answer_stage=rec.get("answer_stage", "with_clue"))


@dataclass(frozen=True)
class BenchReport:
    overall: float
    per_category: dict
    mra: float | None
    failure_counts: dict
    mean_timings: dict
    item_count: int
    mra_thresholds: tuple = MRA_THRESHOLDS

    def to_dict(self):
        return {
            "overall": self.overall,
            "per_category": self.per_category,
            "mra": self.mra,
            "failure_counts": self.failure_counts,
            "mean_timings": self.mean_timings,
            "item_count": self.item_count,
            "mra_thresholds": list(self.mra_thresholds),
        }

    def table(self):
        """Plain-text accuracy table, one row, category columns."""
        cols = ["Overall", "Rotation", "Among", "Around"]
        vals = [self.overall,
                self.per_category.get("rotation"),
                self.per_category.get("among"),
                self.per_category.get("around")]
        cells = ["  -  " if v is None else f"{v:.3f}" for v in vals]
        header = " | ".join(f"{c:>8}" for c in cols)
        row = " | ".join(f"{c:>8}" for c in cells)
        rule = "-+-".join("-" * 8 for _ in cols)
        return "\n".join([header, rule, row])


_OPTION_LINE_RE = re.compile(r"^\s*([A-Z])\.\s*(.+?)\s*$")
_YES_NO = {"yes", "no"}


def split_options(question):
    """Split embedded options off a question by the leading "X." line rule.

    Returns (stem, options). Questions without recognizable option lines
    come back with an empty options map (free text).
    """
    stem_lines = []
    options = {}
    for line in question.splitlines():
        m = _OPTION_LINE_RE.match(line)
        if m:
            options[m.group(1)] = m.group(2)
        elif options:
            # text after the option block stays attached to the last option
            if line.strip():
                options[list(options)[-1]] += " " + line.strip()
        else:
            stem_lines.append(line)
    if len(options) < 2:
        return question.strip(), {}
    return "\n".join(stem_lines).strip(), options


def _category_of(setting):
    s = str(setting).lower()
    for cat in ("rotation", "among", "around"):
        if cat in s:
            return cat
    return "other"


def _resolve_images(paths, images_root, item_id):
    resolved = []
    for p in paths:
        full = Path(images_root) / p if images_root else Path(p)
        if not full.is_file():
            raise DatasetError(f"item {item_id}: image not found: {full}")
        resolved.append(str(full))
    return tuple(resolved)


def load_dataset(path, format="mindcube", images_root=None):
    """Parse a line-delimited JSON dataset into BenchItems.

    mindcube records: {id, question (options embedded), images, setting,
    answer}. omni3d records: {id, question, images, answer, answer_type,
    options?, category?}. Image paths resolve against images_root.
    """
    if format not in ("mindcube", "omni3d"):
        raise ValueError(f"unknown dataset format {format!r}")
    items = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetError(f"{path}:{lineno}: malformed record: {e}") from e
        try:
            if format == "mindcube":
                items.append(_parse_mindcube(rec, images_root))
            else:
                items.append(_parse_omni3d(rec, images_root))
        except (KeyError, ValueError, TypeError) as e:
            raise DatasetError(f"{path}:{lineno}: {e}") from e
    return items


def _parse_mindcube(rec, images_root):
    item_id = str(rec["id"])
    question, options = split_options(rec["question"])
    truth = str(rec["answer"]).strip()
    if options:
        answer_type = "multi-choice"
        if set(k.lower() for k in options) == _YES_NO:
            answer_type = "yes-no"
    elif truth.lower() in _YES_NO:
        answer_type = "yes-no"
        options = {}
    else:
        answer_type = "multi-choice"
    return BenchItem(
        id=item_id,
        question=question,
        options=options,
        image_paths=_resolve_images(rec["images"], images_root, item_id),
        category=_category_of(rec.get("setting", "other")),
        ground_truth=truth,
        answer_type=answer_type,
    )


def _parse_omni3d(rec, images_root):
    item_id = str(rec["id"])
    answer_type = rec["answer_type"]
    if answer_type.startswith("numeric"):
        truth = float(rec["answer"])
        options = {}
        question = rec["question"]
    else:
        truth = str(rec["answer"]).strip()
        if "options" in rec:
            question, options = rec["question"], dict(rec["options"])
        else:
            question, options = split_options(rec["question"])
    return BenchItem(
        id=item_id,
        question=question,
        options=options,
        image_paths=_resolve_images(rec["images"], images_root, item_id),
        category=_category_of(rec.get("category", "other")),
        ground_truth=truth,
        answer_type=answer_type,
    )


def score_mra(prediction, truth):
    """Mean relative accuracy over the pinned threshold set; in [0,1]."""
    truth = float(truth)
    if truth == 0.0:
        raise ValueError("mean relative accuracy undefined for zero truth")
    rel = abs(float(prediction) - truth) / abs(truth)
    satisfied = sum(1 for theta in MRA_THRESHOLDS if rel < 1.0 - theta)
    return satisfied / len(MRA_THRESHOLDS)


def grade(item, prediction):
    """Per-item correctness: bool for discrete items, MRA for numeric-other.

    Returns None for items excluded from scoring (zero numeric truth).
    """
    if prediction is None:
        return False if item.answer_type != "numeric-other" else 0.0
    if item.answer_type in ("multi-choice", "yes-no"):
        return str(prediction).strip().lower() == \
            str(item.ground_truth).strip().lower()
    try:
        pred = float(prediction)
    except (TypeError, ValueError):
        return False if item.answer_type == "numeric-count" else 0.0
    if item.answer_type == "numeric-count":
        return pred == float(item.ground_truth)
    if float(item.ground_truth) == 0.0:
        return None
    return score_mra(pred, item.ground_truth)


def score_accuracy(results, items):
    """Item-weighted overall and per-category means of the correct field.

    Booleans count 1/0, MRA scores count fractionally, excluded items are
    dropped. Categories with no scored items are absent from the map.
    """
    if len(results) != len(items):
        raise ValueError(
            f"got {len(results)} results for {len(items)} items")
    by_id = {r.item_id: r for r in results}
    if len(by_id) != len(items):
        raise ValueError("duplicate result ids")
    scores = []
    per_cat = {}
    for item in items:
        r = by_id.get(item.id)
        if r is None:
            raise ValueError(f"no result for item {item.id}")
        if r.correct is None:
            continue
        val = float(r.correct)
        scores.append(val)
        per_cat.setdefault(item.category, []).append(val)
    overall = sum(scores) / len(scores) if scores else 0.0
    return overall, {c: sum(v) / len(v) for c, v in per_cat.items()}


def build_report(results, items):
    overall, per_cat = score_accuracy(results, items)
    type_of = {it.id: it.answer_type for it in items}
    mra_scores = [float(r.correct) for r in results
                  if type_of.get(r.item_id) == "numeric-other"
                  and r.correct is not None]
    failures = {}
    for r in results:
        if r.failure_stage:
            failures[r.failure_stage] = failures.get(r.failure_stage, 0) + 1
    timing_keys = ("codegen", "execution", "answer")
    mean_timings = {
        k: sum(r.timings.get(k, 0.0) for r in results) / max(len(results), 1)
        for k in timing_keys}
    return BenchReport(
        overall=overall,
        per_category=per_cat,
        mra=sum(mra_scores) / len(mra_scores) if mra_scores else None,
        failure_counts=failures,
        mean_timings=mean_timings,
        item_count=len(items),
    )


def result_from_outcome(item, outcome):
    """Fold a pipeline outcome into a scored BenchResult."""
    prediction = outcome.answer.choice
    return BenchResult(
        item_id=item.id,
        prediction=prediction,
        correct=grade(item, prediction),
        timings=dict(outcome.timings),
        failure_stage=outcome.failure_stage,
        answer_stage=outcome.answer.stage,
    )


def agent_pipeline(client, config, bundle_resolver):
    """Build an item -> PipelineOutcome callable around the agent.

    bundle_resolver(item) must return the reconstruction bundle for the
    item's images; precomputed lookup or an on-the-fly backend both fit.
    """
    from .agent import solve

    def run(item):
        scene = Scene(question=item.question,
                      image_paths=list(item.image_paths))
        provider = lambda _scene: bundle_resolver(item)
        return solve(scene, provider, client, config,
                     answer_space=item.answer_space())

    return run


def read_results_log(path):
    results = []
    p = Path(path)
    if not p.exists():
        return results
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            results.append(BenchResult.from_json(line))
    return results


def run_bench(items, pipeline, parallelism=1, results_path=None, resume=False):
    """Execute items under a parallelism bound and score the run.

    Per-item results append to results_path as they complete; with resume,
    ids already in the log are skipped and their logged results reused.
    Item failures never abort the run; they arrive as tagged results.
    """
    ids = [it.id for it in items]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate item ids in dataset")
    done = {}
    if resume and results_path:
        for r in read_results_log(results_path):
            done[r.item_id] = r
    pending = [it for it in items if it.id not in done]

    lock = threading.Lock()
    log_file = None
    if results_path:
        Path(results_path).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(results_path, "a", encoding="utf-8")

    def run_one(item):
        outcome = pipeline(item)
        result = result_from_outcome(item, outcome)
        with lock:
            done[item.id] = result
            if log_file:
                log_file.write(result.to_json() + "\n")
                log_file.flush()
        return result

    start = time.monotonic()
    try:
        if parallelism <= 1:
            for item in pending:
                run_one(item)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                list(pool.map(run_one, pending))
    finally:
        if log_file:
            log_file.close()
    wall = time.monotonic() - start

    results = [done[it.id] for it in items]
    report = build_report(results, items)
    return report, results, wall
