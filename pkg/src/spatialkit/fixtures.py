"""Builds the shipped 10-item synthetic benchmark fixture.

The fixture is fully self-contained: ray-cast scenes with known camera
motion, precomputed bundles, a dataset file, and a digest-keyed chat
fixture that replays a solvable session for every item. Bench runs over
it are deterministic and score 10/10.
"""

from __future__ import annotations

import json
from pathlib import Path

from .agent import AgentConfig, RecordingChatClient, ScriptedChatClient
from .bench import agent_pipeline, load_dataset, result_from_outcome
from .bundle import load_bundle, save_bundle
from .synthetic import (
    SyntheticSceneSpec,
    default_objects,
    named_trajectory,
    sector_trajectory,
    synthesize_scene,
)

FIXTURE_CONFIG = AgentConfig(codegen_model="mock", answer_model="mock",
                             example_count=2)

_MOTION_PROGRAM = """\
Reasoning: camera motion between views is directly readable from the
reconstructed extrinsics, so reconstruct and describe the motion.
```python
def program(input_scene: Scene):
    reconstruction = pySpatial.reconstruct(input_scene)
    camera_motion = pySpatial.describe_camera_motion(reconstruction)
    return camera_motion
```
"""

# id, category, kind, payload
_DIRECTION_ITEMS = [
    ("item_00", "rotation", "forward"),
    ("item_01", "rotation", "right"),
    ("item_02", "rotation", "backward-left"),
    ("item_03", "among", "forward-right"),
    ("item_04", "among", "left"),
    ("item_05", "among", "backward"),
    ("item_06", "around", "forward-left"),
]

_OPTION_KEYS = ("A", "B", "C", "D")

# distractor labels per item, truth inserted at a fixed slot
_DISTRACTORS = ["backward-right", "forward", "right", "left"]


def _direction_options(truth, slot):
    labels = [d for d in _DISTRACTORS if d != truth][:3]
    labels.insert(slot % 4, truth)
    options = dict(zip(_OPTION_KEYS, labels))
    key = _OPTION_KEYS[slot % 4]
    return options, key


def _spec_with(poses):
    return SyntheticSceneSpec(objects=default_objects(), trajectory=poses,
                              width=128, height=96)


def _write_bundle(root, item_id, poses):
    bundle, _ = synthesize_scene(_spec_with(poses))
    out = Path(root) / "bundles" / item_id
    save_bundle(bundle, out)
    images = sorted(p.relative_to(root).as_posix()
                    for p in (out / "images").glob("*.png"))
    return images


def build_bench_fixture(root):
    """Materialize the fixture under root; returns the key file paths.

    Writes bundles/, dataset.jsonl (full 10 items), dataset_mindcube.jsonl
    (the multi-choice subset in mindcube shape), and chat_fixtures.jsonl.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    responses = {}  # item id -> (codegen response, answer response)

    for i, (item_id, category, truth_label) in enumerate(_DIRECTION_ITEMS):
        poses, _ = sector_trajectory(truth_label, offset_deg=5.0 * ((i % 3) - 1))
        images = _write_bundle(root, item_id, poses)
        options, key = _direction_options(truth_label, slot=i)
        records.append({
            "id": item_id,
            "question": "Based on these two views of the same room: in "
                        "which direction did I move from the first view "
                        "to the second view?",
            "options": options,
            "images": images,
            "answer": key,
            "answer_type": "multi-choice",
            "category": category,
        })
        responses[item_id] = (_MOTION_PROGRAM, f"The answer is {key}.")

    # yes/no item over a lateral track
    poses, _ = named_trajectory("lateral")
    images = _write_bundle(root, "item_07", poses)
    records.append({
        "id": "item_07",
        "question": "Across these views of the same room, did the camera "
                    "move to the right?",
        "options": {"yes": "yes", "no": "no"},
        "images": images,
        "answer": "yes",
        "answer_type": "yes-no",
        "category": "around",
    })
    responses["item_07"] = (
        _MOTION_PROGRAM,
        "The motion description says the camera moved right, so the "
        "answer is yes.")

    # numeric count item
    poses, _ = named_trajectory("approach")
    images = _write_bundle(root, "item_08", poses)
    records.append({
        "id": "item_08",
        "question": "How many distinct viewpoints does this sequence contain?",
        "images": images,
        "answer": 4,
        "answer_type": "numeric-count",
        "category": "other",
    })
    responses["item_08"] = (
        _MOTION_PROGRAM,
        "The motion description covers three moves between viewpoints. "
        "The sequence contains 4 viewpoints.")

    # numeric estimate item; lateral track moves 3 steps of 0.4 units
    poses, _ = named_trajectory("lateral")
    images = _write_bundle(root, "item_09", poses)
    records.append({
        "id": "item_09",
        "question": "Approximately how far did the camera travel in total "
                    "across these views, in scene units?",
        "images": images,
        "answer": 1.2,
        "answer_type": "numeric-other",
        "category": "other",
    })
    responses["item_09"] = (
        _MOTION_PROGRAM,
        "Each move covers 0.400 units and there are three moves. The "
        "camera traveled about 1.2 units in total.")

    dataset_path = root / "dataset.jsonl"
    with dataset_path.open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")

    # the same multi-choice items in mindcube shape for loader tests
    mindcube_path = root / "dataset_mindcube.jsonl"
    with mindcube_path.open("w", encoding="utf-8") as f:
        for rec in records:
            if rec["answer_type"] != "multi-choice":
                continue
            embedded = rec["question"] + "\n" + "\n".join(
                f"{k}. {v}" for k, v in rec["options"].items())
            f.write(json.dumps({
                "id": rec["id"],
                "question": embedded,
                "images": rec["images"],
                "setting": rec["category"],
                "answer": rec["answer"],
            }) + "\n")

    # record a solvable chat session per item, keyed by request digest
    fixtures_path = root / "chat_fixtures.jsonl"
    if fixtures_path.exists():
        fixtures_path.unlink()
    items = load_dataset(dataset_path, format="omni3d", images_root=root)
    bundles = {it.id: load_bundle(root / "bundles" / it.id) for it in items}
    for item in items:
        scripted = ScriptedChatClient(list(responses[item.id]))
        client = RecordingChatClient(scripted, fixtures_path)
        pipeline = agent_pipeline(client, FIXTURE_CONFIG,
                                  lambda it: bundles[it.id])
        result = result_from_outcome(item, pipeline(item))
        if result.correct not in (True, 1.0):
            raise RuntimeError(
                f"fixture item {item.id} did not score correct: "
                f"prediction {result.prediction!r}")
    return {
        "dataset": dataset_path,
        "dataset_mindcube": mindcube_path,
        "chat_fixtures": fixtures_path,
        "bundles_root": root / "bundles",
        "root": root,
    }
